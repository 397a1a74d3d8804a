#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icsim/dbn.hpp"
#include "icsim/defender.hpp"
#include "icsim/engine.hpp"
#include "icsim/rng.hpp"

namespace icsim {

/// What a defender sees before choosing its actions for the coming hour.
/// `net` is used for topology only (node kinds, IPs, PLC count); policies do
/// not read compromise flags.
struct PolicyContext {
  const NetworkState& net;
  const StepResult& last;
  const std::vector<Belief>* beliefs = nullptr;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  virtual bool needs_beliefs() const { return false; }
  virtual void reset(const NetworkState& net) { (void)net; }
  virtual std::vector<DefenderCommand> act(const PolicyContext& ctx, Rng& rng) = 0;
};

class NoOpPolicy : public Policy {
 public:
  std::string_view name() const override { return "noop"; }
  std::vector<DefenderCommand> act(const PolicyContext&, Rng&) override { return {}; }
};

/// Poisson mean calibrated so the random policy's average IT cost per step
/// is about 0.60 on the reference network.
inline constexpr double kCalibratedRandomRate = 200.0;

struct RandomPolicyParams {
  double rate = kCalibratedRandomRate;  // Poisson mean of actions per hour
  /// Categorical over action types; PLC actions are added only while a PLC is offline.
  std::vector<std::pair<DefenderAction, double>> weights{
      {DefenderAction::SimpleScan, 0.35},   {DefenderAction::AdvancedScan, 0.15},
      {DefenderAction::Reboot, 0.20},       {DefenderAction::ResetPassword, 0.10},
      {DefenderAction::Reimage, 0.05},      {DefenderAction::HumanAnalysis, 0.05},
      {DefenderAction::Quarantine, 0.05},   {DefenderAction::NoOp, 0.05},
  };
  double plc_weight = 0.05;  // per PLC action type, when applicable
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(RandomPolicyParams params = {}) : params_(std::move(params)) {}
  std::string_view name() const override { return "random"; }
  std::vector<DefenderCommand> act(const PolicyContext& ctx, Rng& rng) override;
  const RandomPolicyParams& params() const { return params_; }

 private:
  RandomPolicyParams params_;
};

/// Alternating scan / mitigation course of action. The ladder advances past a
/// scan only when the scan detects; it ends at the first clean scan or after
/// its last step.
struct Ladder {
  std::vector<DefenderAction> steps;
  std::size_t severe_entry = 0;  // step at which severity-3 alerts enter
};

struct PlaybookParams {
  Ladder host{{DefenderAction::AdvancedScan, DefenderAction::Reboot, DefenderAction::AdvancedScan,
               DefenderAction::ResetPassword, DefenderAction::AdvancedScan, DefenderAction::Reimage},
              3};
  Ladder server{{DefenderAction::AdvancedScan, DefenderAction::Reboot, DefenderAction::AdvancedScan,
                 DefenderAction::Reimage},
                0};
};

class PlaybookPolicy : public Policy {
 public:
  explicit PlaybookPolicy(PlaybookParams params = {}) : params_(std::move(params)) {}
  std::string_view name() const override { return "playbook"; }
  void reset(const NetworkState& net) override;
  std::vector<DefenderCommand> act(const PolicyContext& ctx, Rng& rng) override;

  struct Coa {
    bool active = false;
    bool host = true;
    bool to_issue = false;
    std::size_t position = 0;
    DefenderCommand pending;
  };
  const std::vector<Coa>& coas() const { return coas_; }

 private:
  const Ladder& ladder_for(const Coa& c) const { return c.host ? params_.host : params_.server; }

  PlaybookParams params_;
  std::vector<Coa> coas_;
};

struct ExpertParams {
  double threshold = 0.5;
};

/// Mitigation matched to the most probable compromised state: Reboot unless
/// reboot persistence, ResetPassword unless credential persistence, else Reimage.
DefenderAction expert_mitigation(const CompromiseFlags& map_state);

class ExpertPolicy : public Policy {
 public:
  explicit ExpertPolicy(ExpertParams params = {}) : params_(params) {}
  std::string_view name() const override { return "expert"; }
  bool needs_beliefs() const override { return true; }
  std::vector<DefenderCommand> act(const PolicyContext& ctx, Rng& rng) override;

 private:
  ExpertParams params_;
};

struct PolicySpec {
  std::string name = "noop";
  RandomPolicyParams random;
  PlaybookParams playbook;
  ExpertParams expert;
};

/// Throws std::invalid_argument for unknown names ("protocol" is handled by the harness).
std::unique_ptr<Policy> make_policy(const PolicySpec& spec);

}  // namespace icsim
