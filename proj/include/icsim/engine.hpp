#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "icsim/apt.hpp"
#include "icsim/config.hpp"
#include "icsim/defender.hpp"
#include "icsim/ids.hpp"
#include "icsim/network.hpp"
#include "icsim/reward.hpp"
#include "icsim/rng.hpp"

namespace icsim {

/// Binomial(n, p) hours, at least one.
int sample_duration(int n, double p, Rng& rng);

struct AptInstance {
  AptProposal proposal;
  int start = 0;
  int end = 0;
  bool success = false;
  double labor_rate = 1.0;
};

struct DefenderInstance {
  DefenderCommand cmd;
  int start = 0;
  int end = 0;
  TargetKind target_kind = TargetKind::none;
  bool detected = false;  // investigations: outcome fixed when started
};

/// Defender action that finished during the step.
struct CompletedAction {
  DefenderCommand cmd;
  int start = 0;
  int end = 0;
  double cost = 0.0;
  bool detected = false;
  bool effective = false;
  bool blocked = false;
};

/// Mitigation classes that condition the belief transition model.
enum class MitigationClass : std::uint8_t { none, reboot, reset_password, reimage, quarantine };
inline constexpr std::size_t kNumMitigationClasses = 5;
/// Investigation classes that condition the belief observation model.
enum class InvestigationClass : std::uint8_t { none, simple, advanced, human };
inline constexpr std::size_t kNumInvestigationClasses = 4;
enum class InvestigationOutcomeKind : std::uint8_t { not_run, ran_no_detect, detected };

/// What the defender learns about one computing node during one hour.
struct NodeObservation {
  MitigationClass mitigation = MitigationClass::none;
  InvestigationClass investigation = InvestigationClass::none;
  InvestigationOutcomeKind outcome = InvestigationOutcomeKind::not_run;
  int max_severity = 0;  // 0 when no alert maps to the node

  /// 12-symbol alphabet: outcome * 4 + max_severity.
  int symbol() const { return static_cast<int>(outcome) * 4 + max_severity; }
  /// mitigation * 4 + investigation.
  int action_class() const {
    return static_cast<int>(mitigation) * static_cast<int>(kNumInvestigationClasses) + static_cast<int>(investigation);
  }
};

MitigationClass mitigation_class(DefenderAction a);
InvestigationClass investigation_class(DefenderAction a);

struct StepResult {
  int t = 0;  // clock after the step
  std::vector<Alert> alerts;
  std::vector<CompletedAction> completed;
  std::vector<DefenderCommand> rejected;  // overlapped an in-flight action or targeted an offline node
  std::vector<NodeObservation> node_obs;  // indexed by node id
  std::vector<PlcStatus> plc_status;
  RewardBreakdown reward;
  double completed_cost = 0.0;
  bool done = false;
};

/// One simulated episode. Owns its network, attacker, event queue and RNG.
class Episode {
 public:
  Episode(const Config& config, std::uint64_t seed);

  /// Observation at t = 0 (alerts are empty; the beachhead is silent).
  const StepResult& initial() const { return initial_; }

  /// Starts the defender commands, advances the clock one hour, processes
  /// every event due, samples alerts and admits new attacker actions.
  /// Throws LifecycleError after done and InvalidTarget for malformed commands.
  StepResult step_hour(const std::vector<DefenderCommand>& actions);

  int clock() const { return clock_; }
  bool done() const { return done_; }
  const NetworkState& net() const { return net_; }
  const AptFsm& apt() const { return apt_; }
  const Config& config() const { return config_; }
  const ActionIndex& actions() const { return index_; }
  int beachhead() const { return beachhead_; }
  double labor_in_use() const;
  std::vector<AptInstance> apt_in_flight() const;
  std::vector<DefenderInstance> defender_in_flight() const;
  /// Whether a command would be accepted now (no overlap, target online).
  bool can_start(const DefenderCommand& cmd) const;

  /// Compromised (initial_compromise) workstation-kind and server nodes.
  std::pair<int, int> compromised_split() const;

  /// Admit proposals greedily in order while in-flight labor stays within the
  /// budget. Returns the admitted instances. Exposed for testing.
  std::vector<AptInstance> admit_apt_actions(const std::vector<AptProposal>& proposals);

  /// Test hook: direct mutable access for constructing scenarios.
  NetworkState& mutable_net() { return net_; }
  AptFsm& mutable_apt() { return apt_; }

 private:
  struct Event {
    int time;
    std::uint64_t seq;
    bool apt;
    std::size_t slot;
    bool operator>(const Event& o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
  };

  void schedule(int time, bool apt, std::size_t slot);
  void start_defender(const DefenderCommand& cmd, StepResult& out);
  void complete_defender(std::size_t slot, StepResult& out);
  void complete_apt(std::size_t slot);
  void maybe_reenter(std::vector<AptProposal>& proposals);
  void note_alert(const Alert& a, StepResult& out);
  std::vector<int> path_for(const AptProposal& p) const;
  std::set<AptBusyKey> apt_busy() const;

  Config config_;
  AptParams apt_params_;
  NetworkState net_;
  ActionIndex index_;
  AptFsm apt_;
  Rng rng_;
  int clock_ = 0;
  bool done_ = false;
  int beachhead_ = -1;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  // Slot storage for in-flight actions; finished slots are recycled.
  std::vector<AptInstance> apt_slots_;
  std::vector<bool> apt_live_;
  std::vector<std::size_t> apt_free_;
  std::vector<DefenderInstance> def_slots_;
  std::vector<bool> def_live_;
  std::vector<std::size_t> def_free_;
  // Exclusivity bookkeeping.
  std::vector<bool> node_mitigating_;
  std::vector<bool> node_investigating_;
  std::vector<bool> plc_busy_;
  StepResult initial_;
};

}  // namespace icsim
