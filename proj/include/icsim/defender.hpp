#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "icsim/network.hpp"
#include "icsim/rng.hpp"

namespace icsim {

enum class DefenderAction : std::uint8_t {
  NoOp,
  SimpleScan,
  AdvancedScan,
  HumanAnalysis,
  Reboot,
  ResetPassword,
  Reimage,
  Quarantine,
  ResetPlc,
  ReplacePlc,
};
inline constexpr std::size_t kNumDefenderActions = 10;

std::string_view to_string(DefenderAction a);
std::optional<DefenderAction> parse_defender_action(std::string_view name);

constexpr bool is_investigation(DefenderAction a) {
  return a == DefenderAction::SimpleScan || a == DefenderAction::AdvancedScan || a == DefenderAction::HumanAnalysis;
}
constexpr bool is_node_mitigation(DefenderAction a) {
  return a == DefenderAction::Reboot || a == DefenderAction::ResetPassword || a == DefenderAction::Reimage ||
         a == DefenderAction::Quarantine;
}
constexpr bool is_plc_action(DefenderAction a) {
  return a == DefenderAction::ResetPlc || a == DefenderAction::ReplacePlc;
}

enum class TargetKind : std::uint8_t { none, workstation, server, plc };
TargetKind target_kind_of(const Node& n);

/// Cost, duration and detection parameters for one defender action.
struct DefenderActionParams {
  double cost_workstation = 0.0;
  double cost_server = 0.0;
  int duration = 0;
  double detect_prob = 0.0;  // investigations only
};

/// Per-action table; defaults reproduce the investigation and mitigation
/// tables. Quarantine (0.03, 1 h) and mitigation durations are not tabulated
/// there and are set here.
struct DefenderTable {
  std::array<DefenderActionParams, kNumDefenderActions> entries{};

  DefenderTable();
  const DefenderActionParams& operator[](DefenderAction a) const {
    return entries[static_cast<std::size_t>(a)];
  }
  DefenderActionParams& operator[](DefenderAction a) { return entries[static_cast<std::size_t>(a)]; }
};

struct DefenderCommand {
  DefenderAction action = DefenderAction::NoOp;
  int target = -1;  // node id, PLC id, or -1 for NoOp

  friend bool operator==(const DefenderCommand&, const DefenderCommand&) = default;
};

/// Bijection between flat integer indices and (action, target) pairs.
///
/// Layout: index 0 is NoOp. Then, for each computing node in id order:
/// SimpleScan, AdvancedScan, HumanAnalysis, Reboot, ResetPassword, Reimage,
/// and Quarantine when the node is a workstation kind. Then, for each PLC in
/// id order: ResetPlc, ReplacePlc. Size is 6C + W + 2P + 1.
class ActionIndex {
 public:
  explicit ActionIndex(const NetworkState& net);

  std::size_t size() const { return entries_.size(); }
  const DefenderCommand& at(std::size_t index) const;
  std::optional<std::size_t> index_of(const DefenderCommand& cmd) const;
  /// First index belonging to node `id` (its SimpleScan entry).
  std::size_t node_offset(int id) const { return node_offsets_.at(static_cast<std::size_t>(id)); }
  std::size_t plc_offset() const { return plc_offset_; }

 private:
  std::vector<DefenderCommand> entries_;
  std::vector<std::size_t> node_offsets_;
  std::size_t plc_offset_ = 0;
};

ActionIndex action_space(const NetworkState& net);

/// Closed form of the action-space size for C computing nodes, W workstation-kind
/// nodes and P PLCs.
constexpr std::size_t action_space_size(std::size_t computing, std::size_t workstation_kind, std::size_t plcs) {
  return 6 * computing + workstation_kind + 2 * plcs + 1;
}

/// Result of starting an investigation: how long it runs and whether it ends
/// with a detection alert.
struct InvestigationOutcome {
  int hours = 0;
  bool detected = false;
};

/// Simple scans and human analysis: one Bernoulli(p * m) draw, reported at
/// completion. Advanced scans: one draw per hour, stopping at the first
/// detection or after the full duration. m = 1 - cleanup_effectiveness for
/// cleaned nodes. Clean nodes never produce detections.
InvestigationOutcome resolve_investigation(DefenderAction action, const Node& node, double cleanup_effectiveness,
                                           const DefenderTable& table, Rng& rng);

/// Probability that an investigation detects a compromised node.
double detection_probability(DefenderAction action, const CompromiseFlags& flags, double cleanup_effectiveness,
                             const DefenderTable& table);

struct MitigationResult {
  bool effective = false;  // the target changed state
  bool blocked = false;    // a countermeasure or status guard prevented the effect
};

/// Reboot, ResetPassword, Reimage on a computing node; Quarantine delegates to
/// quarantine_toggle. Throws InvalidTarget for PLC actions or investigations.
MitigationResult apply_mitigation(NetworkState& net, int node_id, DefenderAction action);

/// ResetPlc (disrupted -> nominal) and ReplacePlc (destroyed -> nominal); both
/// clear flashed firmware. ResetPlc on a destroyed PLC is blocked.
MitigationResult apply_plc_mitigation(Plc& plc, DefenderAction action);

double action_cost(DefenderAction action, TargetKind kind, const DefenderTable& table);

/// Throws InvalidTarget when the command does not apply to its target.
void validate_command(const NetworkState& net, const DefenderCommand& cmd);

}  // namespace icsim
