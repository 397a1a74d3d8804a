#include "icsim/defender.hpp"

#include <algorithm>
#include <string>

#include "icsim/errors.hpp"

namespace icsim {

namespace {

constexpr std::array<std::string_view, kNumDefenderActions> kNames{
    "NoOp",   "SimpleScan", "AdvancedScan", "HumanAnalysis", "Reboot",
    "ResetPassword", "Reimage", "Quarantine", "ResetPlc", "ReplacePlc",
};

constexpr std::array<DefenderAction, 6> kPerNodeActions{
    DefenderAction::SimpleScan, DefenderAction::AdvancedScan, DefenderAction::HumanAnalysis,
    DefenderAction::Reboot,     DefenderAction::ResetPassword, DefenderAction::Reimage,
};

}  // namespace

std::string_view to_string(DefenderAction a) { return kNames[static_cast<std::size_t>(a)]; }

std::optional<DefenderAction> parse_defender_action(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<DefenderAction>(i);
  return std::nullopt;
}

TargetKind target_kind_of(const Node& n) {
  return is_workstation_kind(n.kind) ? TargetKind::workstation : TargetKind::server;
}

DefenderTable::DefenderTable() {
  using A = DefenderAction;
  (*this)[A::NoOp] = {0.0, 0.0, 0, 0.0};
  (*this)[A::SimpleScan] = {0.01, 0.01, 2, 0.03};
  (*this)[A::AdvancedScan] = {0.03, 0.03, 8, 0.05};
  (*this)[A::HumanAnalysis] = {0.05, 0.05, 8, 0.5};
  (*this)[A::Reboot] = {0.01, 0.03, 1, 0.0};
  (*this)[A::ResetPassword] = {0.03, 0.05, 1, 0.0};
  (*this)[A::Reimage] = {0.05, 0.1, 8, 0.0};
  (*this)[A::Quarantine] = {0.03, 0.03, 1, 0.0};
  (*this)[A::ResetPlc] = {0.02, 0.02, 1, 0.0};
  (*this)[A::ReplacePlc] = {0.04, 0.04, 24, 0.0};
}

// ---------------------------------------------------------------------------
// Action index

ActionIndex::ActionIndex(const NetworkState& net) {
  entries_.push_back({DefenderAction::NoOp, -1});
  for (const auto& n : net.nodes) {
    node_offsets_.push_back(entries_.size());
    for (auto a : kPerNodeActions) entries_.push_back({a, n.id});
    if (is_workstation_kind(n.kind)) entries_.push_back({DefenderAction::Quarantine, n.id});
  }
  plc_offset_ = entries_.size();
  for (const auto& p : net.plcs) {
    entries_.push_back({DefenderAction::ResetPlc, p.id});
    entries_.push_back({DefenderAction::ReplacePlc, p.id});
  }
}

const DefenderCommand& ActionIndex::at(std::size_t index) const {
  if (index >= entries_.size())
    throw LookupError("action index " + std::to_string(index) + " out of range (size " +
                      std::to_string(entries_.size()) + ")");
  return entries_[index];
}

std::optional<std::size_t> ActionIndex::index_of(const DefenderCommand& cmd) const {
  if (cmd.action == DefenderAction::NoOp) return 0;
  std::size_t begin = 0;
  std::size_t end = entries_.size();
  if (is_plc_action(cmd.action)) {
    begin = plc_offset_;
  } else if (cmd.target >= 0 && static_cast<std::size_t>(cmd.target) < node_offsets_.size()) {
    begin = node_offsets_[static_cast<std::size_t>(cmd.target)];
    end = std::min(end, begin + 7);
  } else {
    return std::nullopt;
  }
  for (std::size_t i = begin; i < end; ++i)
    if (entries_[i] == cmd) return i;
  return std::nullopt;
}

ActionIndex action_space(const NetworkState& net) { return ActionIndex(net); }

// ---------------------------------------------------------------------------
// Investigations

double detection_probability(DefenderAction action, const CompromiseFlags& flags, double cleanup_effectiveness,
                             const DefenderTable& table) {
  if (!is_investigation(action) || !flags.initial_compromise) return 0.0;
  const double m = flags.malware_cleaned ? 1.0 - std::clamp(cleanup_effectiveness, 0.0, 1.0) : 1.0;
  return std::clamp(table[action].detect_prob * m, 0.0, 1.0);
}

InvestigationOutcome resolve_investigation(DefenderAction action, const Node& node, double cleanup_effectiveness,
                                           const DefenderTable& table, Rng& rng) {
  if (!is_investigation(action))
    throw InvalidTarget(std::string(to_string(action)) + " is not an investigation");
  const int duration = std::max(1, table[action].duration);
  const double p = detection_probability(action, node.flags, cleanup_effectiveness, table);
  if (action == DefenderAction::AdvancedScan) {
    for (int h = 1; h <= duration; ++h)
      if (bernoulli(rng, p)) return {h, true};
    return {duration, false};
  }
  return {duration, bernoulli(rng, p)};
}

// ---------------------------------------------------------------------------
// Mitigations

MitigationResult apply_mitigation(NetworkState& net, int node_id, DefenderAction action) {
  Node& n = net.node(node_id);
  const CompromiseFlags before = n.flags;
  switch (action) {
    case DefenderAction::Reboot:
      if (n.flags.reboot_persistence) return {false, true};
      n.flags = {};
      break;
    case DefenderAction::ResetPassword:
      if (n.flags.credential_persistence) return {false, true};
      n.flags = {};
      break;
    case DefenderAction::Reimage:
      n.flags = {};
      break;
    case DefenderAction::Quarantine:
      quarantine_toggle(net, node_id);
      return {true, false};
    default:
      throw InvalidTarget(std::string(to_string(action)) + " is not a node mitigation");
  }
  return {!(before == n.flags), false};
}

MitigationResult apply_plc_mitigation(Plc& plc, DefenderAction action) {
  switch (action) {
    case DefenderAction::ResetPlc:
      if (plc.status == PlcStatus::destroyed) return {false, true};
      {
        const bool changed = plc.status != PlcStatus::nominal || plc.firmware_flashed;
        plc.status = PlcStatus::nominal;
        plc.firmware_flashed = false;
        return {changed, false};
      }
    case DefenderAction::ReplacePlc: {
      const bool changed = plc.status != PlcStatus::nominal || plc.firmware_flashed;
      plc.status = PlcStatus::nominal;
      plc.firmware_flashed = false;
      return {changed, false};
    }
    default:
      throw InvalidTarget(std::string(to_string(action)) + " is not a PLC action");
  }
}

double action_cost(DefenderAction action, TargetKind kind, const DefenderTable& table) {
  const auto& e = table[action];
  return kind == TargetKind::server ? e.cost_server : e.cost_workstation;
}

void validate_command(const NetworkState& net, const DefenderCommand& cmd) {
  if (cmd.action == DefenderAction::NoOp) return;
  if (is_plc_action(cmd.action)) {
    if (cmd.target < 0 || static_cast<std::size_t>(cmd.target) >= net.plcs.size())
      throw InvalidTarget("no PLC with id " + std::to_string(cmd.target));
    return;
  }
  if (cmd.target < 0 || static_cast<std::size_t>(cmd.target) >= net.nodes.size())
    throw InvalidTarget("no node with id " + std::to_string(cmd.target));
  if (cmd.action == DefenderAction::Quarantine && !is_workstation_kind(net.node(cmd.target).kind))
    throw InvalidTarget("quarantine applies to workstation nodes only");
}

}  // namespace icsim
