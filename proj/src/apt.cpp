#include "icsim/apt.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "icsim/errors.hpp"

namespace icsim {

namespace {

// name, success probability, Binomial(n, p) duration, base alert rate, networked
constexpr std::array<AptActionSpec, kNumAptActions> kCatalog{{
    {AptAction::Scan, "Scan", 1.0, 60, 0.9, 0.01, true},
    {AptAction::Compromise, "Compromise", 0.9, 60, 0.8, 0.05, true},
    {AptAction::RebootPersist, "RebootPersist", 1.0, 4, 0.9, 0.05, false},
    {AptAction::EscalatePrivilege, "EscalatePrivilege", 1.0, 22, 0.9, 0.05, false},
    {AptAction::CredentialPersist, "CredentialPersist", 1.0, 4, 0.9, 0.05, false},
    {AptAction::Cleanup, "Cleanup", 1.0, 4, 0.9, 0.05, false},
    {AptAction::DiscoverVlan, "DiscoverVlan", 1.0, 60, 0.9, 0.05, true},
    {AptAction::DiscoverServer, "DiscoverServer", 1.0, 60, 0.9, 0.01, true},
    {AptAction::AnalyzeHistorian, "AnalyzeHistorian", 1.0, 600, 0.9, 0.0, false},
    {AptAction::DiscoverPlc, "DiscoverPlc", 1.0, 24, 0.875, 0.03, true},
    {AptAction::FlashFirmware, "FlashFirmware", 1.0, 1, 1.0, 0.5, true},
    {AptAction::DisruptPlc, "DisruptPlc", 1.0, 8, 0.9, 0.9, true},
    {AptAction::DestroyPlc, "DestroyPlc", 1.0, 1, 1.0, 1.0, true},
}};

bool lateral_target_kind(NodeKind k) {
  return k == NodeKind::workstation || k == NodeKind::domain_controller;
}

bool scannable_kind(NodeKind k) {
  return is_workstation_kind(k) || k == NodeKind::domain_controller;
}

std::optional<int> first_node_of(const NetworkState& net, NodeKind kind) {
  for (const auto& n : net.nodes)
    if (n.kind == kind) return n.id;
  return std::nullopt;
}

bool is_busy(const std::set<AptBusyKey>& busy, const AptProposal& p) { return busy.count(busy_key(p)) > 0; }

/// A controlled node that can reach `dst`, preferring one on the same VLAN.
std::optional<int> source_for_node(const NetworkState& net, int dst) {
  std::optional<int> any;
  const int dst_vlan = net.node(dst).vlan_id;
  for (const auto& n : net.nodes) {
    if (n.id == dst || !AptFsm::controlled(n) || !reachable(net, n.id, dst)) continue;
    if (n.vlan_id == dst_vlan) return n.id;
    if (!any) any = n.id;
  }
  return any;
}

std::optional<int> source_for_vlan(const NetworkState& net, int vlan_id) {
  std::optional<int> any;
  for (const auto& n : net.nodes) {
    if (!AptFsm::controlled(n) || !reachable_vlan(net, n.id, vlan_id)) continue;
    if (n.vlan_id == vlan_id) return n.id;
    if (!any) any = n.id;
  }
  return any;
}

/// Discover, then compromise, the server `id` if not already controlled.
void acquire_server(const NetworkState& net, int id, const std::set<AptBusyKey>& busy,
                    std::vector<AptProposal>& out) {
  const Node& s = net.node(id);
  if (AptFsm::controlled(s)) return;
  if (!s.flags.scanned) {
    if (auto src = source_for_vlan(net, s.vlan_id)) {
      AptProposal p{AptAction::DiscoverServer, src, Target::vlan(s.vlan_id)};
      if (!is_busy(busy, p)) out.push_back(p);
    }
    return;
  }
  if (!s.online() || s.flags.initial_compromise) return;
  AptProposal p{AptAction::Compromise, source_for_node(net, id), Target::node(id)};
  if (p.source && !is_busy(busy, p)) out.push_back(p);
}

}  // namespace

const AptActionSpec& apt_action_spec(AptAction action) { return kCatalog[static_cast<std::size_t>(action)]; }

std::span<const AptActionSpec> apt_action_catalog() { return kCatalog; }

std::string_view to_string(AttackObjective o) { return o == AttackObjective::destroy ? "destroy" : "disrupt"; }

std::string_view to_string(AttackVector v) { return v == AttackVector::opc_server ? "opc_server" : "level1_hmi"; }

std::string_view to_string(MachineState s) {
  switch (s) {
    case MachineState::LateralMovement: return "LateralMovement";
    case MachineState::VerticalMovement: return "VerticalMovement";
    case MachineState::ProcessDiscovery: return "ProcessDiscovery";
    case MachineState::AttackExecution: return "AttackExecution";
    case MachineState::Done: return "Done";
  }
  return "unknown";
}

AptParams preset_params(std::string_view name) {
  AptParams p;
  if (name == "apt1") return p;
  if (name == "apt2") {
    p.lateral_threshold = 1;
    p.plc_threshold_destroy = 5;
    p.plc_threshold_disrupt = 10;
    return p;
  }
  throw std::invalid_argument("unknown APT preset '" + std::string(name) + "'");
}

AptBusyKey busy_key(const AptProposal& p) {
  if (p.target.kind == Target::Kind::vlan)
    return {p.target.kind, p.target.id, static_cast<int>(p.action)};
  return {p.target.kind, p.target.id, -1};
}

// ---------------------------------------------------------------------------
// FSM

AptFsm::AptFsm(AptParams params, AttackObjective objective, AttackVector vector)
    : params_(params), objective_(objective), vector_(vector) {}

bool AptFsm::controlled(const Node& n) { return n.flags.initial_compromise && n.online() && !n.quarantined; }

int AptFsm::count_controlled_l2(const NetworkState& net) {
  return static_cast<int>(std::count_if(net.nodes.begin(), net.nodes.end(),
                                        [](const Node& n) { return n.level == 2 && controlled(n); }));
}

bool AptFsm::lateral_satisfied(const NetworkState& net) const {
  return count_controlled_l2(net) >= params_.lateral_threshold;
}

std::optional<int> AptFsm::plc_access_node(const NetworkState& net) const {
  for (const auto& n : net.nodes) {
    if (!controlled(n)) continue;
    if (vector_ == AttackVector::opc_server && n.kind == NodeKind::opc_server) return n.id;
    if (vector_ == AttackVector::level1_hmi && n.kind == NodeKind::hmi_workstation) return n.id;
  }
  return std::nullopt;
}

bool AptFsm::vertical_satisfied(const NetworkState& net) const {
  if (vector_ == AttackVector::opc_server) {
    if (!plc_access_node(net)) return false;
    if (historian_analyzed_) return true;
    auto hist = first_node_of(net, NodeKind::historian_server);
    return hist && controlled(net.node(*hist));
  }
  const bool vlan_known = net.plc_vlan >= 0 ? known_vlans_.count(net.plc_vlan) > 0 : false;
  return vlan_known && plc_access_node(net).has_value();
}

bool AptFsm::discovery_satisfied(const NetworkState& net) const {
  const int discovered = static_cast<int>(
      std::count_if(net.plcs.begin(), net.plcs.end(), [](const Plc& p) { return p.discovered_by_apt; }));
  // Networks without a historian skip its analysis.
  const bool history = historian_analyzed_ || !first_node_of(net, NodeKind::historian_server);
  return history && discovered >= params_.plc_threshold(objective_);
}

bool AptFsm::attack_complete(const NetworkState& net) const {
  if (net.plcs.empty()) return false;
  return std::all_of(net.plcs.begin(), net.plcs.end(), [&](const Plc& p) {
    return objective_ == AttackObjective::destroy ? p.status == PlcStatus::destroyed
                                                  : p.status != PlcStatus::nominal;
  });
}

MachineState AptFsm::evaluate(const NetworkState& net) {
  if (!lateral_satisfied(net))
    state_ = MachineState::LateralMovement;
  else if (!vertical_satisfied(net))
    state_ = MachineState::VerticalMovement;
  else if (!discovery_satisfied(net))
    state_ = MachineState::ProcessDiscovery;
  else if (!attack_complete(net))
    state_ = MachineState::AttackExecution;
  else
    state_ = MachineState::Done;
  return state_;
}

std::vector<AptProposal> AptFsm::step(const NetworkState& net, const std::set<AptBusyKey>& busy) {
  evaluate(net);
  return propose(net, busy);
}

std::vector<AptProposal> AptFsm::propose(const NetworkState& net, const std::set<AptBusyKey>& busy) const {
  std::vector<AptProposal> out;
  propose_persistence(net, busy, out);
  switch (state_) {
    case MachineState::LateralMovement:
      propose_lateral(net, busy, out);
      break;
    case MachineState::VerticalMovement:
      propose_vertical(net, busy, out);
      break;
    case MachineState::ProcessDiscovery:
      propose_historian(net, busy, out);
      propose_plc_discovery(net, busy, out);
      break;
    case MachineState::AttackExecution:
      propose_attack(net, busy, out);
      propose_plc_discovery(net, busy, out);
      break;
    case MachineState::Done:
      break;
  }
  return out;
}

void AptFsm::propose_persistence(const NetworkState& net, const std::set<AptBusyKey>& busy,
                                 std::vector<AptProposal>& out) const {
  for (const auto& n : net.nodes) {
    if (!controlled(n)) continue;
    const auto& f = n.flags;
    AptAction next;
    if (!f.reboot_persistence)
      next = AptAction::RebootPersist;
    else if (!f.admin_access)
      next = AptAction::EscalatePrivilege;
    else if (!f.credential_persistence)
      next = AptAction::CredentialPersist;
    else if (!f.malware_cleaned)
      next = AptAction::Cleanup;
    else
      continue;
    AptProposal p{next, n.id, Target::node(n.id)};
    if (!is_busy(busy, p)) out.push_back(p);
  }
}

void AptFsm::propose_lateral(const NetworkState& net, const std::set<AptBusyKey>& busy,
                             std::vector<AptProposal>& out) const {
  bool any_target = false;
  for (const auto& n : net.nodes) {
    if (n.level != 2 || !lateral_target_kind(n.kind)) continue;
    if (!n.flags.scanned || n.flags.initial_compromise || !n.online() || n.quarantined) continue;
    any_target = true;
    AptProposal p{AptAction::Compromise, source_for_node(net, n.id), Target::node(n.id)};
    if (p.source && !is_busy(busy, p)) out.push_back(p);
  }
  if (any_target) return;
  for (int vlan : known_vlans_) {
    const VlanInfo& v = net.vlan(vlan);
    if (v.level != 2 || v.quarantine) continue;
    AptProposal p{AptAction::Scan, source_for_vlan(net, vlan), Target::vlan(vlan)};
    if (p.source && !is_busy(busy, p)) out.push_back(p);
  }
}

void AptFsm::propose_vertical(const NetworkState& net, const std::set<AptBusyKey>& busy,
                              std::vector<AptProposal>& out) const {
  if (vector_ == AttackVector::opc_server) {
    if (auto opc = first_node_of(net, NodeKind::opc_server)) acquire_server(net, *opc, busy, out);
    if (!historian_analyzed_)
      if (auto hist = first_node_of(net, NodeKind::historian_server)) acquire_server(net, *hist, busy, out);
    return;
  }
  if (net.plc_vlan < 0) return;
  const int l1 = net.plc_vlan;
  if (!known_vlans_.count(l1)) {
    AptProposal p{AptAction::DiscoverVlan, source_for_vlan(net, l1), Target::vlan(l1)};
    if (p.source && !is_busy(busy, p)) out.push_back(p);
    return;
  }
  bool any_target = false;
  for (const auto& n : net.nodes) {
    if (n.kind != NodeKind::hmi_workstation || n.vlan_id != l1) continue;
    if (!n.flags.scanned || n.flags.initial_compromise || !n.online()) continue;
    any_target = true;
    AptProposal p{AptAction::Compromise, source_for_node(net, n.id), Target::node(n.id)};
    if (p.source && !is_busy(busy, p)) out.push_back(p);
  }
  if (!any_target) {
    AptProposal p{AptAction::Scan, source_for_vlan(net, l1), Target::vlan(l1)};
    if (p.source && !is_busy(busy, p)) out.push_back(p);
  }
}

void AptFsm::propose_historian(const NetworkState& net, const std::set<AptBusyKey>& busy,
                               std::vector<AptProposal>& out) const {
  if (historian_analyzed_) return;
  auto hist = first_node_of(net, NodeKind::historian_server);
  if (!hist) return;
  if (controlled(net.node(*hist))) {
    AptProposal p{AptAction::AnalyzeHistorian, *hist, Target::node(*hist)};
    if (!is_busy(busy, p)) out.push_back(p);
    return;
  }
  acquire_server(net, *hist, busy, out);
}

void AptFsm::propose_plc_discovery(const NetworkState& net, const std::set<AptBusyKey>& busy,
                                   std::vector<AptProposal>& out) const {
  auto access = plc_access_node(net);
  if (!access || net.plc_vlan < 0) return;
  const bool undiscovered = std::any_of(net.plcs.begin(), net.plcs.end(),
                                        [](const Plc& p) { return !p.discovered_by_apt; });
  if (!undiscovered) return;
  AptProposal p{AptAction::DiscoverPlc, *access, Target::vlan(net.plc_vlan)};
  if (!is_busy(busy, p)) out.push_back(p);
}

void AptFsm::propose_attack(const NetworkState& net, const std::set<AptBusyKey>& busy,
                            std::vector<AptProposal>& out) const {
  auto access = plc_access_node(net);
  if (!access) return;
  for (const auto& plc : net.plcs) {
    if (!plc.discovered_by_apt) continue;
    std::optional<AptAction> action;
    if (objective_ == AttackObjective::destroy) {
      if (plc.status == PlcStatus::destroyed) continue;
      action = plc.firmware_flashed ? AptAction::DestroyPlc : AptAction::FlashFirmware;
    } else if (plc.status == PlcStatus::nominal) {
      action = AptAction::DisruptPlc;
    }
    if (!action) continue;
    AptProposal p{*action, *access, Target::plc(plc.id)};
    if (!is_busy(busy, p)) out.push_back(p);
  }
}

// ---------------------------------------------------------------------------
// Effects

bool apt_action_feasible(const NetworkState& net, const AptProposal& p) {
  if (p.source && !AptFsm::controlled(net.node(*p.source))) return false;
  switch (p.target.kind) {
    case Target::Kind::node: {
      const Node& dst = net.node(p.target.id);
      if (!dst.online()) return false;
      if (p.source && *p.source == p.target.id) return true;
      return reachable(net, p.source, p.target.id);
    }
    case Target::Kind::vlan:
      return reachable_vlan(net, p.source, p.target.id);
    case Target::Kind::plc:
      return p.source && net.plc_vlan >= 0 && reachable_vlan(net, p.source, net.plc_vlan);
    case Target::Kind::none:
      return false;
  }
  return false;
}

AptEffect apply_apt_action(NetworkState& net, AptFsm& fsm, const AptProposal& a, bool success, Rng& rng) {
  if (!apt_action_feasible(net, a)) return {false, "infeasible"};
  if (!success) return {false, "failed"};

  auto node_target = [&]() -> Node& { return net.node(a.target.id); };
  auto plc_target = [&]() -> Plc& {
    if (a.target.id < 0 || static_cast<std::size_t>(a.target.id) >= net.plcs.size())
      throw LookupError("unknown plc id " + std::to_string(a.target.id));
    return net.plcs[static_cast<std::size_t>(a.target.id)];
  };
  auto guard = [](bool ok) { return ok ? AptEffect{true, {}} : AptEffect{false, "prerequisite"}; };

  switch (a.action) {
    case AptAction::Scan: {
      bool any = false;
      for (auto& n : net.nodes) {
        if (n.vlan_id != a.target.id || n.quarantined || !n.online() || !scannable_kind(n.kind)) continue;
        if (!n.flags.scanned) any = true;
        n.flags.scanned = true;
      }
      return {any, any ? "" : "nothing new"};
    }
    case AptAction::Compromise: {
      Node& n = node_target();
      if (!a.source) n.flags.scanned = true;  // re-entry from outside
      if (!n.flags.scanned || n.flags.initial_compromise) return guard(false);
      n.flags.initial_compromise = true;
      return guard(true);
    }
    case AptAction::RebootPersist: {
      Node& n = node_target();
      if (!n.flags.initial_compromise) return guard(false);
      n.flags.reboot_persistence = true;
      return guard(true);
    }
    case AptAction::EscalatePrivilege: {
      Node& n = node_target();
      if (!n.flags.initial_compromise) return guard(false);
      n.flags.admin_access = true;
      return guard(true);
    }
    case AptAction::CredentialPersist: {
      Node& n = node_target();
      if (!n.flags.admin_access) return guard(false);
      n.flags.credential_persistence = true;
      return guard(true);
    }
    case AptAction::Cleanup: {
      Node& n = node_target();
      if (!n.flags.admin_access) return guard(false);
      n.flags.malware_cleaned = true;
      return guard(true);
    }
    case AptAction::DiscoverVlan:
      fsm.learn_vlan(a.target.id);
      return guard(true);
    case AptAction::DiscoverServer: {
      std::vector<int> hidden;
      for (const auto& n : net.nodes)
        if (n.vlan_id == a.target.id && n.online() && !scannable_kind(n.kind) && !n.flags.scanned)
          hidden.push_back(n.id);
      if (hidden.empty()) return {false, "nothing new"};
      net.node(hidden[uniform_index(rng, hidden.size())]).flags.scanned = true;
      return guard(true);
    }
    case AptAction::AnalyzeHistorian: {
      const Node& n = node_target();
      if (n.kind != NodeKind::historian_server || !n.flags.initial_compromise) return guard(false);
      fsm.mark_historian_analyzed();
      return guard(true);
    }
    case AptAction::DiscoverPlc: {
      std::vector<int> hidden;
      for (const auto& p : net.plcs)
        if (!p.discovered_by_apt) hidden.push_back(p.id);
      if (hidden.empty()) return {false, "nothing new"};
      net.plcs[static_cast<std::size_t>(hidden[uniform_index(rng, hidden.size())])].discovered_by_apt = true;
      return guard(true);
    }
    case AptAction::FlashFirmware: {
      Plc& p = plc_target();
      if (!p.discovered_by_apt || p.status == PlcStatus::destroyed) return guard(false);
      p.firmware_flashed = true;
      return guard(true);
    }
    case AptAction::DisruptPlc: {
      Plc& p = plc_target();
      if (!p.discovered_by_apt || p.status != PlcStatus::nominal) return guard(false);
      p.status = PlcStatus::disrupted;
      return guard(true);
    }
    case AptAction::DestroyPlc: {
      Plc& p = plc_target();
      if (!p.firmware_flashed || p.status == PlcStatus::destroyed) return guard(false);
      p.status = PlcStatus::destroyed;
      return guard(true);
    }
  }
  return guard(false);
}

}  // namespace icsim
