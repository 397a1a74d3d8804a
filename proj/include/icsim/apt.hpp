#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "icsim/network.hpp"
#include "icsim/rng.hpp"

namespace icsim {

enum class AptAction : std::uint8_t {
  Scan,
  Compromise,
  RebootPersist,
  EscalatePrivilege,
  CredentialPersist,
  Cleanup,
  DiscoverVlan,
  DiscoverServer,
  AnalyzeHistorian,
  DiscoverPlc,
  FlashFirmware,
  DisruptPlc,
  DestroyPlc,
};
inline constexpr std::size_t kNumAptActions = 13;

struct AptActionSpec {
  AptAction action;
  std::string_view name;
  double success_prob;
  int duration_trials;   // Binomial n
  double duration_prob;  // Binomial p
  double alert_rate;
  bool networked;  // generates traffic across devices vs. acting on a single node
};

const AptActionSpec& apt_action_spec(AptAction action);
std::span<const AptActionSpec> apt_action_catalog();

enum class AttackObjective : std::uint8_t { disrupt, destroy };
enum class AttackVector : std::uint8_t { opc_server, level1_hmi };
std::string_view to_string(AttackObjective o);
std::string_view to_string(AttackVector v);

struct AptParams {
  int lateral_threshold = 3;
  int plc_threshold_destroy = 15;
  int plc_threshold_disrupt = 25;
  double labor_budget = 2.0;
  double cleanup_effectiveness = 0.5;

  int plc_threshold(AttackObjective o) const {
    return o == AttackObjective::destroy ? plc_threshold_destroy : plc_threshold_disrupt;
  }
};

/// "apt1" (nominal attacker) or "apt2" (aggressive: lateral 1, PLC 5/10).
/// Throws std::invalid_argument for unknown names.
AptParams preset_params(std::string_view name);

enum class MachineState : std::uint8_t {
  LateralMovement,
  VerticalMovement,
  ProcessDiscovery,
  AttackExecution,
  Done,
};
std::string_view to_string(MachineState s);

struct Target {
  enum class Kind : std::uint8_t { none, node, plc, vlan };
  Kind kind = Kind::none;
  int id = -1;

  static Target node(int id) { return {Kind::node, id}; }
  static Target plc(int id) { return {Kind::plc, id}; }
  static Target vlan(int id) { return {Kind::vlan, id}; }
  friend auto operator<=>(const Target&, const Target&) = default;
};

struct AptProposal {
  AptAction action;
  std::optional<int> source;  // nullopt: from outside the network (re-entry)
  Target target;
};

/// Key used to keep at most one in-flight APT action per node or PLC, and
/// one per (action, vlan).
using AptBusyKey = std::tuple<Target::Kind, int, int>;
AptBusyKey busy_key(const AptProposal& p);

/// Baseline attacker: a finite-state machine over attack phases. Each hour the
/// phase is re-derived as the earliest one whose exit criterion is unmet, so
/// defender setbacks revert the machine to an earlier phase.
class AptFsm {
 public:
  AptFsm() = default;
  AptFsm(AptParams params, AttackObjective objective, AttackVector vector);

  const AptParams& params() const { return params_; }
  AttackObjective objective() const { return objective_; }
  AttackVector vector() const { return vector_; }
  MachineState state() const { return state_; }
  bool historian_analyzed() const { return historian_analyzed_; }
  const std::set<int>& known_vlans() const { return known_vlans_; }

  void learn_vlan(int vlan_id) { known_vlans_.insert(vlan_id); }
  void mark_historian_analyzed() { historian_analyzed_ = true; }

  /// Re-derives the machine state from the network.
  MachineState evaluate(const NetworkState& net);

  /// Action proposals in priority order. Persistence on controlled nodes comes
  /// first, then the current phase's sub-policy. Targets in `busy` are skipped.
  std::vector<AptProposal> propose(const NetworkState& net, const std::set<AptBusyKey>& busy) const;

  /// evaluate() followed by propose().
  std::vector<AptProposal> step(const NetworkState& net, const std::set<AptBusyKey>& busy);

  /// Nodes the APT can act from: compromised, online and not quarantined.
  static bool controlled(const Node& n);
  static int count_controlled_l2(const NetworkState& net);

  bool lateral_satisfied(const NetworkState& net) const;
  bool vertical_satisfied(const NetworkState& net) const;
  bool discovery_satisfied(const NetworkState& net) const;
  bool attack_complete(const NetworkState& net) const;
  std::optional<int> plc_access_node(const NetworkState& net) const;

 private:
  void propose_persistence(const NetworkState&, const std::set<AptBusyKey>&, std::vector<AptProposal>&) const;
  void propose_lateral(const NetworkState&, const std::set<AptBusyKey>&, std::vector<AptProposal>&) const;
  void propose_vertical(const NetworkState&, const std::set<AptBusyKey>&, std::vector<AptProposal>&) const;
  void propose_historian(const NetworkState&, const std::set<AptBusyKey>&, std::vector<AptProposal>&) const;
  void propose_plc_discovery(const NetworkState&, const std::set<AptBusyKey>&, std::vector<AptProposal>&) const;
  void propose_attack(const NetworkState&, const std::set<AptBusyKey>&, std::vector<AptProposal>&) const;

  AptParams params_;
  AttackObjective objective_ = AttackObjective::destroy;
  AttackVector vector_ = AttackVector::opc_server;
  MachineState state_ = MachineState::LateralMovement;
  std::set<int> known_vlans_;
  bool historian_analyzed_ = false;
};

/// Outcome of an APT action at its completion hour.
struct AptEffect {
  bool applied = false;  // state changed
  std::string reason;    // why it did not apply, when it did not
};

/// Applies a completed APT action. `success` is the draw made at admission.
/// Prerequisite violations (lost source, moved or offline target, guard
/// conditions) are absorbed as failures.
AptEffect apply_apt_action(NetworkState& net, AptFsm& fsm, const AptProposal& action, bool success, Rng& rng);

/// True when `p` can currently be executed: source controlled and able to
/// reach the target under quarantine rules, target online.
bool apt_action_feasible(const NetworkState& net, const AptProposal& p);

}  // namespace icsim
