#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace icsim {

enum class NodeKind : std::uint8_t {
  workstation,
  hmi_workstation,
  opc_server,
  historian_server,
  domain_controller,
};

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view name);

/// Workstation kinds can be quarantined and are the APT's lateral-movement targets.
/// The domain controller is treated as a lateral target too but costs and quarantines like a server.
constexpr bool is_workstation_kind(NodeKind k) {
  return k == NodeKind::workstation || k == NodeKind::hmi_workstation;
}
constexpr bool is_server(NodeKind k) { return !is_workstation_kind(k); }

/// Compromise conditions a node can accumulate. Each flag requires its parent:
///   scanned <- initial_compromise <- {reboot_persistence, admin_access}
///   admin_access <- {credential_persistence, malware_cleaned}
struct CompromiseFlags {
  bool scanned = false;
  bool initial_compromise = false;
  bool reboot_persistence = false;
  bool admin_access = false;
  bool credential_persistence = false;
  bool malware_cleaned = false;

  bool satisfies_prerequisites() const;
  bool compromised() const { return initial_compromise; }
  std::uint8_t bits() const;
  static CompromiseFlags from_bits(std::uint8_t bits);

  friend bool operator==(const CompromiseFlags&, const CompromiseFlags&) = default;
};

inline constexpr std::size_t kNumCompromiseStates = 12;

/// The 12 valid flag combinations in canonical order: ascending value of the
/// bit mask (scanned=1, initial_compromise=2, reboot_persistence=4,
/// admin_access=8, credential_persistence=16, malware_cleaned=32).
/// Index 0 is the clean state, index 1 scanned-only, indices 2..11 compromised.
std::vector<CompromiseFlags> enumerate_compromise_states();

/// Canonical index of a valid flag combination. Throws LookupError when the
/// combination violates the prerequisite chain.
std::size_t state_index(const CompromiseFlags& flags);
const CompromiseFlags& state_flags(std::size_t index);

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::workstation;
  int level = 2;
  int home_vlan = 0;
  int vlan_id = 0;
  int slot = 0;  // ordinal within its level, used for IP assignment
  std::uint32_t ip = 0;
  CompromiseFlags flags;
  bool quarantined = false;
  std::optional<int> offline_until;  // set while re-imaging

  bool online() const { return !offline_until.has_value(); }
};

enum class DeviceKind : std::uint8_t { switch_device, router, firewall };
std::string_view to_string(DeviceKind kind);

struct Device {
  int id = 0;
  DeviceKind kind = DeviceKind::switch_device;
  int level = 2;
  int vlan_id = -1;  // switches only
  std::uint32_t ip = 0;
};

enum class PlcStatus : std::uint8_t { nominal = 0, disrupted = 1, destroyed = 2 };
std::string_view to_string(PlcStatus status);

struct Plc {
  int id = 0;
  PlcStatus status = PlcStatus::nominal;
  bool firmware_flashed = false;
  bool discovered_by_apt = false;
};

struct VlanInfo {
  int id = 0;
  int level = 0;
  bool quarantine = false;
  int switch_id = -1;
};

struct LevelInfo {
  int level = 0;
  int router_id = -1;
  int firewall_id = -1;
  int quarantine_vlan = -1;
};

struct NodeGroup {
  NodeKind kind = NodeKind::workstation;
  int count = 0;
};

struct VlanConfig {
  int id = 0;
  std::vector<NodeGroup> nodes;
};

struct LevelConfig {
  int level = 0;
  std::vector<VlanConfig> vlans;
  int quarantine_vlan = -1;
};

struct TopologyConfig {
  std::vector<LevelConfig> levels;
  int plc_count = 0;
  int plc_vlan = -1;
};

/// Reference topology: level 2 operations VLAN with 25 workstations plus the
/// OPC server, historian and domain controller; level 1 with 5 HMIs and 50 PLCs;
/// one quarantine VLAN per level.
TopologyConfig default_topology();
/// Reduced topology used for hyper-parameter search: 10 L2 workstations,
/// the three servers, 3 HMIs, 30 PLCs.
TopologyConfig search_topology();

class NetworkState {
 public:
  std::vector<Node> nodes;
  std::vector<Device> devices;
  std::vector<Plc> plcs;
  std::vector<VlanInfo> vlans;
  std::vector<LevelInfo> levels;
  int plc_vlan = -1;

  const Node& node(int id) const;
  Node& node(int id);
  const VlanInfo& vlan(int id) const;
  const LevelInfo& level(int level) const;
  std::optional<int> node_by_ip(std::uint32_t ip) const;

  /// Device ids traversed from one attachment point to another. A source of
  /// nullopt means outside the network (enters through the top firewall).
  const std::vector<int>& vlan_path(std::optional<int> src_vlan, int dst_vlan) const;

  int count_compromised() const;
  int count_plcs(PlcStatus status) const;

 private:
  friend NetworkState build_network(const TopologyConfig&);
  std::map<std::pair<int, int>, std::vector<int>> paths_;
  std::map<std::uint32_t, int> ip_index_;
  friend void quarantine_toggle(NetworkState&, int);
  void reindex_ip(std::uint32_t old_ip, const Node& node);
};

/// Throws ConfigError naming the field on malformed input.
NetworkState build_network(const TopologyConfig& config);

/// Networking devices a message passes through, in order. `src_node` nullopt
/// is traffic from outside the network. Throws LookupError on unknown ids and
/// std::invalid_argument when src == dst.
std::vector<int> message_path(const NetworkState& net, std::optional<int> src_node, int dst_node);
std::vector<int> message_path_to_vlan(const NetworkState& net, std::optional<int> src_node, int vlan_id);
std::vector<int> message_path_to_plc(const NetworkState& net, std::optional<int> src_node, int plc_id);

/// Quarantine isolation: a node in a quarantine VLAN only exchanges traffic
/// with nodes in the same quarantine VLAN. PLCs and external traffic are never
/// reachable from quarantine.
bool reachable(const NetworkState& net, std::optional<int> src_node, int dst_node);
bool reachable_vlan(const NetworkState& net, std::optional<int> src_node, int vlan_id);

/// Moves a workstation-kind node between its home VLAN and its level's
/// quarantine VLAN. The node's IP follows the VLAN. A node the APT has only
/// scanned loses the scanned flag since the APT no longer knows where it is.
/// Throws InvalidTarget for servers.
void quarantine_toggle(NetworkState& net, int node_id);

std::uint32_t make_ip(int a, int b, int c, int d);
std::string ip_to_string(std::uint32_t ip);
std::optional<std::uint32_t> parse_ip(std::string_view text);

}  // namespace icsim
