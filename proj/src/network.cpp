#include "icsim/network.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <set>
#include <stdexcept>

#include "icsim/errors.hpp"

namespace icsim {

namespace {

constexpr std::array<std::pair<NodeKind, std::string_view>, 5> kNodeKindNames{{
    {NodeKind::workstation, "workstation"},
    {NodeKind::hmi_workstation, "hmi_workstation"},
    {NodeKind::opc_server, "opc_server"},
    {NodeKind::historian_server, "historian_server"},
    {NodeKind::domain_controller, "domain_controller"},
}};

constexpr int kMaxNodesPerLevel = 250;

const std::vector<CompromiseFlags>& canonical_states() {
  static const std::vector<CompromiseFlags> states = [] {
    std::vector<CompromiseFlags> out;
    for (unsigned bits = 0; bits < 64; ++bits) {
      auto f = CompromiseFlags::from_bits(static_cast<std::uint8_t>(bits));
      if (f.satisfies_prerequisites()) out.push_back(f);
    }
    return out;
  }();
  return states;
}

const std::array<int, 64>& index_by_bits() {
  static const std::array<int, 64> table = [] {
    std::array<int, 64> t{};
    t.fill(-1);
    const auto& states = canonical_states();
    for (std::size_t i = 0; i < states.size(); ++i) t[states[i].bits()] = static_cast<int>(i);
    return t;
  }();
  return table;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  for (const auto& [k, name] : kNodeKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<NodeKind> parse_node_kind(std::string_view name) {
  for (const auto& [k, n] : kNodeKindNames)
    if (n == name) return k;
  return std::nullopt;
}

std::string_view to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::switch_device: return "switch";
    case DeviceKind::router: return "router";
    case DeviceKind::firewall: return "firewall";
  }
  return "unknown";
}

std::string_view to_string(PlcStatus status) {
  switch (status) {
    case PlcStatus::nominal: return "nominal";
    case PlcStatus::disrupted: return "disrupted";
    case PlcStatus::destroyed: return "destroyed";
  }
  return "unknown";
}

bool CompromiseFlags::satisfies_prerequisites() const {
  if (initial_compromise && !scanned) return false;
  if (reboot_persistence && !initial_compromise) return false;
  if (admin_access && !initial_compromise) return false;
  if (credential_persistence && !admin_access) return false;
  if (malware_cleaned && !admin_access) return false;
  return true;
}

std::uint8_t CompromiseFlags::bits() const {
  return static_cast<std::uint8_t>((scanned ? 1 : 0) | (initial_compromise ? 2 : 0) |
                                   (reboot_persistence ? 4 : 0) | (admin_access ? 8 : 0) |
                                   (credential_persistence ? 16 : 0) | (malware_cleaned ? 32 : 0));
}

CompromiseFlags CompromiseFlags::from_bits(std::uint8_t b) {
  CompromiseFlags f;
  f.scanned = b & 1;
  f.initial_compromise = b & 2;
  f.reboot_persistence = b & 4;
  f.admin_access = b & 8;
  f.credential_persistence = b & 16;
  f.malware_cleaned = b & 32;
  return f;
}

std::vector<CompromiseFlags> enumerate_compromise_states() { return canonical_states(); }

std::size_t state_index(const CompromiseFlags& flags) {
  const int idx = index_by_bits()[flags.bits()];
  if (idx < 0) throw LookupError("compromise flags violate the prerequisite chain");
  return static_cast<std::size_t>(idx);
}

const CompromiseFlags& state_flags(std::size_t index) {
  const auto& states = canonical_states();
  if (index >= states.size()) throw LookupError("compromise state index out of range");
  return states[index];
}

std::uint32_t make_ip(int a, int b, int c, int d) {
  return (static_cast<std::uint32_t>(a) << 24) | (static_cast<std::uint32_t>(b) << 16) |
         (static_cast<std::uint32_t>(c) << 8) | static_cast<std::uint32_t>(d);
}

std::string ip_to_string(std::uint32_t ip) {
  return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 255) + "." +
         std::to_string((ip >> 8) & 255) + "." + std::to_string(ip & 255);
}

std::optional<std::uint32_t> parse_ip(std::string_view text) {
  std::uint32_t out = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int part = 0; part < 4; ++part) {
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || v > 255) return std::nullopt;
    out = (out << 8) | v;
    p = next;
    if (part < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return out;
}

TopologyConfig default_topology() {
  TopologyConfig c;
  c.levels = {
      LevelConfig{2,
                  {VlanConfig{1,
                              {{NodeKind::workstation, 25},
                               {NodeKind::opc_server, 1},
                               {NodeKind::historian_server, 1},
                               {NodeKind::domain_controller, 1}}}},
                  2},
      LevelConfig{1, {VlanConfig{3, {{NodeKind::hmi_workstation, 5}}}}, 4},
  };
  c.plc_count = 50;
  c.plc_vlan = 3;
  return c;
}

TopologyConfig search_topology() {
  TopologyConfig c = default_topology();
  // Ten L2 workstations and three HMIs, no servers.
  c.levels[0].vlans[0].nodes = {{NodeKind::workstation, 10}};
  c.levels[1].vlans[0].nodes[0].count = 3;
  c.plc_count = 30;
  return c;
}

// ---------------------------------------------------------------------------
// NetworkState

const Node& NetworkState::node(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes.size())
    throw LookupError("unknown node id " + std::to_string(id));
  return nodes[static_cast<std::size_t>(id)];
}

Node& NetworkState::node(int id) {
  return const_cast<Node&>(static_cast<const NetworkState&>(*this).node(id));
}

const VlanInfo& NetworkState::vlan(int id) const {
  for (const auto& v : vlans)
    if (v.id == id) return v;
  throw LookupError("unknown vlan id " + std::to_string(id));
}

const LevelInfo& NetworkState::level(int lvl) const {
  for (const auto& l : levels)
    if (l.level == lvl) return l;
  throw LookupError("unknown level " + std::to_string(lvl));
}

std::optional<int> NetworkState::node_by_ip(std::uint32_t ip) const {
  auto it = ip_index_.find(ip);
  if (it == ip_index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<int>& NetworkState::vlan_path(std::optional<int> src_vlan, int dst_vlan) const {
  auto it = paths_.find({src_vlan.value_or(-1), dst_vlan});
  if (it == paths_.end()) throw LookupError("no path to vlan " + std::to_string(dst_vlan));
  return it->second;
}

int NetworkState::count_compromised() const {
  return static_cast<int>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.flags.compromised(); }));
}

int NetworkState::count_plcs(PlcStatus status) const {
  return static_cast<int>(
      std::count_if(plcs.begin(), plcs.end(), [&](const Plc& p) { return p.status == status; }));
}

void NetworkState::reindex_ip(std::uint32_t old_ip, const Node& n) {
  ip_index_.erase(old_ip);
  ip_index_[n.ip] = n.id;
}

// ---------------------------------------------------------------------------
// Construction

NetworkState build_network(const TopologyConfig& config) {
  if (config.levels.empty()) throw ConfigError("levels", "no levels declared");
  std::set<int> seen_levels;
  std::set<int> seen_vlans;
  for (const auto& lc : config.levels) {
    if (lc.level != 1 && lc.level != 2)
      throw ConfigError("levels[].level", "only levels 1 and 2 are simulated");
    if (!seen_levels.insert(lc.level).second)
      throw ConfigError("levels[].level", "duplicate level " + std::to_string(lc.level));
    if (lc.quarantine_vlan < 0) throw ConfigError("levels[].quarantine_vlan", "missing");
    if (lc.vlans.empty()) throw ConfigError("levels[].vlans", "level has no operations vlan");
    auto check_id = [&](int id, const char* field) {
      if (id <= 0 || id > 253) throw ConfigError(field, "vlan id must be in 1..253");
      if (!seen_vlans.insert(id).second)
        throw ConfigError(field, "duplicate vlan id " + std::to_string(id));
    };
    for (const auto& vc : lc.vlans) check_id(vc.id, "levels[].vlans[].id");
    check_id(lc.quarantine_vlan, "levels[].quarantine_vlan");
  }
  for (int required : {1, 2})
    if (!seen_levels.count(required))
      throw ConfigError("levels", "missing level " + std::to_string(required));
  if (config.plc_count < 0) throw ConfigError("plcs.count", "must be non-negative");

  NetworkState net;
  std::vector<LevelConfig> levels = config.levels;
  std::sort(levels.begin(), levels.end(),
            [](const LevelConfig& a, const LevelConfig& b) { return a.level > b.level; });

  auto add_device = [&](DeviceKind kind, int level, int vlan, std::uint32_t ip) {
    Device d{static_cast<int>(net.devices.size()), kind, level, vlan, ip};
    net.devices.push_back(d);
    return d.id;
  };

  for (const auto& lc : levels) {
    LevelInfo li;
    li.level = lc.level;
    li.quarantine_vlan = lc.quarantine_vlan;
    li.router_id = add_device(DeviceKind::router, lc.level, -1, make_ip(10, lc.level, 0, 1));
    li.firewall_id = add_device(DeviceKind::firewall, lc.level, -1, make_ip(10, lc.level, 0, 254));
    net.levels.push_back(li);

    int slot = 0;
    auto add_vlan = [&](int id, bool quarantine) {
      VlanInfo v{id, lc.level, quarantine, -1};
      v.switch_id = add_device(DeviceKind::switch_device, lc.level, id, make_ip(10, lc.level, id, 254));
      net.vlans.push_back(v);
    };
    for (const auto& vc : lc.vlans) {
      add_vlan(vc.id, false);
      for (const auto& group : vc.nodes) {
        if (group.count < 0) throw ConfigError("levels[].vlans[].nodes[].count", "must be non-negative");
        if (group.kind == NodeKind::hmi_workstation && lc.level != 1)
          throw ConfigError("levels[].vlans[].nodes[].kind", "hmi_workstation only on level 1");
        if (is_server(group.kind) && lc.level != 2)
          throw ConfigError("levels[].vlans[].nodes[].kind", "servers only on level 2");
        for (int i = 0; i < group.count; ++i) {
          if (slot >= kMaxNodesPerLevel)
            throw ConfigError("levels[].vlans[].nodes", "more than 250 nodes on one level");
          Node n;
          n.id = static_cast<int>(net.nodes.size());
          n.kind = group.kind;
          n.level = lc.level;
          n.home_vlan = n.vlan_id = vc.id;
          n.slot = slot++;
          n.ip = make_ip(10, lc.level, vc.id, n.slot + 1);
          net.nodes.push_back(n);
        }
      }
    }
    add_vlan(lc.quarantine_vlan, true);
  }

  if (config.plc_count > 0) {
    bool ok = false;
    for (const auto& v : net.vlans)
      if (v.id == config.plc_vlan && v.level == 1 && !v.quarantine) ok = true;
    if (!ok) throw ConfigError("plcs.vlan", "must name a level-1 operations vlan");
  }
  net.plc_vlan = config.plc_vlan;
  for (int i = 0; i < config.plc_count; ++i) net.plcs.push_back(Plc{i});

  for (const auto& n : net.nodes) net.ip_index_[n.ip] = n.id;

  // Device graph: switch <-> its level router; router(L) <-> firewall(L);
  // firewall(L) <-> router(L+1), or the outside world for the top level.
  const int n_dev = static_cast<int>(net.devices.size());
  const int outside = n_dev;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_dev + 1));
  auto link = [&](int a, int b) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  };
  for (const auto& v : net.vlans) link(v.switch_id, net.level(v.level).router_id);
  for (std::size_t i = 0; i < net.levels.size(); ++i) {
    const auto& li = net.levels[i];
    link(li.router_id, li.firewall_id);
    if (i == 0)
      link(li.firewall_id, outside);
    else
      link(li.firewall_id, net.levels[i - 1].router_id);
  }

  auto bfs_path = [&](int from, int to) {
    std::vector<int> prev(static_cast<std::size_t>(n_dev + 1), -2);
    std::deque<int> q{from};
    prev[static_cast<std::size_t>(from)] = -1;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      if (u == to) break;
      for (int w : adj[static_cast<std::size_t>(u)]) {
        if (prev[static_cast<std::size_t>(w)] != -2) continue;
        prev[static_cast<std::size_t>(w)] = u;
        q.push_back(w);
      }
    }
    std::vector<int> path;
    for (int u = to; u != -1; u = prev[static_cast<std::size_t>(u)]) {
      if (u != outside) path.push_back(u);
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  for (const auto& dst : net.vlans) {
    net.paths_[{-1, dst.id}] = bfs_path(outside, dst.switch_id);
    for (const auto& src : net.vlans) net.paths_[{src.id, dst.id}] = bfs_path(src.switch_id, dst.switch_id);
  }
  return net;
}

// ---------------------------------------------------------------------------
// Paths and reachability

std::vector<int> message_path(const NetworkState& net, std::optional<int> src_node, int dst_node) {
  if (src_node && *src_node == dst_node) throw std::invalid_argument("message_path: src == dst");
  const Node& dst = net.node(dst_node);
  std::optional<int> src_vlan;
  if (src_node) src_vlan = net.node(*src_node).vlan_id;
  return net.vlan_path(src_vlan, dst.vlan_id);
}

std::vector<int> message_path_to_vlan(const NetworkState& net, std::optional<int> src_node, int vlan_id) {
  std::optional<int> src_vlan;
  if (src_node) src_vlan = net.node(*src_node).vlan_id;
  return net.vlan_path(src_vlan, vlan_id);
}

std::vector<int> message_path_to_plc(const NetworkState& net, std::optional<int> src_node, int plc_id) {
  if (plc_id < 0 || static_cast<std::size_t>(plc_id) >= net.plcs.size())
    throw LookupError("unknown plc id " + std::to_string(plc_id));
  return message_path_to_vlan(net, src_node, net.plc_vlan);
}

bool reachable(const NetworkState& net, std::optional<int> src_node, int dst_node) {
  const Node& dst = net.node(dst_node);
  if (!src_node) return !dst.quarantined;
  const Node& src = net.node(*src_node);
  if (src.quarantined || dst.quarantined) return src.quarantined && dst.quarantined && src.vlan_id == dst.vlan_id;
  return true;
}

bool reachable_vlan(const NetworkState& net, std::optional<int> src_node, int vlan_id) {
  const VlanInfo& v = net.vlan(vlan_id);
  if (!src_node) return !v.quarantine;
  const Node& src = net.node(*src_node);
  if (src.quarantined || v.quarantine) return src.quarantined && src.vlan_id == vlan_id;
  return true;
}

void quarantine_toggle(NetworkState& net, int node_id) {
  Node& n = net.node(node_id);
  if (!is_workstation_kind(n.kind))
    throw InvalidTarget("quarantine applies to workstation nodes only, not " + std::string(to_string(n.kind)));
  const std::uint32_t old_ip = n.ip;
  n.quarantined = !n.quarantined;
  n.vlan_id = n.quarantined ? net.level(n.level).quarantine_vlan : n.home_vlan;
  n.ip = make_ip(10, n.level, n.vlan_id, n.slot + 1);
  if (!n.flags.initial_compromise) n.flags.scanned = false;
  net.reindex_ip(old_ip, n);
}

}  // namespace icsim
