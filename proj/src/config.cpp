#include "icsim/config.hpp"

#include <fstream>
#include <sstream>

#include "icsim/errors.hpp"

namespace icsim {

using nlohmann::json;

namespace {

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key, e.what());
  }
}

template <typename T>
void read_opt(const json& obj, const std::string& key, const std::string& path, T& out) {
  if (obj.contains(key)) out = get_field<T>(obj, key, path);
}

template <typename T>
void read_opt(const json& obj, const std::string& key, const std::string& path, std::optional<T>& out) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = get_field<T>(obj, key, path);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

double probability(double p, const std::string& field) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(field, "must lie in [0, 1]");
  return p;
}

TopologyConfig parse_topology(const json& j) {
  TopologyConfig t;
  const json& levels = j.at("levels");
  if (!levels.is_array() || levels.empty()) throw ConfigError("levels", "expected a non-empty array");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string lp = "levels[" + std::to_string(i) + "]";
    const json& lj = levels[i];
    require_object(lj, lp);
    LevelConfig lc;
    lc.level = get_field<int>(lj, "level", lp);
    lc.quarantine_vlan = get_field<int>(lj, "quarantine_vlan", lp);
    if (!lj.contains("vlans") || !lj["vlans"].is_array()) throw ConfigError(lp + ".vlans", "expected an array");
    for (std::size_t v = 0; v < lj["vlans"].size(); ++v) {
      const std::string vp = lp + ".vlans[" + std::to_string(v) + "]";
      const json& vj = lj["vlans"][v];
      require_object(vj, vp);
      VlanConfig vc;
      vc.id = get_field<int>(vj, "id", vp);
      if (vj.contains("nodes")) {
        for (std::size_t g = 0; g < vj["nodes"].size(); ++g) {
          const std::string gp = vp + ".nodes[" + std::to_string(g) + "]";
          const json& gj = vj["nodes"][g];
          auto kind = parse_node_kind(get_field<std::string>(gj, "kind", gp));
          if (!kind) throw ConfigError(gp + ".kind", "unknown node kind");
          vc.nodes.push_back({*kind, get_field<int>(gj, "count", gp)});
        }
      }
      lc.vlans.push_back(std::move(vc));
    }
    t.levels.push_back(std::move(lc));
  }
  if (j.contains("plcs")) {
    const json& pj = j["plcs"];
    require_object(pj, "plcs");
    t.plc_count = get_field<int>(pj, "count", "plcs");
    t.plc_vlan = get_field<int>(pj, "vlan", "plcs");
  }
  return t;
}

void parse_ids(const json& j, IdsParams& ids) {
  require_object(j, "ids");
  read_opt(j, "passive_rate", "ids", ids.passive_rate);
  probability(ids.passive_rate, "ids.passive_rate");
  if (j.contains("false_rates")) {
    const json& fr = j["false_rates"];
    if (!fr.is_array() || fr.size() != 3) throw ConfigError("ids.false_rates", "expected three per-severity rates");
    for (std::size_t s = 0; s < 3; ++s)
      ids.false_rates[s] = probability(fr[s].get<double>(), "ids.false_rates[" + std::to_string(s) + "]");
  }
  if (j.contains("device_factors")) {
    const json& df = j["device_factors"];
    read_opt(df, "switch", "ids.device_factors", ids.switch_factor);
    read_opt(df, "router", "ids.device_factors", ids.router_factor);
    read_opt(df, "firewall", "ids.device_factors", ids.firewall_factor);
  }
}

void parse_apt(const json& j, AptConfig& a) {
  require_object(j, "apt");
  read_opt(j, "enabled", "apt", a.enabled);
  read_opt(j, "preset", "apt", a.preset);
  try {
    (void)preset_params(a.preset);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("apt.preset", e.what());
  }
  read_opt(j, "lateral_threshold", "apt", a.lateral_threshold);
  read_opt(j, "plc_threshold_destroy", "apt", a.plc_threshold_destroy);
  read_opt(j, "plc_threshold_disrupt", "apt", a.plc_threshold_disrupt);
  read_opt(j, "labor_budget", "apt", a.labor_budget);
  read_opt(j, "cleanup_effectiveness", "apt", a.cleanup_effectiveness);
  if (a.cleanup_effectiveness) probability(*a.cleanup_effectiveness, "apt.cleanup_effectiveness");
  for (auto* t : {&a.lateral_threshold, &a.plc_threshold_destroy, &a.plc_threshold_disrupt})
    if (*t && **t < 1) throw ConfigError("apt", "thresholds must be at least 1");
  if (j.contains("objective") && !j["objective"].is_null()) {
    const auto s = get_field<std::string>(j, "objective", "apt");
    if (s == "destroy") a.objective = AttackObjective::destroy;
    else if (s == "disrupt") a.objective = AttackObjective::disrupt;
    else throw ConfigError("apt.objective", "expected destroy or disrupt");
  }
  if (j.contains("vector") && !j["vector"].is_null()) {
    const auto s = get_field<std::string>(j, "vector", "apt");
    if (s == "opc_server") a.vector = AttackVector::opc_server;
    else if (s == "level1_hmi") a.vector = AttackVector::level1_hmi;
    else throw ConfigError("apt.vector", "expected opc_server or level1_hmi");
  }
  if (j.contains("reentry")) {
    const json& r = j["reentry"];
    require_object(r, "apt.reentry");
    read_opt(r, "enabled", "apt.reentry", a.reentry);
    read_opt(r, "mean_hours", "apt.reentry", a.reentry_mean_hours);
    if (!(a.reentry_mean_hours >= 1.0)) throw ConfigError("apt.reentry.mean_hours", "must be at least 1");
  }
}

void parse_reward(const json& j, RewardWeights& w) {
  require_object(j, "reward");
  read_opt(j, "lambda", "reward", w.lambda);
  read_opt(j, "gamma", "reward", w.gamma);
  read_opt(j, "t_max", "reward", w.t_max);
  read_opt(j, "shaping_a", "reward", w.shaping_a);
  read_opt(j, "shaping_b", "reward", w.shaping_b);
  read_opt(j, "shaping_scale", "reward", w.shaping_scale);
  read_opt(j, "literal_shaping", "reward", w.literal_shaping);
  if (!(w.gamma > 0.0 && w.gamma < 1.0)) throw ConfigError("reward.gamma", "must lie in (0, 1)");
  if (w.lambda < 0.0) throw ConfigError("reward.lambda", "must be non-negative");
  if (w.t_max < 1) throw ConfigError("reward.t_max", "must be positive");
}

void parse_defender(const json& j, DefenderTable& table) {
  require_object(j, "defender");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string path = "defender." + it.key();
    auto action = parse_defender_action(it.key());
    if (!action) throw ConfigError(path, "unknown defender action");
    auto& e = table[*action];
    const json& v = it.value();
    require_object(v, path);
    if (v.contains("cost")) e.cost_workstation = e.cost_server = get_field<double>(v, "cost", path);
    read_opt(v, "cost_workstation", path, e.cost_workstation);
    read_opt(v, "cost_server", path, e.cost_server);
    read_opt(v, "duration", path, e.duration);
    read_opt(v, "detect_prob", path, e.detect_prob);
    probability(e.detect_prob, path + ".detect_prob");
    if (*action != DefenderAction::NoOp && e.duration < 1) throw ConfigError(path + ".duration", "must be >= 1");
  }
}

}  // namespace

AptParams AptConfig::params() const {
  AptParams p = preset_params(preset);
  if (lateral_threshold) p.lateral_threshold = *lateral_threshold;
  if (plc_threshold_destroy) p.plc_threshold_destroy = *plc_threshold_destroy;
  if (plc_threshold_disrupt) p.plc_threshold_disrupt = *plc_threshold_disrupt;
  if (labor_budget) p.labor_budget = *labor_budget;
  if (cleanup_effectiveness) p.cleanup_effectiveness = *cleanup_effectiveness;
  return p;
}

Config default_config() {
  Config c;
  c.topology = default_topology();
  return c;
}

Config search_config() {
  Config c;
  c.topology = search_topology();
  return c;
}

Config config_from_json(const json& j) {
  require_object(j, "<root>");
  Config c = default_config();
  if (j.contains("levels")) c.topology = parse_topology(j);
  else if (j.contains("plcs")) throw ConfigError("levels", "plcs given without levels");
  if (j.contains("ids")) parse_ids(j["ids"], c.ids);
  if (j.contains("apt")) parse_apt(j["apt"], c.apt);
  if (j.contains("reward")) parse_reward(j["reward"], c.reward);
  if (j.contains("defender")) parse_defender(j["defender"], c.defender);
  if (j.contains("engine")) {
    require_object(j["engine"], "engine");
    read_opt(j["engine"], "end_on_all_destroyed", "engine", c.engine.end_on_all_destroyed);
  }
  // Surface topology errors at load time.
  (void)build_network(c.topology);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", path + ": " + e.what());
  }
  return config_from_json(j);
}

nlohmann::ordered_json config_to_json(const Config& c) {
  nlohmann::ordered_json j;
  j["levels"] = nlohmann::ordered_json::array();
  for (const auto& l : c.topology.levels) {
    nlohmann::ordered_json lj;
    lj["level"] = l.level;
    lj["vlans"] = nlohmann::ordered_json::array();
    for (const auto& v : l.vlans) {
      nlohmann::ordered_json vj;
      vj["id"] = v.id;
      vj["nodes"] = nlohmann::ordered_json::array();
      for (const auto& g : v.nodes) vj["nodes"].push_back({{"kind", std::string(to_string(g.kind))}, {"count", g.count}});
      lj["vlans"].push_back(vj);
    }
    lj["quarantine_vlan"] = l.quarantine_vlan;
    j["levels"].push_back(lj);
  }
  j["plcs"] = {{"count", c.topology.plc_count}, {"vlan", c.topology.plc_vlan}};
  j["ids"] = {{"passive_rate", c.ids.passive_rate},
              {"false_rates", c.ids.false_rates},
              {"device_factors",
               {{"switch", c.ids.switch_factor}, {"router", c.ids.router_factor}, {"firewall", c.ids.firewall_factor}}}};
  const AptParams p = c.apt.params();
  nlohmann::ordered_json aj;
  aj["enabled"] = c.apt.enabled;
  aj["preset"] = c.apt.preset;
  aj["lateral_threshold"] = p.lateral_threshold;
  aj["plc_threshold_destroy"] = p.plc_threshold_destroy;
  aj["plc_threshold_disrupt"] = p.plc_threshold_disrupt;
  aj["labor_budget"] = p.labor_budget;
  aj["cleanup_effectiveness"] = p.cleanup_effectiveness;
  aj["objective"] = c.apt.objective ? nlohmann::ordered_json(std::string(to_string(*c.apt.objective))) : nullptr;
  aj["vector"] = c.apt.vector ? nlohmann::ordered_json(std::string(to_string(*c.apt.vector))) : nullptr;
  aj["reentry"] = {{"enabled", c.apt.reentry}, {"mean_hours", c.apt.reentry_mean_hours}};
  j["apt"] = aj;
  const auto& w = c.reward;
  j["reward"] = {{"lambda", w.lambda},           {"gamma", w.gamma},         {"t_max", w.t_max},
                 {"shaping_a", w.shaping_a},     {"shaping_b", w.shaping_b}, {"shaping_scale", w.shaping_scale},
                 {"literal_shaping", w.literal_shaping}};
  nlohmann::ordered_json dj;
  for (std::size_t i = 0; i < kNumDefenderActions; ++i) {
    const auto a = static_cast<DefenderAction>(i);
    const auto& e = c.defender[a];
    dj[std::string(to_string(a))] = {{"cost_workstation", e.cost_workstation},
                                     {"cost_server", e.cost_server},
                                     {"duration", e.duration},
                                     {"detect_prob", e.detect_prob}};
  }
  j["defender"] = dj;
  j["engine"] = {{"end_on_all_destroyed", c.engine.end_on_all_destroyed}};
  return j;
}

std::string shipped_path(const std::string& relative) { return std::string(ICSIM_SOURCE_DIR) + "/" + relative; }

}  // namespace icsim
