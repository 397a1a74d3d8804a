#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "icsim/apt.hpp"
#include "icsim/defender.hpp"
#include "icsim/ids.hpp"
#include "icsim/network.hpp"
#include "icsim/reward.hpp"

namespace icsim {

struct AptConfig {
  bool enabled = true;
  std::string preset = "apt1";
  // Field-by-field overrides applied on top of the preset.
  std::optional<int> lateral_threshold;
  std::optional<int> plc_threshold_destroy;
  std::optional<int> plc_threshold_disrupt;
  std::optional<double> labor_budget;
  std::optional<double> cleanup_effectiveness;
  // Sampled uniformly per episode when unset.
  std::optional<AttackObjective> objective;
  std::optional<AttackVector> vector;
  bool reentry = true;
  double reentry_mean_hours = 168.0;

  AptParams params() const;
};

struct EngineConfig {
  bool end_on_all_destroyed = false;
};

struct Config {
  TopologyConfig topology;
  IdsParams ids;
  AptConfig apt;
  RewardWeights reward;
  DefenderTable defender;
  EngineConfig engine;
};

/// Reference network with all defaults.
Config default_config();
/// Reduced network used for hyper-parameter search.
Config search_config();

/// Missing blocks keep their defaults; a present `levels` array replaces the
/// whole topology. Throws ConfigError naming the offending field.
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::string& path);
nlohmann::ordered_json config_to_json(const Config& c);

/// Path of a file shipped in the source tree (config/, data/).
std::string shipped_path(const std::string& relative);

}  // namespace icsim
