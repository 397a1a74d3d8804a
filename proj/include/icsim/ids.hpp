#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "icsim/apt.hpp"
#include "icsim/network.hpp"
#include "icsim/rng.hpp"

namespace icsim {

enum class AlertSource : std::uint8_t { action, passive, false_alarm, investigation };
std::string_view to_string(AlertSource s);

struct Alert {
  int time = 0;
  std::uint32_t ip = 0;
  int severity = 1;  // 1..3
  AlertSource source = AlertSource::action;

  friend bool operator==(const Alert&, const Alert&) = default;
};

struct IdsParams {
  double passive_rate = 0.1;
  /// False-alarm probability per level per hour, indexed by severity - 1.
  std::array<double, 3> false_rates{5e-2, 5e-3, 2.5e-3};
  double switch_factor = 1.0;
  double router_factor = 2.0;
  double firewall_factor = 5.0;

  double factor(DeviceKind kind) const;
};

/// Severity of an alert originating from a node in state `flags`:
/// 3 with credential persistence or for PLC attack actions, 2 with admin
/// access, 1 otherwise.
int severity_mapping(const CompromiseFlags& flags, std::optional<AptAction> action = std::nullopt);

/// Alert for one APT action attempt. An empty `path` is a local action: one
/// Bernoulli(alert_rate) draw attributed to `local_ip`. Otherwise each device
/// draws independently with min(1, factor * alert_rate) and the first firing
/// device in path order supplies the IP.
std::optional<Alert> action_alert(const AptActionSpec& spec, std::span<const int> path, const NetworkState& net,
                                  std::uint32_t local_ip, int severity, const IdsParams& params, int time,
                                  Rng& rng);

/// Analytic probability that action_alert fires for this path.
double action_alert_probability(double alert_rate, std::span<const int> path, const NetworkState& net,
                                const IdsParams& params);

/// One draw per online compromised node with probability passive_rate * m,
/// m = 1 - cleanup_effectiveness for cleaned nodes, 1 otherwise.
std::vector<Alert> passive_alerts(const NetworkState& net, double cleanup_effectiveness, const IdsParams& params,
                                  int time, Rng& rng);

/// Per level and severity one Bernoulli draw; the IP is a uniformly chosen
/// node of that level.
std::vector<Alert> false_alerts(const NetworkState& net, const IdsParams& params, int time, Rng& rng);

}  // namespace icsim
