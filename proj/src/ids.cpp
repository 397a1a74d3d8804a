#include "icsim/ids.hpp"

#include <algorithm>

namespace icsim {

std::string_view to_string(AlertSource s) {
  switch (s) {
    case AlertSource::action: return "action";
    case AlertSource::passive: return "passive";
    case AlertSource::false_alarm: return "false";
    case AlertSource::investigation: return "investigation";
  }
  return "unknown";
}

double IdsParams::factor(DeviceKind kind) const {
  switch (kind) {
    case DeviceKind::switch_device: return switch_factor;
    case DeviceKind::router: return router_factor;
    case DeviceKind::firewall: return firewall_factor;
  }
  return 1.0;
}

int severity_mapping(const CompromiseFlags& flags, std::optional<AptAction> action) {
  if (action && (*action == AptAction::FlashFirmware || *action == AptAction::DisruptPlc ||
                 *action == AptAction::DestroyPlc))
    return 3;
  if (flags.credential_persistence) return 3;
  if (flags.admin_access) return 2;
  return 1;
}

std::optional<Alert> action_alert(const AptActionSpec& spec, std::span<const int> path, const NetworkState& net,
                                  std::uint32_t local_ip, int severity, const IdsParams& params, int time,
                                  Rng& rng) {
  const double rate = std::clamp(spec.alert_rate, 0.0, 1.0);
  if (path.empty()) {
    if (bernoulli(rng, rate)) return Alert{time, local_ip, severity, AlertSource::action};
    return std::nullopt;
  }
  std::optional<Alert> first;
  for (int dev_id : path) {
    const Device& dev = net.devices[static_cast<std::size_t>(dev_id)];
    const double p = std::clamp(params.factor(dev.kind) * rate, 0.0, 1.0);
    if (bernoulli(rng, p) && !first) first = Alert{time, dev.ip, severity, AlertSource::action};
  }
  return first;
}

double action_alert_probability(double alert_rate, std::span<const int> path, const NetworkState& net,
                                const IdsParams& params) {
  const double rate = std::clamp(alert_rate, 0.0, 1.0);
  if (path.empty()) return rate;
  double silent = 1.0;
  for (int dev_id : path)
    silent *= 1.0 - std::clamp(params.factor(net.devices[static_cast<std::size_t>(dev_id)].kind) * rate, 0.0, 1.0);
  return 1.0 - silent;
}

std::vector<Alert> passive_alerts(const NetworkState& net, double cleanup_effectiveness, const IdsParams& params,
                                  int time, Rng& rng) {
  std::vector<Alert> out;
  const double cleaned_scale = 1.0 - std::clamp(cleanup_effectiveness, 0.0, 1.0);
  for (const auto& n : net.nodes) {
    if (!n.flags.initial_compromise || !n.online()) continue;
    const double m = n.flags.malware_cleaned ? cleaned_scale : 1.0;
    if (bernoulli(rng, std::clamp(params.passive_rate * m, 0.0, 1.0)))
      out.push_back(Alert{time, n.ip, severity_mapping(n.flags), AlertSource::passive});
  }
  return out;
}

std::vector<Alert> false_alerts(const NetworkState& net, const IdsParams& params, int time, Rng& rng) {
  std::vector<Alert> out;
  for (const auto& level : net.levels) {
    std::vector<std::uint32_t> ips;
    for (const auto& n : net.nodes)
      if (n.level == level.level) ips.push_back(n.ip);
    for (int sev = 1; sev <= 3; ++sev) {
      const double p = std::clamp(params.false_rates[static_cast<std::size_t>(sev - 1)], 0.0, 1.0);
      if (!bernoulli(rng, p) || ips.empty()) continue;
      out.push_back(Alert{time, ips[uniform_index(rng, ips.size())], sev, AlertSource::false_alarm});
    }
  }
  return out;
}

}  // namespace icsim
