#include "icsim/reward.hpp"

#include <cmath>

namespace icsim {

RewardBreakdown step_reward(const RewardWeights& w, int n_disrupted, int n_destroyed, double completed_cost, int t) {
  RewardBreakdown r;
  r.r_plc = 1.0 - 0.05 * n_disrupted - 0.1 * n_destroyed;
  r.r_it = 1.0 - completed_cost;
  r.r_term = t >= w.t_max ? 1.0 / (1.0 - w.gamma) : 0.0;
  return r;
}

double shaping_potential(const RewardWeights& w, int compromised_workstations, int compromised_servers) {
  return -(w.shaping_a * compromised_workstations + w.shaping_b * compromised_servers);
}

double shaping_reward(const RewardWeights& w, int ws_before, int srv_before, int ws_after, int srv_after) {
  if (w.literal_shaping)
    return w.gamma * (w.shaping_a * (ws_before - ws_after) + w.shaping_b * (srv_before - srv_after));
  return w.gamma * shaping_potential(w, ws_after, srv_after) - shaping_potential(w, ws_before, srv_before);
}

double shaping_telescoped(const RewardWeights& w, double phi_first, double phi_last, int steps) {
  return std::pow(w.gamma, steps) * phi_last - phi_first;
}

double discounted_step(const RewardWeights& w, const RewardBreakdown& r, int step_start) {
  double v = std::pow(w.gamma, step_start) * (r.r_plc + w.lambda * r.r_it);
  if (r.r_term != 0.0) v += std::pow(w.gamma, step_start + 1) * r.r_term;
  return v;
}

double max_return(const RewardWeights& w) {
  const double g = w.gamma;
  const double series = (1.0 - std::pow(g, w.t_max)) / (1.0 - g);
  return series * (1.0 + w.lambda) + std::pow(g, w.t_max) / (1.0 - g);
}

}  // namespace icsim
