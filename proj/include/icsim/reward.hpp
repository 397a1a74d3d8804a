#pragma once

namespace icsim {

struct RewardWeights {
  double lambda = 0.1;
  double gamma = 0.9995;
  int t_max = 5000;
  double shaping_a = 1.0;  // per compromised workstation-kind node
  double shaping_b = 2.0;  // per compromised server
  double shaping_scale = 1000.0;
  bool literal_shaping = false;  // gamma * (A dW + B dS) instead of the potential difference
};

struct RewardBreakdown {
  double r_plc = 0.0;
  double r_it = 0.0;
  double r_term = 0.0;
  double r_shape = 0.0;

  double total_task(const RewardWeights& w) const { return r_plc + w.lambda * r_it + r_term; }
  double total_train(const RewardWeights& w) const { return total_task(w) + w.shaping_scale * r_shape; }
};

/// `t` is the clock after the step; the terminal bonus applies once t >= t_max.
RewardBreakdown step_reward(const RewardWeights& w, int n_disrupted, int n_destroyed, double completed_cost, int t);

/// Phi(s) = -(A * compromised workstations + B * compromised servers).
double shaping_potential(const RewardWeights& w, int compromised_workstations, int compromised_servers);

/// gamma * Phi(after) - Phi(before), or the literal form
/// gamma * (A * (W_before - W_after) + B * (S_before - S_after)) when configured.
double shaping_reward(const RewardWeights& w, int ws_before, int srv_before, int ws_after, int srv_after);

/// Sum_{t<T} gamma^t (gamma Phi(s_{t+1}) - Phi(s_t)) collapses to gamma^T Phi(s_T) - Phi(s_0).
double shaping_telescoped(const RewardWeights& w, double phi_first, double phi_last, int steps);

/// Discounting: the step that starts at clock k is weighted gamma^k; the
/// terminal bonus, earned on reaching t_max, is weighted gamma^t_max.
double discounted_step(const RewardWeights& w, const RewardBreakdown& r, int step_start);

/// Return of the never-attacked, never-acting trace:
/// sum_{t<t_max} gamma^t (1 + lambda) + gamma^t_max / (1 - gamma).
double max_return(const RewardWeights& w);

}  // namespace icsim
