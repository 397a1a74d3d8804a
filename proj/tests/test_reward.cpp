#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "icsim/reward.hpp"

using namespace icsim;

namespace {

// Straight summation over the never-attacked trace.
double summed_max_return(const RewardWeights& w) {
  double total = 0.0;
  double g = 1.0;
  for (int t = 0; t < w.t_max; ++t) {
    total += g * (1.0 + w.lambda);
    g *= w.gamma;
  }
  return total + g * (1.0 / (1.0 - w.gamma));
}

}  // namespace

TEST_CASE("per-step task reward") {
  const RewardWeights w;
  const auto quiet = step_reward(w, 0, 0, 0.0, 10);
  CHECK(quiet.total_task(w) == doctest::Approx(1.1));
  CHECK(quiet.r_term == 0.0);

  CHECK(step_reward(w, 2, 1, 0.0, 10).r_plc == doctest::Approx(0.8));
  CHECK(step_reward(w, 0, 0, 0.25, 10).r_it == doctest::Approx(0.75));
  CHECK(step_reward(w, 0, 0, 0.0, 5000).r_term == doctest::Approx(2000.0));
  CHECK(step_reward(w, 0, 0, 0.0, 4999).r_term == 0.0);
  CHECK(step_reward(w, 50, 0, 0.0, 1).r_plc <= 1.0);
}

TEST_CASE("shaping potential and reward") {
  const RewardWeights w;
  CHECK(shaping_potential(w, 3, 1) == -5.0);
  CHECK(shaping_reward(w, 0, 0, 0, 0) == 0.0);

  const int k = 4;
  // One workstation secured: gamma * -(k-1) - (-k) = k - gamma (k-1).
  CHECK(shaping_reward(w, k, 0, k - 1, 0) == doctest::Approx(k - w.gamma * (k - 1)));
  CHECK(shaping_reward(w, k, 0, k - 1, 0) > 0);
  // No change: (gamma - 1) Phi.
  CHECK(shaping_reward(w, 2, 1, 2, 1) == doctest::Approx((w.gamma - 1.0) * -4.0));

  RewardWeights lit = w;
  lit.literal_shaping = true;
  CHECK(shaping_reward(lit, 3, 1, 1, 0) == doctest::Approx(w.gamma * (2 * 1.0 + 1 * 2.0)));

  const auto r = step_reward(w, 0, 0, 0.0, 1);
  RewardBreakdown shaped = r;
  shaped.r_shape = 0.5;
  CHECK(shaped.total_task(w) == r.total_task(w));
  CHECK(shaped.total_train(w) == doctest::Approx(r.total_task(w) + 500.0));
}

TEST_CASE("discounted shaping telescopes on random traces") {
  const RewardWeights w;
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> steps_d(1, 100), count_d(0, 6), delta_d(-1, 1);
  for (int trace = 0; trace < 200; ++trace) {
    const int T = steps_d(gen);
    int ws = count_d(gen), srv = count_d(gen) % 3;
    const double phi0 = shaping_potential(w, ws, srv);
    double sum = 0.0;
    for (int t = 0; t < T; ++t) {
      const int ws2 = std::max(0, ws + delta_d(gen));
      const int srv2 = std::clamp(srv + delta_d(gen), 0, 3);
      sum += std::pow(w.gamma, t) * shaping_reward(w, ws, srv, ws2, srv2);
      ws = ws2;
      srv = srv2;
    }
    const double phiT = shaping_potential(w, ws, srv);
    CHECK(std::abs(sum - (std::pow(w.gamma, T) * phiT - phi0)) < 1e-8);
    CHECK(std::abs(sum - shaping_telescoped(w, phi0, phiT, T)) < 1e-8);
  }
}

TEST_CASE("max return") {
  const RewardWeights w;
  const double closed = max_return(w);
  CHECK(closed == doctest::Approx(summed_max_return(w)).epsilon(1e-12));
  CHECK(closed == doctest::Approx(2183.6).epsilon(0.5 / 2183.6));

  RewardWeights one = w;
  one.t_max = 1;
  CHECK(max_return(one) == doctest::Approx(1.1 + w.gamma * 2000.0));
}

TEST_CASE("discounting convention") {
  const RewardWeights w;
  const auto r = step_reward(w, 0, 0, 0.0, 1);
  CHECK(discounted_step(w, r, 0) == doctest::Approx(1.1));
  CHECK(discounted_step(w, r, 10) == doctest::Approx(1.1 * std::pow(w.gamma, 10)));
  const auto last = step_reward(w, 0, 0, 0.0, w.t_max);
  CHECK(discounted_step(w, last, w.t_max - 1) ==
        doctest::Approx(1.1 * std::pow(w.gamma, w.t_max - 1) + 2000.0 * std::pow(w.gamma, w.t_max)));

  double total = 0.0;
  for (int k = 0; k < w.t_max; ++k) total += discounted_step(w, step_reward(w, 0, 0, 0.0, k + 1), k);
  CHECK(total == doctest::Approx(max_return(w)).epsilon(1e-12));
}
