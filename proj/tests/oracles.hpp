#pragma once

// Reference computations shared by unit tests and the acceptance binary.
// They are written directly from the model definitions, not from library code.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "icsim/dbn.hpp"

namespace oracle {

using icsim::Belief;
using icsim::Cpts;
constexpr std::size_t S = icsim::kNumCompromiseStates;

/// Tables with every entry drawn uniformly from [floor, 1] and rows normalized.
inline Cpts random_cpts(std::mt19937_64& gen, double floor = 0.01) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  Cpts c;
  auto fill = [&](std::vector<double>& v, std::size_t n, std::size_t width) {
    v.resize(n);
    for (std::size_t base = 0; base < n; base += width) {
      double sum = 0;
      for (std::size_t k = 0; k < width; ++k) sum += v[base + k] = u(gen);
      for (std::size_t k = 0; k < width; ++k) v[base + k] /= sum;
    }
  };
  fill(c.transition, icsim::kNumMitigationClasses * icsim::kMuBins * S * S, S);
  fill(c.observation, icsim::kNumInvestigationClasses * S * icsim::kNumSymbols, icsim::kNumSymbols);
  std::vector<double> init, prior;
  fill(init, S, S);
  fill(prior, S, S);
  std::copy(init.begin(), init.end(), c.initial.begin());
  std::copy(prior.begin(), prior.end(), c.prior.begin());
  return c;
}

struct NodeInput {
  int action_class;
  int symbol;
};

/// Exact Bayes filter over the joint state of two nodes (144 states) whose
/// dynamics are independent given a fixed mu. Returns per-step marginals.
inline std::vector<std::array<Belief, 2>> joint_filter(const Cpts& c, int mu,
                                                       const std::vector<std::array<NodeInput, 2>>& inputs) {
  const std::size_t J = S * S;
  std::vector<double> joint(J);
  for (std::size_t a = 0; a < S; ++a)
    for (std::size_t b = 0; b < S; ++b) joint[a * S + b] = c.initial[a] * c.initial[b];

  auto trans = [&](int ac, std::size_t from, std::size_t to) {
    const std::size_t m = static_cast<std::size_t>(ac) / icsim::kNumInvestigationClasses;
    return c.transition[((m * icsim::kMuBins + static_cast<std::size_t>(mu)) * S + from) * S + to];
  };
  auto like = [&](int ac, int sym, std::size_t state) {
    const std::size_t i = static_cast<std::size_t>(ac) % icsim::kNumInvestigationClasses;
    return c.observation[(i * S + state) * icsim::kNumSymbols + static_cast<std::size_t>(sym)];
  };

  std::vector<std::array<Belief, 2>> out;
  std::vector<double> next(J);
  for (const auto& in : inputs) {
    for (std::size_t to = 0; to < J; ++to) {
      const std::size_t a2 = to / S, b2 = to % S;
      double p = 0.0;
      for (std::size_t from = 0; from < J; ++from) {
        const std::size_t a1 = from / S, b1 = from % S;
        p += joint[from] * trans(in[0].action_class, a1, a2) * trans(in[1].action_class, b1, b2);
      }
      next[to] = p * like(in[0].action_class, in[0].symbol, a2) * like(in[1].action_class, in[1].symbol, b2);
    }
    double z = 0.0;
    for (double v : next) z += v;
    for (std::size_t k = 0; k < J; ++k) joint[k] = next[k] / z;

    std::array<Belief, 2> marg{};
    for (std::size_t k = 0; k < J; ++k) {
      marg[0][k / S] += joint[k];
      marg[1][k % S] += joint[k];
    }
    out.push_back(marg);
  }
  return out;
}

}  // namespace oracle
