#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "icsim/config.hpp"
#include "icsim/dbn.hpp"
#include "icsim/engine.hpp"
#include "icsim/policies.hpp"

namespace icsim {

struct EpisodeMetrics {
  double discounted_return = 0.0;  // task reward only
  int final_plcs_offline = 0;      // disrupted + destroyed at the end
  double avg_it_cost = 0.0;        // mean per-step sum of completed action costs
  double avg_nodes_compromised = 0.0;
  int steps = 0;
};

/// Accumulates metrics one step at a time; shared by the local runner and the protocol server.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(const RewardWeights& w) : w_(w) {}
  void add(const StepResult& step, const NetworkState& net, int step_start);
  EpisodeMetrics finish(const NetworkState& net) const;

 private:
  RewardWeights w_;
  EpisodeMetrics m_;
  double cost_sum_ = 0.0;
  double compromised_sum_ = 0.0;
};

struct EpisodeOptions {
  const Cpts* cpts = nullptr;    // required by policies that need beliefs
  EpisodeLog* log = nullptr;     // filled with per-node-hour records when set
};

EpisodeMetrics run_episode(const PolicySpec& policy, const Config& config, std::uint64_t seed,
                           const EpisodeOptions& options = {});

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;
};

/// mean and std / sqrt(n) with the n - 1 sample deviation; se = 0 for n = 1.
MetricSummary summarize(const std::vector<double>& values);

struct ExperimentResult {
  std::string policy;
  int episodes = 0;
  MetricSummary discounted_return;
  MetricSummary plcs_offline;
  MetricSummary it_cost;
  MetricSummary compromised;
  std::vector<EpisodeMetrics> per_episode;
};

struct ExperimentOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  const Cpts* cpts = nullptr;
  std::string log_dir;  // write one JSONL log per episode when non-empty
  /// Receives each episode's log (called from worker threads, serialized).
  std::function<void(std::size_t, EpisodeLog&&)> log_sink;
};

/// Episode i uses seed episode_seed(seed0, i); results are aggregated in index order.
ExperimentResult run_experiment(const PolicySpec& policy, const Config& config, int n, std::uint64_t seed0,
                                const ExperimentOptions& options = {});

struct SweepRow {
  std::string param;
  std::string value;
  ExperimentResult result;
};

/// param is "cleanup" (cleanup effectiveness) or "apt" (preset name).
std::vector<SweepRow> sweep(const std::string& param, const std::vector<std::string>& values,
                            const std::vector<PolicySpec>& policies, const Config& base, int n, std::uint64_t seed0,
                            const ExperimentOptions& options = {});

/// Parses "a:b:step" or a comma-separated list into value strings.
std::vector<std::string> parse_values(const std::string& text);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const ExperimentResult& r);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Runs `n` random-policy episodes and learns CPTs from their logs in memory.
Cpts learn_from_simulation(const Config& config, int n, std::uint64_t seed0, const PolicySpec& policy,
                           unsigned threads = 0, double alpha = 1.0);

/// Shipped tables (data/cpts.json).
const Cpts& shipped_cpts();

}  // namespace icsim
