#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsim/belief_kernels.hpp"
#include "icsim/engine.hpp"

namespace icsim {

inline constexpr std::size_t kMuBins = 4;
inline constexpr std::size_t kNumSymbols = 12;
inline constexpr std::size_t kNumActionClasses = kNumMitigationClasses * kNumInvestigationClasses;

using Belief = std::array<double, kNumCompromiseStates>;

/// Bin of an expected compromised-node count: <0.5, [0.5,2.5), [2.5,5.5), >=5.5.
int mu_bin(double expected_compromised);

/// One node-hour of training data. `state` is the canonical state index after
/// the hour; `mu` bins the true compromised count one hour earlier. Records
/// with t = 0 describe the reset state.
struct LogRecord {
  int t = 0;
  int node = 0;
  int state = 0;
  int action_class = 0;
  int obs = 0;
  int mu = 0;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

using EpisodeLog = std::vector<LogRecord>;

/// Records for one step of an episode (or for the reset state when `step` is null).
void append_log_records(const NetworkState& net, const StepResult* step, int mu_prev, EpisodeLog& out);

/// Learned conditional tables.
struct Cpts {
  // transition[((m * kMuBins + mu) * 12 + s) * 12 + s'] = P(s' | s, mu, m)
  std::vector<double> transition;
  // observation[(i * 12 + s') * 12 + o] = P(o | s', i)
  std::vector<double> observation;
  Belief initial{};  // state distribution at reset
  Belief prior{};    // marginal over all node-hours, the static baseline
  double alpha = 1.0;
  std::uint64_t episodes = 0;

  const double* trans(std::size_t mitigation, std::size_t mu) const {
    return transition.data() + (mitigation * kMuBins + mu) * kNumCompromiseStates * kNumCompromiseStates;
  }
  double obs(std::size_t investigation, std::size_t state, std::size_t symbol) const {
    return observation[(investigation * kNumCompromiseStates + state) * kNumSymbols + symbol];
  }
  /// Largest deviation of any conditional slice from summing to one.
  double max_normalization_error() const;
};

/// Streaming count accumulator; counts are additive across episodes.
class CptCounter {
 public:
  CptCounter();
  /// Records may arrive in any order; they are grouped by node and sorted by t.
  void add_episode(EpisodeLog log);
  std::uint64_t episodes() const { return episodes_; }
  std::uint64_t transitions() const { return transitions_; }
  /// Laplace-smoothed maximum-likelihood tables. Throws std::runtime_error when no episodes were added.
  Cpts finalize(double alpha = 1.0) const;

 private:
  std::vector<double> trans_counts_;
  std::vector<double> obs_counts_;
  std::array<double, kNumCompromiseStates> initial_counts_{};
  std::array<double, kNumCompromiseStates> prior_counts_{};
  std::uint64_t episodes_ = 0;
  std::uint64_t transitions_ = 0;
};

Cpts learn_tables(const std::vector<EpisodeLog>& logs, double alpha = 1.0);

struct UpdateResult {
  Belief belief{};
  bool fallback = false;  // observation had zero likelihood; prediction only
};

/// b'(s') = eta * P(o | s', inv) * sum_s P(s' | s, mu, mit) b(s).
UpdateResult belief_update(const Belief& b, int action_class, int symbol, int mu, const Cpts& cpts);

/// Same recursion for any state count; `trans` is row-major n x n, `like` has n entries.
std::vector<double> belief_update_generic(std::span<const double> b, std::span<const double> trans,
                                          std::span<const double> like, bool* fallback = nullptr);

double prob_compromised(const Belief& b);

/// mu bin of the summed compromise probabilities.
int summary(std::span<const Belief> beliefs);

/// Per-episode filter over every computing node.
class BeliefTracker {
 public:
  BeliefTracker(const Cpts& cpts, std::size_t nodes);
  void reset();
  /// Advances all nodes one hour. `action_class[i]`, `symbol[i]` per node.
  void update(std::span<const int> action_class, std::span<const int> symbol);
  void update(const StepResult& step);
  const std::vector<Belief>& beliefs() const { return beliefs_; }
  std::uint64_t fallbacks() const { return fallbacks_; }

 private:
  const Cpts* cpts_;
  std::vector<Belief> beliefs_;
  std::uint64_t fallbacks_ = 0;
};

struct KlStats {
  double mean = 0.0;
  double max = 0.0;
  double baseline_mean = 0.0;
  double baseline_max = 0.0;
  std::uint64_t samples = 0;
};

/// KL(point mass on the true state || belief) = -ln b(true), per node-hour
/// over t >= 1, for the filter and for the static prior.
KlStats validate_kl(const std::vector<EpisodeLog>& logs, const Cpts& cpts);

/// Incremental form of validate_kl for logs streamed one episode at a time.
class KlAccumulator {
 public:
  explicit KlAccumulator(const Cpts& cpts) : cpts_(&cpts) {}
  void add_episode(const EpisodeLog& log);
  KlStats result() const;

 private:
  const Cpts* cpts_;
  double sum_ = 0.0;
  double base_sum_ = 0.0;
  KlStats stats_;
};

nlohmann::json cpts_to_json(const Cpts& c);
Cpts cpts_from_json(const nlohmann::json& j);
void save_cpts(const Cpts& c, const std::string& path);
Cpts load_cpts(const std::string& path);

void write_episode_log(const std::string& path, const EpisodeLog& log);
EpisodeLog read_episode_log(const std::string& path);
/// Every *.jsonl file in `dir`, in file-name order.
std::vector<std::string> list_logs(const std::string& dir);

}  // namespace icsim
