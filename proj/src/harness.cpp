#include "icsim/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace icsim {

namespace {

constexpr std::uint64_t kPolicyStream = 0x706f6c6963790000ULL;

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

void MetricsAccumulator::add(const StepResult& step, const NetworkState& net, int step_start) {
  m_.discounted_return += discounted_step(w_, step.reward, step_start);
  cost_sum_ += step.completed_cost;
  compromised_sum_ += net.count_compromised();
  ++m_.steps;
}

EpisodeMetrics MetricsAccumulator::finish(const NetworkState& net) const {
  EpisodeMetrics m = m_;
  m.final_plcs_offline = net.count_plcs(PlcStatus::disrupted) + net.count_plcs(PlcStatus::destroyed);
  if (m.steps > 0) {
    m.avg_it_cost = cost_sum_ / m.steps;
    m.avg_nodes_compromised = compromised_sum_ / m.steps;
  }
  return m;
}

EpisodeMetrics run_episode(const PolicySpec& spec, const Config& config, std::uint64_t seed,
                           const EpisodeOptions& options) {
  Episode ep(config, seed);
  auto policy = make_policy(spec);
  policy->reset(ep.net());
  Rng policy_rng(splitmix64(seed ^ kPolicyStream));

  std::optional<BeliefTracker> tracker;
  if (policy->needs_beliefs()) {
    const Cpts& cpts = options.cpts ? *options.cpts : shipped_cpts();
    tracker.emplace(cpts, ep.net().nodes.size());
  }
  if (options.log) append_log_records(ep.net(), nullptr, 0, *options.log);

  MetricsAccumulator metrics(config.reward);
  StepResult last = ep.initial();
  while (!ep.done()) {
    PolicyContext ctx{ep.net(), last, tracker ? &tracker->beliefs() : nullptr};
    const auto commands = policy->act(ctx, policy_rng);
    const int start = ep.clock();
    const int mu_prev = mu_bin(ep.net().count_compromised());
    last = ep.step_hour(commands);
    metrics.add(last, ep.net(), start);
    if (tracker) tracker->update(last);
    if (options.log) append_log_records(ep.net(), &last, mu_prev, *options.log);
  }
  return metrics.finish(ep.net());
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  const auto n = values.size();
  if (n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  if (n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  return s;
}

ExperimentResult run_experiment(const PolicySpec& policy, const Config& config, int n, std::uint64_t seed0,
                                const ExperimentOptions& options) {
  if (n < 1) throw std::invalid_argument("run_experiment: need at least one episode");
  if (!options.log_dir.empty()) std::filesystem::create_directories(options.log_dir);
  const bool logging = !options.log_dir.empty() || static_cast<bool>(options.log_sink);

  std::vector<EpisodeMetrics> results(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::mutex sink_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        EpisodeLog log;
        EpisodeOptions eo{options.cpts, logging ? &log : nullptr};
        results[static_cast<std::size_t>(i)] =
            run_episode(policy, config, episode_seed(seed0, static_cast<std::uint64_t>(i)), eo);
        if (!options.log_dir.empty()) {
          char name[32];
          std::snprintf(name, sizeof name, "episode_%05d.jsonl", i);
          write_episode_log((std::filesystem::path(options.log_dir) / name).string(), log);
        }
        if (options.log_sink) {
          std::lock_guard lock(sink_mutex);
          options.log_sink(static_cast<std::size_t>(i), std::move(log));
        }
      } catch (...) {
        std::lock_guard lock(sink_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult r;
  r.policy = policy.name;
  r.episodes = n;
  std::vector<double> ret, off, cost, comp;
  for (const auto& m : results) {
    ret.push_back(m.discounted_return);
    off.push_back(m.final_plcs_offline);
    cost.push_back(m.avg_it_cost);
    comp.push_back(m.avg_nodes_compromised);
  }
  r.discounted_return = summarize(ret);
  r.plcs_offline = summarize(off);
  r.it_cost = summarize(cost);
  r.compromised = summarize(comp);
  r.per_episode = std::move(results);
  return r;
}

std::vector<std::string> parse_values(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  if (text.find(':') != std::string::npos) {
    double a = 0, b = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0 || b < a)
      throw std::invalid_argument("range must look like start:stop:step");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", a + static_cast<double>(k) * step);
      out.emplace_back(buf);
    }
    return out;
  }
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<SweepRow> sweep(const std::string& param, const std::vector<std::string>& values,
                            const std::vector<PolicySpec>& policies, const Config& base, int n, std::uint64_t seed0,
                            const ExperimentOptions& options) {
  if (param != "cleanup" && param != "apt") throw std::invalid_argument("sweep param must be cleanup or apt");
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    Config c = base;
    if (param == "cleanup") {
      const double e = std::stod(value);
      if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("cleanup effectiveness must lie in [0, 1]");
      c.apt.cleanup_effectiveness = e;
    } else {
      (void)preset_params(value);
      c.apt.preset = value;
    }
    for (const auto& p : policies) rows.push_back({param, value, run_experiment(p, c, n, seed0, options)});
  }
  return rows;
}

void write_metrics_header(std::ostream& out) {
  out << "policy,episodes,return_mean,return_se,plcs_offline_mean,plcs_offline_se,it_cost_mean,it_cost_se,"
         "compromised_mean,compromised_se\n";
}

namespace {

std::string metric_fields(const ExperimentResult& r) {
  return fmt(r.discounted_return.mean, 4) + "," + fmt(r.discounted_return.se, 4) + "," + fmt(r.plcs_offline.mean, 4) +
         "," + fmt(r.plcs_offline.se, 4) + "," + fmt(r.it_cost.mean, 6) + "," + fmt(r.it_cost.se, 6) + "," +
         fmt(r.compromised.mean, 6) + "," + fmt(r.compromised.se, 6);
}

}  // namespace

void write_metrics_row(std::ostream& out, const ExperimentResult& r) {
  out << r.policy << ',' << r.episodes << ',' << metric_fields(r) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "param,value,policy,episodes,return_mean,return_se,plcs_offline_mean,plcs_offline_se,it_cost_mean,"
         "it_cost_se,compromised_mean,compromised_se\n";
  for (const auto& row : rows)
    out << row.param << ',' << row.value << ',' << row.result.policy << ',' << row.result.episodes << ','
        << metric_fields(row.result) << '\n';
}

Cpts learn_from_simulation(const Config& config, int n, std::uint64_t seed0, const PolicySpec& policy,
                           unsigned threads, double alpha) {
  CptCounter counter;
  ExperimentOptions opts;
  opts.threads = threads;
  opts.log_sink = [&](std::size_t, EpisodeLog&& log) { counter.add_episode(std::move(log)); };
  (void)run_experiment(policy, config, n, seed0, opts);
  return counter.finalize(alpha);
}

const Cpts& shipped_cpts() {
  static const Cpts cpts = [] {
    const std::string path = shipped_path("data/cpts.json");
    if (!std::filesystem::exists(path))
      throw std::runtime_error(path + " is missing; generate it with `icsim learn-dbn --episodes 1000 --out " + path +
                               "`");
    return load_cpts(path);
  }();
  return cpts;
}

}  // namespace icsim
