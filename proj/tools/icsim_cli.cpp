#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>

#include "icsim/config.hpp"
#include "icsim/dbn.hpp"
#include "icsim/errors.hpp"
#include "icsim/harness.hpp"
#include "icsim/protocol.hpp"

using namespace icsim;

namespace {

struct Common {
  std::string config_path;
  std::string apt;
  std::uint64_t seed = 1;
  int episodes = 100;
  unsigned threads = 0;
  std::string cpts_path;
  double random_rate = kCalibratedRandomRate;
  double expert_threshold = 0.5;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "network configuration file (JSON)");
  cmd->add_option("--apt", c.apt, "attacker preset")->check(CLI::IsMember({"apt1", "apt2"}));
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--episodes", c.episodes, "episodes per experiment")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "worker threads (0: all cores)");
  cmd->add_option("--cpts", c.cpts_path, "CPT file for belief-based policies");
  cmd->add_option("--random-rate", c.random_rate, "Poisson mean of random-policy actions per hour");
  cmd->add_option("--expert-threshold", c.expert_threshold, "expert policy compromise threshold");
}

Config resolve_config(const Common& c) {
  Config config = c.config_path.empty() ? default_config() : load_config(c.config_path);
  if (!c.apt.empty()) config.apt.preset = c.apt;
  return config;
}

PolicySpec policy_spec(const std::string& name, const Common& c) {
  PolicySpec p;
  p.name = name;
  p.random.rate = c.random_rate;
  p.expert.threshold = c.expert_threshold;
  return p;
}

struct Output {
  std::ofstream file;
  std::ostream* stream = &std::cout;
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    stream = &file;
  }
};

int run_protocol(const Common& c, const Config& config, const std::string& listen, const std::string& out_path,
                 const Cpts* cpts) {
  const auto [host, port] = parse_endpoint(listen);
  SessionOptions base;
  base.default_config = config;
  base.cpts = cpts;
  ProtocolServer server(base, host, port);
  server.session_options = [&](std::size_t i) {
    SessionOptions o = base;
    o.forced_seed = episode_seed(c.seed, i);
    return o;
  };
  std::cerr << "waiting for " << c.episodes << " agent sessions on " << host << ":" << server.port() << "\n";
  std::vector<EpisodeMetrics> metrics;
  bool aborted = false;
  server.run(static_cast<std::size_t>(c.episodes), true,
             [&](std::size_t i, const std::optional<EpisodeMetrics>& m) {
               if (!m) {
                 std::cerr << "episode " << i << " aborted: agent disconnected before the episode ended\n";
                 aborted = true;
                 server.stop();
                 return;
               }
               metrics.push_back(*m);
             });
  if (aborted || metrics.empty()) return 3;
  ExperimentResult r;
  r.policy = "protocol";
  r.episodes = static_cast<int>(metrics.size());
  std::vector<double> ret, off, cost, comp;
  for (const auto& m : metrics) {
    ret.push_back(m.discounted_return);
    off.push_back(m.final_plcs_offline);
    cost.push_back(m.avg_it_cost);
    comp.push_back(m.avg_nodes_compromised);
  }
  r.discounted_return = summarize(ret);
  r.plcs_offline = summarize(off);
  r.it_cost = summarize(cost);
  r.compromised = summarize(comp);
  Output out(out_path);
  write_metrics_header(*out.stream);
  write_metrics_row(*out.stream, r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ICS network attack/defense simulator"};
  app.require_subcommand(1);

  Common run_c;
  std::string run_policy = "playbook";
  std::string run_out;
  std::string run_log_dir;
  std::string run_listen = "127.0.0.1:5555";
  auto* run = app.add_subcommand("run", "run episodes of one policy and write metrics CSV");
  add_common(run, run_c);
  run->add_option("--policy", run_policy, "defender policy")
      ->check(CLI::IsMember({"random", "playbook", "expert", "noop", "protocol"}));
  run->add_option("--out", run_out, "metrics CSV (stdout when omitted)");
  run->add_option("--log-dir", run_log_dir, "write per-episode JSONL logs here");
  run->add_option("--listen", run_listen, "endpoint for --policy protocol");

  Common sweep_c;
  std::string sweep_param;
  std::string sweep_values;
  std::string sweep_policies = "playbook";
  std::string sweep_out;
  auto* sw = app.add_subcommand("sweep", "grid of experiments over one attacker parameter");
  add_common(sw, sweep_c);
  sw->add_option("--param", sweep_param, "cleanup | apt")->required()->check(CLI::IsMember({"cleanup", "apt"}));
  sw->add_option("--values", sweep_values, "start:stop:step or comma list")->required();
  sw->add_option("--policies", sweep_policies, "comma-separated policies");
  sw->add_option("--out", sweep_out, "long-format CSV (stdout when omitted)");

  Common learn_c;
  learn_c.episodes = 1000;
  std::string learn_logs;
  std::string learn_out = "cpts.json";
  double learn_alpha = 1.0;
  auto* learn = app.add_subcommand("learn-dbn", "learn belief-filter tables from logs or fresh random-policy runs");
  add_common(learn, learn_c);
  learn->add_option("--logs", learn_logs, "directory of episode logs; simulate when omitted");
  learn->add_option("--out", learn_out, "CPT file to write");
  learn->add_option("--alpha", learn_alpha, "Laplace smoothing");

  Common val_c;
  val_c.seed = 1000003;
  std::string val_logs;
  auto* val = app.add_subcommand("validate-dbn", "KL of filtered beliefs against the true states");
  add_common(val, val_c);
  val->add_option("--logs", val_logs, "directory of held-out logs; simulate when omitted");

  Common serve_c;
  std::string serve_listen = "127.0.0.1:5555";
  auto* serve = app.add_subcommand("serve", "serve the environment protocol over TCP");
  add_common(serve, serve_c);
  serve->add_option("--listen", serve_listen, "HOST:PORT");

  bool print_search = false;
  std::string print_path;
  auto* print = app.add_subcommand("print-config", "print the effective configuration as JSON");
  print->add_flag("--search", print_search, "start from the reduced search network");
  print->add_option("--config", print_path, "configuration file to normalize");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const Config config = resolve_config(run_c);
      std::optional<Cpts> cpts;
      if (!run_c.cpts_path.empty()) cpts = load_cpts(run_c.cpts_path);
      if (run_policy == "protocol")
        return run_protocol(run_c, config, run_listen, run_out, cpts ? &*cpts : nullptr);
      ExperimentOptions opts;
      opts.threads = run_c.threads;
      opts.cpts = cpts ? &*cpts : nullptr;
      opts.log_dir = run_log_dir;
      const auto r = run_experiment(policy_spec(run_policy, run_c), config, run_c.episodes, run_c.seed, opts);
      Output out(run_out);
      write_metrics_header(*out.stream);
      write_metrics_row(*out.stream, r);
      return 0;
    }
    if (*sw) {
      const Config config = resolve_config(sweep_c);
      std::optional<Cpts> cpts;
      if (!sweep_c.cpts_path.empty()) cpts = load_cpts(sweep_c.cpts_path);
      std::vector<PolicySpec> policies;
      for (const auto& name : parse_values(sweep_policies)) policies.push_back(policy_spec(name, sweep_c));
      ExperimentOptions opts;
      opts.threads = sweep_c.threads;
      opts.cpts = cpts ? &*cpts : nullptr;
      const auto rows = sweep(sweep_param, parse_values(sweep_values), policies, config, sweep_c.episodes,
                              sweep_c.seed, opts);
      Output out(sweep_out);
      write_sweep_csv(*out.stream, rows);
      return 0;
    }
    if (*learn) {
      Cpts cpts;
      if (!learn_logs.empty()) {
        CptCounter counter;
        for (const auto& path : list_logs(learn_logs)) counter.add_episode(read_episode_log(path));
        cpts = counter.finalize(learn_alpha);
      } else {
        cpts = learn_from_simulation(resolve_config(learn_c), learn_c.episodes, learn_c.seed,
                                     policy_spec("random", learn_c), learn_c.threads, learn_alpha);
      }
      save_cpts(cpts, learn_out);
      std::cerr << "learned tables from " << cpts.episodes << " episodes -> " << learn_out << "\n";
      return 0;
    }
    if (*val) {
      const Cpts cpts = val_c.cpts_path.empty() ? shipped_cpts() : load_cpts(val_c.cpts_path);
      KlAccumulator acc(cpts);
      if (!val_logs.empty()) {
        for (const auto& path : list_logs(val_logs)) acc.add_episode(read_episode_log(path));
      } else {
        std::mutex m;
        ExperimentOptions opts;
        opts.threads = val_c.threads;
        opts.log_sink = [&](std::size_t, EpisodeLog&& log) {
          std::lock_guard lock(m);
          acc.add_episode(log);
        };
        (void)run_experiment(policy_spec("random", val_c), resolve_config(val_c), val_c.episodes, val_c.seed, opts);
      }
      const auto s = acc.result();
      std::printf("node_hours,%llu\nkl_mean,%.6f\nkl_max,%.6f\nprior_kl_mean,%.6f\nprior_kl_max,%.6f\n",
                  static_cast<unsigned long long>(s.samples), s.mean, s.max, s.baseline_mean, s.baseline_max);
      return 0;
    }
    if (*print) {
      const Config config = !print_path.empty() ? load_config(print_path)
                            : print_search      ? search_config()
                                                : default_config();
      std::cout << config_to_json(config).dump(2) << "\n";
      return 0;
    }
    if (*serve) {
      const auto [host, port] = parse_endpoint(serve_listen);
      SessionOptions opts;
      opts.default_config = resolve_config(serve_c);
      std::optional<Cpts> cpts;
      if (!serve_c.cpts_path.empty()) cpts = load_cpts(serve_c.cpts_path);
      opts.cpts = cpts ? &*cpts : nullptr;
      ProtocolServer server(opts, host, port);
      std::cerr << "listening on " << host << ":" << server.port() << "\n";
      server.run();
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
