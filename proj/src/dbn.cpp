#include "icsim/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "icsim/errors.hpp"

namespace icsim {

using nlohmann::json;

namespace {

constexpr std::size_t S = kNumCompromiseStates;
constexpr std::size_t kTransSize = kNumMitigationClasses * kMuBins * S * S;
constexpr std::size_t kObsSize = kNumInvestigationClasses * S * kNumSymbols;
constexpr double kMinProb = 1e-12;

void normalize_slices(const std::vector<double>& counts, std::vector<double>& out, std::size_t width, double alpha) {
  out.resize(counts.size());
  for (std::size_t base = 0; base < counts.size(); base += width) {
    double total = 0.0;
    for (std::size_t k = 0; k < width; ++k) total += counts[base + k] + alpha;
    for (std::size_t k = 0; k < width; ++k)
      out[base + k] = total > 0.0 ? (counts[base + k] + alpha) / total : 1.0 / static_cast<double>(width);
  }
}

Belief normalize_counts(const std::array<double, S>& counts, double alpha) {
  Belief b{};
  double total = 0.0;
  for (double c : counts) total += c + alpha;
  for (std::size_t s = 0; s < S; ++s) b[s] = total > 0.0 ? (counts[s] + alpha) / total : 1.0 / S;
  return b;
}

std::vector<double> json_vector(const json& j, const char* key, std::size_t expected) {
  auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != expected)
    throw ConfigError(std::string("cpts.") + key,
                      "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  return v;
}

}  // namespace

int mu_bin(double e) {
  if (e < 0.5) return 0;
  if (e < 2.5) return 1;
  if (e < 5.5) return 2;
  return 3;
}

void append_log_records(const NetworkState& net, const StepResult* step, int mu_prev, EpisodeLog& out) {
  for (const auto& n : net.nodes) {
    LogRecord r;
    r.t = step ? step->t : 0;
    r.node = n.id;
    r.state = static_cast<int>(state_index(n.flags));
    if (step) {
      const auto& o = step->node_obs[static_cast<std::size_t>(n.id)];
      r.action_class = o.action_class();
      r.obs = o.symbol();
      r.mu = mu_prev;
    }
    out.push_back(r);
  }
}

double Cpts::max_normalization_error() const {
  double worst = 0.0;
  auto check = [&](const double* p, std::size_t width) {
    double total = 0.0;
    for (std::size_t k = 0; k < width; ++k) total += p[k];
    worst = std::max(worst, std::abs(total - 1.0));
  };
  for (std::size_t base = 0; base < transition.size(); base += S) check(transition.data() + base, S);
  for (std::size_t base = 0; base < observation.size(); base += kNumSymbols) check(observation.data() + base, kNumSymbols);
  check(initial.data(), S);
  check(prior.data(), S);
  return worst;
}

// ---------------------------------------------------------------------------
// Learning

CptCounter::CptCounter() : trans_counts_(kTransSize, 0.0), obs_counts_(kObsSize, 0.0) {}

void CptCounter::add_episode(EpisodeLog log) {
  std::sort(log.begin(), log.end(),
            [](const LogRecord& a, const LogRecord& b) { return std::tie(a.node, a.t) < std::tie(b.node, b.t); });
  const LogRecord* prev = nullptr;
  for (const auto& r : log) {
    if (r.state < 0 || static_cast<std::size_t>(r.state) >= S || r.obs < 0 ||
        static_cast<std::size_t>(r.obs) >= kNumSymbols || r.mu < 0 || static_cast<std::size_t>(r.mu) >= kMuBins ||
        r.action_class < 0 || static_cast<std::size_t>(r.action_class) >= kNumActionClasses)
      throw std::runtime_error("log record out of range at t=" + std::to_string(r.t));
    const auto s = static_cast<std::size_t>(r.state);
    if (r.t == 0) {
      initial_counts_[s] += 1.0;
    } else {
      prior_counts_[s] += 1.0;
      const auto m = static_cast<std::size_t>(r.action_class) / kNumInvestigationClasses;
      const auto i = static_cast<std::size_t>(r.action_class) % kNumInvestigationClasses;
      obs_counts_[(i * S + s) * kNumSymbols + static_cast<std::size_t>(r.obs)] += 1.0;
      if (prev && prev->node == r.node && prev->t + 1 == r.t) {
        const auto mu = static_cast<std::size_t>(r.mu);
        trans_counts_[((m * kMuBins + mu) * S + static_cast<std::size_t>(prev->state)) * S + s] += 1.0;
        ++transitions_;
      }
    }
    prev = &r;
  }
  ++episodes_;
}

Cpts CptCounter::finalize(double alpha) const {
  if (episodes_ == 0) throw std::runtime_error("no episode logs to learn from");
  Cpts c;
  c.alpha = alpha;
  c.episodes = episodes_;
  normalize_slices(trans_counts_, c.transition, S, alpha);
  normalize_slices(obs_counts_, c.observation, kNumSymbols, alpha);
  c.initial = normalize_counts(initial_counts_, alpha);
  c.prior = normalize_counts(prior_counts_, alpha);
  return c;
}

Cpts learn_tables(const std::vector<EpisodeLog>& logs, double alpha) {
  CptCounter counter;
  for (const auto& log : logs) counter.add_episode(log);
  return counter.finalize(alpha);
}

// ---------------------------------------------------------------------------
// Filtering

UpdateResult belief_update(const Belief& b, int action_class, int symbol, int mu, const Cpts& cpts) {
  const auto m = static_cast<std::size_t>(action_class) / kNumInvestigationClasses;
  const auto i = static_cast<std::size_t>(action_class) % kNumInvestigationClasses;
  const double* trans = cpts.trans(m, static_cast<std::size_t>(mu));
  alignas(32) double like[S];
  for (std::size_t s = 0; s < S; ++s) like[s] = cpts.obs(i, s, static_cast<std::size_t>(symbol));
  UpdateResult r;
  const auto step = kernels::belief_step();
  if (step(trans, like, b.data(), r.belief.data()) > 0.0) return r;
  std::fill(std::begin(like), std::end(like), 1.0);
  step(trans, like, b.data(), r.belief.data());
  r.fallback = true;
  return r;
}

std::vector<double> belief_update_generic(std::span<const double> b, std::span<const double> trans,
                                          std::span<const double> like, bool* fallback) {
  const std::size_t n = b.size();
  if (trans.size() != n * n || like.size() != n) throw std::invalid_argument("belief_update_generic: shape mismatch");
  std::vector<double> pred(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) pred[j] += b[i] * trans[i * n + j];
  std::vector<double> post(n);
  double norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) norm += post[j] = pred[j] * like[j];
  if (fallback) *fallback = norm <= 0.0;
  if (norm <= 0.0) {
    post = pred;
    norm = 0.0;
    for (double p : post) norm += p;
  }
  for (auto& p : post) p /= norm;
  return post;
}

double prob_compromised(const Belief& b) {
  double p = 0.0;
  for (std::size_t s = 0; s < S; ++s)
    if (state_flags(s).initial_compromise) p += b[s];
  return p;
}

int summary(std::span<const Belief> beliefs) {
  double e = 0.0;
  for (const auto& b : beliefs) e += prob_compromised(b);
  return mu_bin(e);
}

BeliefTracker::BeliefTracker(const Cpts& cpts, std::size_t nodes) : cpts_(&cpts), beliefs_(nodes, cpts.initial) {}

void BeliefTracker::reset() {
  std::fill(beliefs_.begin(), beliefs_.end(), cpts_->initial);
  fallbacks_ = 0;
}

void BeliefTracker::update(std::span<const int> action_class, std::span<const int> symbol) {
  if (action_class.size() != beliefs_.size() || symbol.size() != beliefs_.size())
    throw std::invalid_argument("belief tracker: observation count does not match node count");
  const int mu = summary(beliefs_);
  for (std::size_t k = 0; k < beliefs_.size(); ++k) {
    auto r = belief_update(beliefs_[k], action_class[k], symbol[k], mu, *cpts_);
    beliefs_[k] = r.belief;
    if (r.fallback) ++fallbacks_;
  }
}

void BeliefTracker::update(const StepResult& step) {
  std::vector<int> ac(step.node_obs.size());
  std::vector<int> sym(step.node_obs.size());
  for (std::size_t k = 0; k < step.node_obs.size(); ++k) {
    ac[k] = step.node_obs[k].action_class();
    sym[k] = step.node_obs[k].symbol();
  }
  update(ac, sym);
}

// ---------------------------------------------------------------------------
// Validation

void KlAccumulator::add_episode(const EpisodeLog& log) {
  std::map<int, std::vector<const LogRecord*>> by_time;
  int max_node = -1;
  for (const auto& r : log) {
    by_time[r.t].push_back(&r);
    max_node = std::max(max_node, r.node);
  }
  const auto nodes = static_cast<std::size_t>(max_node + 1);
  BeliefTracker tracker(*cpts_, nodes);
  std::vector<int> ac(nodes, 0);
  std::vector<int> sym(nodes, 0);
  for (const auto& [t, records] : by_time) {
    if (t == 0) continue;
    std::fill(ac.begin(), ac.end(), 0);
    std::fill(sym.begin(), sym.end(), 0);
    for (const auto* r : records) {
      ac[static_cast<std::size_t>(r->node)] = r->action_class;
      sym[static_cast<std::size_t>(r->node)] = r->obs;
    }
    tracker.update(ac, sym);
    for (const auto* r : records) {
      const auto s = static_cast<std::size_t>(r->state);
      const double kl = -std::log(std::max(tracker.beliefs()[static_cast<std::size_t>(r->node)][s], kMinProb));
      const double base = -std::log(std::max(cpts_->prior[s], kMinProb));
      sum_ += kl;
      base_sum_ += base;
      stats_.max = std::max(stats_.max, kl);
      stats_.baseline_max = std::max(stats_.baseline_max, base);
      ++stats_.samples;
    }
  }
}

KlStats KlAccumulator::result() const {
  KlStats out = stats_;
  if (out.samples > 0) {
    out.mean = sum_ / static_cast<double>(out.samples);
    out.baseline_mean = base_sum_ / static_cast<double>(out.samples);
  }
  return out;
}

KlStats validate_kl(const std::vector<EpisodeLog>& logs, const Cpts& cpts) {
  KlAccumulator acc(cpts);
  for (const auto& log : logs) acc.add_episode(log);
  return acc.result();
}

// ---------------------------------------------------------------------------
// Serialization

json cpts_to_json(const Cpts& c) {
  json j;
  j["format"] = "icsim-cpts";
  j["version"] = 1;
  j["dims"] = {{"states", S},
               {"mu_bins", kMuBins},
               {"mitigation_classes", kNumMitigationClasses},
               {"investigation_classes", kNumInvestigationClasses},
               {"symbols", kNumSymbols}};
  j["alpha"] = c.alpha;
  j["episodes"] = c.episodes;
  j["initial"] = c.initial;
  j["prior"] = c.prior;
  j["transition"] = c.transition;
  j["observation"] = c.observation;
  return j;
}

Cpts cpts_from_json(const json& j) {
  if (j.value("format", "") != "icsim-cpts") throw ConfigError("cpts.format", "not a CPT file");
  if (j.value("version", 0) != 1) throw ConfigError("cpts.version", "unsupported version");
  const json& d = j.at("dims");
  if (d.at("states") != S || d.at("mu_bins") != kMuBins || d.at("mitigation_classes") != kNumMitigationClasses ||
      d.at("investigation_classes") != kNumInvestigationClasses || d.at("symbols") != kNumSymbols)
    throw ConfigError("cpts.dims", "dimensions do not match this build");
  Cpts c;
  c.alpha = j.value("alpha", 1.0);
  c.episodes = j.value("episodes", std::uint64_t{0});
  c.transition = json_vector(j, "transition", kTransSize);
  c.observation = json_vector(j, "observation", kObsSize);
  const auto init = json_vector(j, "initial", S);
  const auto prior = json_vector(j, "prior", S);
  std::copy(init.begin(), init.end(), c.initial.begin());
  std::copy(prior.begin(), prior.end(), c.prior.begin());
  return c;
}

void save_cpts(const Cpts& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << cpts_to_json(c).dump() << '\n';
}

Cpts load_cpts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<cpts>", "cannot open " + path);
  return cpts_from_json(json::parse(in));
}

void write_episode_log(const std::string& path, const EpisodeLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : log)
    out << "{\"t\":" << r.t << ",\"node\":" << r.node << ",\"state\":" << r.state
        << ",\"action_class\":" << r.action_class << ",\"obs\":" << r.obs << ",\"mu\":" << r.mu << "}\n";
}

EpisodeLog read_episode_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  EpisodeLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      log.push_back({j.at("t").get<int>(), j.at("node").get<int>(), j.at("state").get<int>(),
                     j.at("action_class").get<int>(), j.at("obs").get<int>(), j.at("mu").get<int>()});
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

std::vector<std::string> list_logs(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") out.push_back(entry.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace icsim
