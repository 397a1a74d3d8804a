#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "icsim/dbn.hpp"
#include "icsim/errors.hpp"
#include "icsim/harness.hpp"
#include "oracles.hpp"

using namespace icsim;

TEST_CASE("mu bins and summaries") {
  CHECK(mu_bin(0.0) == 0);
  CHECK(mu_bin(0.49) == 0);
  CHECK(mu_bin(0.5) == 1);
  CHECK(mu_bin(2.49) == 1);
  CHECK(mu_bin(2.5) == 2);
  CHECK(mu_bin(5.49) == 2);
  CHECK(mu_bin(5.5) == 3);

  Belief clean{};
  clean[0] = 1.0;
  CHECK(summary(std::vector<Belief>(33, clean)) == 0);

  Belief comp{};
  comp[2] = 1.0;
  CHECK(prob_compromised(comp) == 1.0);
  CHECK(summary(std::vector<Belief>(3, comp)) == 2);

  Belief light{};
  light[0] = 0.99;
  light[5] = 0.01;
  CHECK(summary(std::vector<Belief>(40, light)) == 0);
}

TEST_CASE("hand-computed two-state updates") {
  const std::vector<double> identity{1, 0, 0, 1};
  SUBCASE("detection pins the compromised state") {
    const auto b = belief_update_generic(std::vector<double>{0.9, 0.1}, identity, std::vector<double>{0.0, 0.5});
    CHECK(b[0] == doctest::Approx(0.0));
    CHECK(b[1] == doctest::Approx(1.0));
  }
  SUBCASE("a clean scan shifts mass toward clean") {
    const auto b = belief_update_generic(std::vector<double>{0.5, 0.5}, identity, std::vector<double>{1.0, 0.5});
    CHECK(b[0] == doctest::Approx(2.0 / 3.0));
    CHECK(b[1] == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("uninformative observation is a fixed point") {
    const auto b = belief_update_generic(std::vector<double>{0.5, 0.5}, identity, std::vector<double>{0.3, 0.3});
    CHECK(b[0] == doctest::Approx(0.5));
  }
  SUBCASE("impossible observation falls back to the prediction") {
    bool fb = false;
    const auto b = belief_update_generic(std::vector<double>{0.5, 0.5}, std::vector<double>{0.8, 0.2, 0.1, 0.9},
                                         std::vector<double>{0.0, 0.0}, &fb);
    CHECK(fb);
    CHECK(b[0] == doctest::Approx(0.45));
  }
  CHECK_THROWS_AS(belief_update_generic(std::vector<double>{1.0}, identity, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("12-state update agrees with the generic recursion") {
  std::mt19937_64 gen(5);
  const Cpts c = oracle::random_cpts(gen);
  Belief b = c.initial;
  std::uniform_int_distribution<int> ac_d(0, 19), sym_d(0, 11), mu_d(0, 3);
  for (int step = 0; step < 500; ++step) {
    const int ac = ac_d(gen), sym = sym_d(gen), mu = mu_d(gen);
    const auto r = belief_update(b, ac, sym, mu, c);
    const std::vector<double> trans(c.trans(static_cast<std::size_t>(ac) / 4, static_cast<std::size_t>(mu)),
                                    c.trans(static_cast<std::size_t>(ac) / 4, static_cast<std::size_t>(mu)) + 144);
    std::vector<double> like(12);
    for (std::size_t s = 0; s < 12; ++s) like[s] = c.obs(static_cast<std::size_t>(ac) % 4, s, static_cast<std::size_t>(sym));
    const auto g = belief_update_generic(b, trans, like);
    double sum = 0;
    for (std::size_t s = 0; s < 12; ++s) {
      CHECK(r.belief[s] == doctest::Approx(g[s]).epsilon(1e-12));
      sum += r.belief[s];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    b = r.belief;
  }
}

TEST_CASE("per-node filtering equals joint enumeration on two nodes") {
  std::mt19937_64 gen(11);
  const Cpts c = oracle::random_cpts(gen);
  std::uniform_int_distribution<int> ac_d(0, 19), sym_d(0, 11);
  const int mu = 1;
  std::vector<std::array<oracle::NodeInput, 2>> inputs(200);
  for (auto& in : inputs)
    for (auto& n : in) n = {ac_d(gen), sym_d(gen)};
  const auto exact = oracle::joint_filter(c, mu, inputs);
  std::array<Belief, 2> b{c.initial, c.initial};
  double worst = 0;
  for (std::size_t t = 0; t < inputs.size(); ++t)
    for (std::size_t k = 0; k < 2; ++k) {
      b[k] = belief_update(b[k], inputs[t][k].action_class, inputs[t][k].symbol, mu, c).belief;
      for (std::size_t s = 0; s < 12; ++s) worst = std::max(worst, std::abs(b[k][s] - exact[t][k][s]));
    }
  CHECK(worst < 1e-9);
}

TEST_CASE("zero-likelihood observations fall back to prediction") {
  std::mt19937_64 gen(2);
  Cpts c = oracle::random_cpts(gen);
  for (std::size_t s = 0; s < 12; ++s) c.observation[(0 * 12 + s) * 12 + 7] = 0.0;
  const auto r = belief_update(c.initial, 0, 7, 0, c);
  CHECK(r.fallback);
  double sum = 0;
  for (double p : r.belief) sum += p;
  CHECK(sum == doctest::Approx(1.0));

  BeliefTracker tracker(c, 2);
  tracker.update(std::vector<int>{0, 0}, std::vector<int>{7, 7});
  CHECK(tracker.fallbacks() == 2);
}

namespace {

// Two-state chain embedded in the 12-state layout: clean (0) and compromised (2).
EpisodeLog synthetic_log(std::mt19937_64& gen, int steps, double p_compromise, double p_recover, double p_alert) {
  std::bernoulli_distribution comp(p_compromise), rec(p_recover), alert(p_alert), quiet_alert(0.05);
  EpisodeLog log;
  int state = 0;
  log.push_back({0, 0, state, 0, 0, 0});
  for (int t = 1; t <= steps; ++t) {
    state = state == 0 ? (comp(gen) ? 2 : 0) : (rec(gen) ? 0 : 2);
    const bool a = state == 2 ? alert(gen) : quiet_alert(gen);
    log.push_back({t, 0, state, 0, a ? 1 : 0, 0});
  }
  return log;
}

}  // namespace

TEST_CASE("learned tables recover a known chain") {
  std::mt19937_64 gen(7);
  std::vector<EpisodeLog> logs;
  for (int e = 0; e < 10; ++e) logs.push_back(synthetic_log(gen, 10000, 0.1, 0.3, 0.4));
  const Cpts c = learn_tables(logs, 1.0);
  const double* t = c.trans(0, 0);
  CHECK(std::abs(t[0 * 12 + 2] - 0.1) < 0.01);
  CHECK(std::abs(t[0 * 12 + 0] - 0.9) < 0.01);
  CHECK(std::abs(t[2 * 12 + 0] - 0.3) < 0.01);
  CHECK(std::abs(t[2 * 12 + 2] - 0.7) < 0.01);
  CHECK(std::abs(c.obs(0, 2, 1) - 0.4) < 0.01);
  CHECK(std::abs(c.obs(0, 0, 1) - 0.05) < 0.01);
  CHECK(c.max_normalization_error() < 1e-12);
  CHECK(c.episodes == 10);
  // Unvisited rows are uniform under smoothing.
  CHECK(c.trans(4, 3)[5 * 12 + 7] == doctest::Approx(1.0 / 12));
}

TEST_CASE("record order does not matter") {
  std::mt19937_64 gen(8);
  auto log = synthetic_log(gen, 2000, 0.2, 0.2, 0.5);
  // A second node interleaved.
  auto other = synthetic_log(gen, 2000, 0.05, 0.5, 0.5);
  for (auto& r : other) r.node = 1;
  log.insert(log.end(), other.begin(), other.end());
  const Cpts a = learn_tables({log});
  std::shuffle(log.begin(), log.end(), gen);
  const Cpts b = learn_tables({log});
  CHECK(a.transition == b.transition);
  CHECK(a.observation == b.observation);
  CHECK(a.initial == b.initial);
  CHECK(a.prior == b.prior);
}

TEST_CASE("never-compromised logs learn a near-identity clean row") {
  EpisodeLog log;
  for (int t = 0; t <= 5000; ++t) log.push_back({t, 0, 0, 0, 0, 0});
  const Cpts c = learn_tables({log});
  CHECK(c.trans(0, 0)[0] > 0.99);
  // One initial record with add-one smoothing over 12 states.
  CHECK(c.initial[0] == doctest::Approx(2.0 / 13.0));
}

TEST_CASE("learning needs data and sane records") {
  CptCounter counter;
  CHECK_THROWS(counter.finalize());
  CHECK_THROWS(counter.add_episode({{1, 0, 12, 0, 0, 0}}));
  CHECK_THROWS(counter.add_episode({{1, 0, 0, 20, 0, 0}}));
}

TEST_CASE("KL closed forms") {
  SUBCASE("point mass on the truth") {
    Cpts c;
    c.transition.assign(kNumMitigationClasses * kMuBins * 144, 0.0);
    for (std::size_t blk = 0; blk < kNumMitigationClasses * kMuBins; ++blk)
      for (std::size_t s = 0; s < 12; ++s) c.transition[blk * 144 + s * 12 + s] = 1.0;
    c.observation.assign(kNumInvestigationClasses * 144, 1.0 / 12);
    c.initial[0] = 1.0;
    c.prior[0] = 1.0;
    EpisodeLog log;
    for (int t = 0; t <= 50; ++t) log.push_back({t, 0, 0, 0, 0, 0});
    const auto k = validate_kl({log}, c);
    CHECK(k.samples == 50);
    CHECK(k.mean == doctest::Approx(0.0));
    CHECK(k.baseline_mean == doctest::Approx(0.0));
  }
  SUBCASE("uniform belief") {
    Cpts c;
    c.transition.assign(kNumMitigationClasses * kMuBins * 144, 1.0 / 12);
    c.observation.assign(kNumInvestigationClasses * 144, 1.0 / 12);
    c.initial.fill(1.0 / 12);
    c.prior.fill(1.0 / 12);
    EpisodeLog log;
    for (int t = 0; t <= 50; ++t) log.push_back({t, 0, t % 12, 0, 0, 0});
    const auto k = validate_kl({log}, c);
    CHECK(k.mean == doctest::Approx(std::log(12.0)));
    CHECK(k.baseline_mean == doctest::Approx(2.4849).epsilon(1e-4));
  }
}

TEST_CASE("shipped tables come from 1000 episodes and are normalized") {
  const Cpts& c = shipped_cpts();
  CHECK(c.episodes == 1000);
  CHECK(c.max_normalization_error() < 1e-9);
}

TEST_CASE("log replay reproduces the online belief trace") {
  Config cfg = default_config();
  const Cpts& cpts = shipped_cpts();
  Episode ep(cfg, 77);
  BeliefTracker online(cpts, ep.net().nodes.size());
  EpisodeLog log;
  append_log_records(ep.net(), nullptr, 0, log);
  std::vector<std::vector<Belief>> trace;
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> pick(1, ep.actions().size() - 1);
  for (int h = 0; h < 1500; ++h) {
    std::vector<DefenderCommand> cmds;
    if (h % 5 == 0) cmds.push_back(ep.actions().at(pick(gen)));
    const int mu_prev = mu_bin(ep.net().count_compromised());
    const auto r = ep.step_hour(cmds);
    append_log_records(ep.net(), &r, mu_prev, log);
    online.update(r);
    trace.push_back(online.beliefs());
  }

  const auto path = (std::filesystem::temp_directory_path() / "icsim_replay_test.jsonl").string();
  write_episode_log(path, log);
  const auto replayed = read_episode_log(path);
  std::filesystem::remove(path);
  CHECK(replayed == log);

  std::map<int, std::vector<const LogRecord*>> by_t;
  for (const auto& r : replayed) by_t[r.t].push_back(&r);
  BeliefTracker offline(cpts, ep.net().nodes.size());
  std::size_t step = 0;
  bool identical = true;
  for (const auto& [t, recs] : by_t) {
    if (t == 0) continue;
    std::vector<int> ac(recs.size()), sym(recs.size());
    for (const auto* r : recs) {
      ac[static_cast<std::size_t>(r->node)] = r->action_class;
      sym[static_cast<std::size_t>(r->node)] = r->obs;
    }
    offline.update(ac, sym);
    identical = identical && offline.beliefs() == trace[step++];
  }
  CHECK(step == trace.size());
  CHECK(identical);
}

TEST_CASE("CPT serialization") {
  std::mt19937_64 gen(1);
  Cpts c = oracle::random_cpts(gen);
  c.episodes = 12;
  c.alpha = 0.5;
  const Cpts back = cpts_from_json(nlohmann::json::parse(cpts_to_json(c).dump()));
  CHECK(back.transition == c.transition);
  CHECK(back.observation == c.observation);
  CHECK(back.initial == c.initial);
  CHECK(back.episodes == 12);
  CHECK(back.alpha == 0.5);

  auto j = cpts_to_json(c);
  j["dims"]["states"] = 11;
  CHECK_THROWS_AS(cpts_from_json(j), ConfigError);
  j = cpts_to_json(c);
  j["format"] = "other";
  CHECK_THROWS_AS(cpts_from_json(j), ConfigError);
  j = cpts_to_json(c);
  j["transition"].erase(0);
  CHECK_THROWS_AS(cpts_from_json(j), ConfigError);
}
