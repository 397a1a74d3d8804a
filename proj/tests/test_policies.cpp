#include <doctest.h>

#include <cmath>
#include <map>

#include "icsim/policies.hpp"

using namespace icsim;

namespace {

StepResult blank_step(const NetworkState& net) {
  StepResult s;
  s.node_obs.assign(net.nodes.size(), NodeObservation{});
  for (const auto& p : net.plcs) s.plc_status.push_back(p.status);
  return s;
}

Alert alert_on(const NetworkState& net, int node, int severity) {
  return Alert{1, net.node(node).ip, severity, AlertSource::passive};
}

CompletedAction finished(DefenderAction a, int target, bool detected = false) {
  CompletedAction c;
  c.cmd = {a, target};
  c.detected = detected;
  return c;
}

Belief belief_on(std::size_t state, double p) {
  Belief b{};
  b[0] = 1.0 - p;
  b[state] += p;
  return b;
}

}  // namespace

TEST_CASE("random policy with rate zero never acts") {
  const auto net = build_network(default_topology());
  RandomPolicyParams params;
  params.rate = 0.0;
  RandomPolicy p(params);
  const auto last = blank_step(net);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(p.act({net, last, nullptr}, rng).empty());
}

TEST_CASE("random policy only targets PLCs that are offline") {
  auto net = build_network(default_topology());
  RandomPolicy p;
  Rng rng(2);
  auto last = blank_step(net);
  for (int i = 0; i < 200; ++i)
    for (const auto& c : p.act({net, last, nullptr}, rng)) REQUIRE_FALSE(is_plc_action(c.action));

  last.plc_status[7] = PlcStatus::disrupted;
  last.plc_status[9] = PlcStatus::destroyed;
  int resets = 0, replaces = 0;
  for (int i = 0; i < 200; ++i)
    for (const auto& c : p.act({net, last, nullptr}, rng)) {
      if (c.action == DefenderAction::ResetPlc) {
        ++resets;
        REQUIRE(c.target == 7);
      }
      if (c.action == DefenderAction::ReplacePlc) {
        ++replaces;
        REQUIRE(c.target == 9);
      }
      if (c.action == DefenderAction::Quarantine) REQUIRE(is_workstation_kind(net.node(c.target).kind));
      if (!is_plc_action(c.action)) REQUIRE(c.target < static_cast<int>(net.nodes.size()));
    }
  CHECK(resets > 0);
  CHECK(replaces > 0);
}

TEST_CASE("random policy draws types with the categorical weights") {
  const auto net = build_network(default_topology());
  RandomPolicyParams params;
  params.rate = 50.0;
  RandomPolicy p(params);
  const auto last = blank_step(net);
  Rng rng(3);
  std::map<DefenderAction, int> counts;
  int emitted = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto cmds = p.act({net, last, nullptr}, rng);
    emitted += static_cast<int>(cmds.size());
    for (const auto& c : cmds) ++counts[c.action];
  }
  // NoOp draws emit nothing, so condition on the non-NoOp mass 0.95.
  for (const auto& [a, w] : params.weights) {
    if (a == DefenderAction::NoOp) continue;
    const double q = w / 0.95;
    const double sd = std::sqrt(q * (1 - q) / emitted);
    CAPTURE(to_string(a));
    CHECK(std::abs(counts[a] / static_cast<double>(emitted) - q) <= 3 * sd);
  }
  // Mean actions per hour: rate * 0.95.
  const double mean = emitted / 2000.0;
  CHECK(std::abs(mean - 50.0 * 0.95) <= 3 * std::sqrt(50.0 * 0.95 / 2000.0));
}

TEST_CASE("playbook ladder on a host") {
  const auto net = build_network(default_topology());
  PlaybookPolicy pb;
  pb.reset(net);
  Rng rng(1);
  auto step = blank_step(net);

  SUBCASE("severity-1 alert starts with an advanced scan") {
    step.alerts.push_back(alert_on(net, 4, 1));
    auto cmds = pb.act({net, step, nullptr}, rng);
    REQUIRE(cmds.size() == 1);
    CHECK(cmds[0] == DefenderCommand{DefenderAction::AdvancedScan, 4});

    SUBCASE("clean scan ends the course of action") {
      auto next = blank_step(net);
      next.completed.push_back(finished(DefenderAction::AdvancedScan, 4, false));
      CHECK(pb.act({net, next, nullptr}, rng).empty());
      CHECK_FALSE(pb.coas()[4].active);
    }
    SUBCASE("detection walks the ladder") {
      const DefenderAction expected[] = {DefenderAction::Reboot, DefenderAction::AdvancedScan,
                                         DefenderAction::ResetPassword, DefenderAction::AdvancedScan,
                                         DefenderAction::Reimage};
      DefenderAction current = DefenderAction::AdvancedScan;
      for (auto e : expected) {
        auto next = blank_step(net);
        next.completed.push_back(finished(current, 4, true));
        cmds = pb.act({net, next, nullptr}, rng);
        REQUIRE(cmds.size() == 1);
        CHECK(cmds[0] == DefenderCommand{e, 4});
        current = e;
      }
      auto next = blank_step(net);
      next.completed.push_back(finished(DefenderAction::Reimage, 4));
      CHECK(pb.act({net, next, nullptr}, rng).empty());
      CHECK_FALSE(pb.coas()[4].active);
    }
    SUBCASE("alerts during an active course are absorbed") {
      auto next = blank_step(net);
      next.alerts.push_back(alert_on(net, 4, 3));
      CHECK(pb.act({net, next, nullptr}, rng).empty());
    }
    SUBCASE("a rejected command ends the course") {
      auto next = blank_step(net);
      next.rejected.push_back({DefenderAction::AdvancedScan, 4});
      CHECK(pb.act({net, next, nullptr}, rng).empty());
      CHECK_FALSE(pb.coas()[4].active);
    }
  }

  SUBCASE("severity-3 alert enters at reset password") {
    step.alerts.push_back(alert_on(net, 4, 3));
    const auto cmds = pb.act({net, step, nullptr}, rng);
    REQUIRE(cmds.size() == 1);
    CHECK(cmds[0] == DefenderCommand{DefenderAction::ResetPassword, 4});
  }

  SUBCASE("device alerts are ignored") {
    step.alerts.push_back(Alert{1, net.devices[0].ip, 2, AlertSource::action});
    CHECK(pb.act({net, step, nullptr}, rng).empty());
  }
}

TEST_CASE("playbook ladder on a server") {
  const auto net = build_network(default_topology());
  PlaybookPolicy pb;
  pb.reset(net);
  Rng rng(1);
  auto step = blank_step(net);
  step.alerts.push_back(alert_on(net, 25, 3));
  auto cmds = pb.act({net, step, nullptr}, rng);
  REQUIRE(cmds.size() == 1);
  CHECK(cmds[0] == DefenderCommand{DefenderAction::AdvancedScan, 25});
  const DefenderAction expected[] = {DefenderAction::Reboot, DefenderAction::AdvancedScan, DefenderAction::Reimage};
  DefenderAction current = DefenderAction::AdvancedScan;
  for (auto e : expected) {
    auto next = blank_step(net);
    next.completed.push_back(finished(current, 25, true));
    cmds = pb.act({net, next, nullptr}, rng);
    REQUIRE(cmds.size() == 1);
    CHECK(cmds[0] == DefenderCommand{e, 25});
    current = e;
  }
}

TEST_CASE("expert mitigation mapping") {
  CompromiseFlags f;
  f.scanned = f.initial_compromise = true;
  CHECK(expert_mitigation(f) == DefenderAction::Reboot);
  f.reboot_persistence = true;
  CHECK(expert_mitigation(f) == DefenderAction::ResetPassword);
  f.admin_access = f.credential_persistence = true;
  CHECK(expert_mitigation(f) == DefenderAction::Reimage);
}

TEST_CASE("expert acts with probability equal to the compromise belief") {
  const auto net = build_network(default_topology());
  ExpertPolicy ex;
  const auto last = blank_step(net);
  Rng rng(4);

  std::vector<Belief> clean(net.nodes.size(), belief_on(0, 0.0));
  for (int i = 0; i < 100; ++i) CHECK(ex.act({net, last, &clean}, rng).empty());

  CompromiseFlags deep;
  deep.scanned = deep.initial_compromise = deep.reboot_persistence = deep.admin_access = true;
  deep.credential_persistence = true;
  CompromiseFlags shallow;
  shallow.scanned = shallow.initial_compromise = true;
  auto beliefs = clean;
  beliefs[2] = belief_on(state_index(deep), 0.9);
  beliefs[5] = belief_on(state_index(shallow), 0.8);
  beliefs[6] = belief_on(state_index(shallow), 0.4);  // below threshold

  const int n = 20000;
  int reimage = 0, reboot = 0;
  for (int i = 0; i < n; ++i)
    for (const auto& c : ex.act({net, last, &beliefs}, rng)) {
      REQUIRE(c.target != 6);
      if (c.target == 2) {
        REQUIRE(c.action == DefenderAction::Reimage);
        ++reimage;
      }
      if (c.target == 5) {
        REQUIRE(c.action == DefenderAction::Reboot);
        ++reboot;
      }
    }
  CHECK(std::abs(reimage / double(n) - 0.9) <= 3 * std::sqrt(0.09 / n));
  CHECK(std::abs(reboot / double(n) - 0.8) <= 3 * std::sqrt(0.16 / n));
}

TEST_CASE("expert restores offline PLCs") {
  const auto net = build_network(default_topology());
  ExpertPolicy ex;
  auto last = blank_step(net);
  last.plc_status[3] = PlcStatus::disrupted;
  last.plc_status[4] = PlcStatus::destroyed;
  std::vector<Belief> clean(net.nodes.size(), belief_on(0, 0.0));
  Rng rng(5);
  const auto cmds = ex.act({net, last, &clean}, rng);
  REQUIRE(cmds.size() == 2);
  CHECK(cmds[0] == DefenderCommand{DefenderAction::ResetPlc, 3});
  CHECK(cmds[1] == DefenderCommand{DefenderAction::ReplacePlc, 4});
  CHECK_THROWS(ex.act({net, last, nullptr}, rng));
}

TEST_CASE("policy factory") {
  for (const char* name : {"noop", "random", "playbook", "expert"}) {
    PolicySpec s;
    s.name = name;
    CHECK(make_policy(s)->name() == name);
  }
  PolicySpec bad;
  bad.name = "oracle";
  CHECK_THROWS_AS(make_policy(bad), std::invalid_argument);
}
