#include "icsim/policies.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace icsim {

// ---------------------------------------------------------------------------
// Random

std::vector<DefenderCommand> RandomPolicy::act(const PolicyContext& ctx, Rng& rng) {
  std::vector<DefenderCommand> out;
  if (params_.rate <= 0.0) return out;
  const int count = std::poisson_distribution<int>(params_.rate)(rng);
  if (count == 0) return out;

  std::vector<int> disrupted;
  std::vector<int> destroyed;
  for (std::size_t i = 0; i < ctx.last.plc_status.size(); ++i) {
    if (ctx.last.plc_status[i] == PlcStatus::disrupted) disrupted.push_back(static_cast<int>(i));
    if (ctx.last.plc_status[i] == PlcStatus::destroyed) destroyed.push_back(static_cast<int>(i));
  }
  auto weights = params_.weights;
  if (!disrupted.empty()) weights.emplace_back(DefenderAction::ResetPlc, params_.plc_weight);
  if (!destroyed.empty()) weights.emplace_back(DefenderAction::ReplacePlc, params_.plc_weight);
  double total = 0.0;
  for (const auto& [a, w] : weights) total += w;

  std::vector<int> workstations;
  for (const auto& n : ctx.net.nodes)
    if (is_workstation_kind(n.kind)) workstations.push_back(n.id);

  for (int k = 0; k < count; ++k) {
    double u = uniform01(rng) * total;
    DefenderAction type = weights.back().first;
    for (const auto& [a, w] : weights) {
      if (u < w) {
        type = a;
        break;
      }
      u -= w;
    }
    switch (type) {
      case DefenderAction::NoOp:
        break;
      case DefenderAction::Quarantine:
        if (!workstations.empty()) out.push_back({type, workstations[uniform_index(rng, workstations.size())]});
        break;
      case DefenderAction::ResetPlc:
        out.push_back({type, disrupted[uniform_index(rng, disrupted.size())]});
        break;
      case DefenderAction::ReplacePlc:
        out.push_back({type, destroyed[uniform_index(rng, destroyed.size())]});
        break;
      default:
        if (!ctx.net.nodes.empty())
          out.push_back({type, static_cast<int>(uniform_index(rng, ctx.net.nodes.size()))});
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Playbook

void PlaybookPolicy::reset(const NetworkState& net) {
  coas_.assign(net.nodes.size(), Coa{});
  for (const auto& n : net.nodes) coas_[static_cast<std::size_t>(n.id)].host = is_workstation_kind(n.kind);
}

std::vector<DefenderCommand> PlaybookPolicy::act(const PolicyContext& ctx, Rng&) {
  if (coas_.size() != ctx.net.nodes.size()) reset(ctx.net);

  auto advance = [&](Coa& c) {
    ++c.position;
    if (c.position >= ladder_for(c).steps.size()) c.active = false;
    else c.to_issue = true;
  };

  for (const auto& done : ctx.last.completed) {
    if (is_plc_action(done.cmd.action) || done.cmd.target < 0) continue;
    Coa& c = coas_[static_cast<std::size_t>(done.cmd.target)];
    if (!c.active || c.to_issue || !(c.pending == done.cmd)) continue;
    if (is_investigation(done.cmd.action) && !done.detected) c.active = false;
    else advance(c);
  }
  for (const auto& cmd : ctx.last.rejected) {
    if (is_plc_action(cmd.action) || cmd.target < 0) continue;
    Coa& c = coas_[static_cast<std::size_t>(cmd.target)];
    if (c.active && !c.to_issue && c.pending == cmd) c.active = false;
  }
  for (const auto& alert : ctx.last.alerts) {
    const auto id = ctx.net.node_by_ip(alert.ip);
    if (!id) continue;  // networking device
    Coa& c = coas_[static_cast<std::size_t>(*id)];
    if (c.active) continue;
    const Ladder& ladder = ladder_for(c);
    if (ladder.steps.empty()) continue;
    c.active = true;
    c.to_issue = true;
    c.position = alert.severity >= 3 ? std::min(ladder.severe_entry, ladder.steps.size() - 1) : 0;
  }

  std::vector<DefenderCommand> out;
  for (std::size_t i = 0; i < coas_.size(); ++i) {
    Coa& c = coas_[i];
    if (!c.active || !c.to_issue) continue;
    c.pending = {ladder_for(c).steps[c.position], static_cast<int>(i)};
    c.to_issue = false;
    out.push_back(c.pending);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expert

DefenderAction expert_mitigation(const CompromiseFlags& s) {
  if (!s.reboot_persistence) return DefenderAction::Reboot;
  if (!s.credential_persistence) return DefenderAction::ResetPassword;
  return DefenderAction::Reimage;
}

std::vector<DefenderCommand> ExpertPolicy::act(const PolicyContext& ctx, Rng& rng) {
  if (!ctx.beliefs) throw std::logic_error("expert policy requires beliefs");
  std::vector<DefenderCommand> out;
  for (std::size_t i = 0; i < ctx.beliefs->size(); ++i) {
    const Belief& b = (*ctx.beliefs)[i];
    const double p = prob_compromised(b);
    if (p <= params_.threshold) continue;
    std::size_t best = kNumCompromiseStates;
    for (std::size_t s = 0; s < kNumCompromiseStates; ++s)
      if (state_flags(s).initial_compromise && (best == kNumCompromiseStates || b[s] > b[best])) best = s;
    if (bernoulli(rng, p)) out.push_back({expert_mitigation(state_flags(best)), static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < ctx.last.plc_status.size(); ++i) {
    if (ctx.last.plc_status[i] == PlcStatus::disrupted) out.push_back({DefenderAction::ResetPlc, static_cast<int>(i)});
    if (ctx.last.plc_status[i] == PlcStatus::destroyed) out.push_back({DefenderAction::ReplacePlc, static_cast<int>(i)});
  }
  return out;
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec) {
  if (spec.name == "noop") return std::make_unique<NoOpPolicy>();
  if (spec.name == "random") return std::make_unique<RandomPolicy>(spec.random);
  if (spec.name == "playbook") return std::make_unique<PlaybookPolicy>(spec.playbook);
  if (spec.name == "expert") return std::make_unique<ExpertPolicy>(spec.expert);
  throw std::invalid_argument("unknown policy '" + spec.name + "'");
}

}  // namespace icsim
