#include "icsim/engine.hpp"

#include <algorithm>
#include <random>

#include "icsim/errors.hpp"

namespace icsim {

int sample_duration(int n, double p, Rng& rng) {
  std::binomial_distribution<int> dist(std::max(n, 1), std::clamp(p, 0.0, 1.0));
  return std::max(1, dist(rng));
}

MitigationClass mitigation_class(DefenderAction a) {
  switch (a) {
    case DefenderAction::Reboot: return MitigationClass::reboot;
    case DefenderAction::ResetPassword: return MitigationClass::reset_password;
    case DefenderAction::Reimage: return MitigationClass::reimage;
    case DefenderAction::Quarantine: return MitigationClass::quarantine;
    default: return MitigationClass::none;
  }
}

InvestigationClass investigation_class(DefenderAction a) {
  switch (a) {
    case DefenderAction::SimpleScan: return InvestigationClass::simple;
    case DefenderAction::AdvancedScan: return InvestigationClass::advanced;
    case DefenderAction::HumanAnalysis: return InvestigationClass::human;
    default: return InvestigationClass::none;
  }
}

namespace {

std::vector<PlcStatus> plc_statuses(const NetworkState& net) {
  std::vector<PlcStatus> out;
  out.reserve(net.plcs.size());
  for (const auto& p : net.plcs) out.push_back(p.status);
  return out;
}

}  // namespace

Episode::Episode(const Config& config, std::uint64_t seed)
    : config_(config),
      apt_params_(config.apt.params()),
      net_(build_network(config.topology)),
      index_(net_),
      rng_(seed) {
  node_mitigating_.assign(net_.nodes.size(), false);
  node_investigating_.assign(net_.nodes.size(), false);
  plc_busy_.assign(net_.plcs.size(), false);

  const auto objective = config.apt.objective.value_or(
      uniform_index(rng_, 2) == 0 ? AttackObjective::disrupt : AttackObjective::destroy);
  auto vector = config.apt.vector.value_or(
      uniform_index(rng_, 2) == 0 ? AttackVector::opc_server : AttackVector::level1_hmi);
  const bool has_opc = std::any_of(net_.nodes.begin(), net_.nodes.end(),
                                   [](const Node& n) { return n.kind == NodeKind::opc_server; });
  if (!has_opc) vector = AttackVector::level1_hmi;
  apt_ = AptFsm(apt_params_, objective, vector);

  if (config.apt.enabled) {
    std::vector<int> candidates;
    for (const auto& n : net_.nodes)
      if (n.level == 2 && n.kind == NodeKind::workstation) candidates.push_back(n.id);
    if (!candidates.empty()) {
      beachhead_ = candidates[uniform_index(rng_, candidates.size())];
      Node& b = net_.node(beachhead_);
      b.flags.scanned = true;
      b.flags.initial_compromise = true;
      apt_.learn_vlan(b.vlan_id);
    }
  }

  initial_.t = 0;
  initial_.node_obs.assign(net_.nodes.size(), NodeObservation{});
  initial_.plc_status = plc_statuses(net_);
}

double Episode::labor_in_use() const {
  double total = 0.0;
  for (std::size_t i = 0; i < apt_slots_.size(); ++i)
    if (apt_live_[i]) total += apt_slots_[i].labor_rate;
  return total;
}

std::vector<AptInstance> Episode::apt_in_flight() const {
  std::vector<AptInstance> out;
  for (std::size_t i = 0; i < apt_slots_.size(); ++i)
    if (apt_live_[i]) out.push_back(apt_slots_[i]);
  return out;
}

std::vector<DefenderInstance> Episode::defender_in_flight() const {
  std::vector<DefenderInstance> out;
  for (std::size_t i = 0; i < def_slots_.size(); ++i)
    if (def_live_[i]) out.push_back(def_slots_[i]);
  return out;
}

std::pair<int, int> Episode::compromised_split() const {
  int ws = 0;
  int srv = 0;
  for (const auto& n : net_.nodes) {
    if (!n.flags.initial_compromise) continue;
    if (is_workstation_kind(n.kind)) ++ws;
    else ++srv;
  }
  return {ws, srv};
}

void Episode::schedule(int time, bool apt, std::size_t slot) { queue_.push(Event{time, seq_++, apt, slot}); }

std::set<AptBusyKey> Episode::apt_busy() const {
  std::set<AptBusyKey> busy;
  for (std::size_t i = 0; i < apt_slots_.size(); ++i)
    if (apt_live_[i]) busy.insert(busy_key(apt_slots_[i].proposal));
  return busy;
}

bool Episode::can_start(const DefenderCommand& cmd) const {
  if (cmd.action == DefenderAction::NoOp) return true;
  const auto t = static_cast<std::size_t>(cmd.target);
  if (is_plc_action(cmd.action)) return !plc_busy_[t];
  if (!net_.nodes[t].online()) return false;
  if (is_investigation(cmd.action)) return !node_investigating_[t];
  return !node_mitigating_[t];
}

void Episode::start_defender(const DefenderCommand& cmd, StepResult& out) {
  if (cmd.action == DefenderAction::NoOp) return;
  if (!can_start(cmd)) {
    out.rejected.push_back(cmd);
    return;
  }
  const auto& table = config_.defender;
  DefenderInstance inst;
  inst.cmd = cmd;
  inst.start = clock_;
  const auto t = static_cast<std::size_t>(cmd.target);
  if (is_plc_action(cmd.action)) {
    inst.target_kind = TargetKind::plc;
    inst.end = clock_ + std::max(1, table[cmd.action].duration);
    plc_busy_[t] = true;
  } else {
    const Node& n = net_.nodes[t];
    inst.target_kind = target_kind_of(n);
    if (is_investigation(cmd.action)) {
      const auto outcome = resolve_investigation(cmd.action, n, apt_params_.cleanup_effectiveness, table, rng_);
      inst.end = clock_ + outcome.hours;
      inst.detected = outcome.detected;
      node_investigating_[t] = true;
    } else {
      inst.end = clock_ + std::max(1, table[cmd.action].duration);
      node_mitigating_[t] = true;
      if (cmd.action == DefenderAction::Reimage) net_.nodes[t].offline_until = inst.end;
    }
  }
  std::size_t slot;
  if (!def_free_.empty()) {
    slot = def_free_.back();
    def_free_.pop_back();
    def_slots_[slot] = inst;
    def_live_[slot] = true;
  } else {
    slot = def_slots_.size();
    def_slots_.push_back(inst);
    def_live_.push_back(true);
  }
  schedule(inst.end, false, slot);
}

void Episode::note_alert(const Alert& a, StepResult& out) {
  if (auto id = net_.node_by_ip(a.ip)) {
    auto& o = out.node_obs[static_cast<std::size_t>(*id)];
    o.max_severity = std::max(o.max_severity, a.severity);
  }
  out.alerts.push_back(a);
}

void Episode::complete_defender(std::size_t slot, StepResult& out) {
  const DefenderInstance inst = def_slots_[slot];
  def_live_[slot] = false;
  def_free_.push_back(slot);

  CompletedAction done;
  done.cmd = inst.cmd;
  done.start = inst.start;
  done.end = inst.end;
  done.cost = action_cost(inst.cmd.action, inst.target_kind, config_.defender);
  const auto t = static_cast<std::size_t>(inst.cmd.target);

  if (is_plc_action(inst.cmd.action)) {
    plc_busy_[t] = false;
    const auto r = apply_plc_mitigation(net_.plcs[t], inst.cmd.action);
    done.effective = r.effective;
    done.blocked = r.blocked;
  } else if (is_investigation(inst.cmd.action)) {
    node_investigating_[t] = false;
    Node& n = net_.nodes[t];
    // The outcome was drawn at start; a node cleaned in the meantime yields nothing.
    done.detected = inst.detected && n.flags.initial_compromise;
    auto& o = out.node_obs[t];
    o.investigation = investigation_class(inst.cmd.action);
    o.outcome = done.detected ? InvestigationOutcomeKind::detected : InvestigationOutcomeKind::ran_no_detect;
    if (done.detected) note_alert(Alert{clock_, n.ip, severity_mapping(n.flags), AlertSource::investigation}, out);
  } else {
    node_mitigating_[t] = false;
    if (inst.cmd.action == DefenderAction::Reimage) net_.nodes[t].offline_until.reset();
    const auto r = apply_mitigation(net_, inst.cmd.target, inst.cmd.action);
    done.effective = r.effective;
    done.blocked = r.blocked;
    out.node_obs[t].mitigation = mitigation_class(inst.cmd.action);
  }
  out.completed_cost += done.cost;
  out.completed.push_back(done);
}

void Episode::complete_apt(std::size_t slot) {
  const AptInstance inst = apt_slots_[slot];
  apt_live_[slot] = false;
  apt_free_.push_back(slot);
  const auto effect = apply_apt_action(net_, apt_, inst.proposal, inst.success, rng_);
  if (effect.applied && inst.proposal.action == AptAction::Compromise)
    apt_.learn_vlan(net_.node(inst.proposal.target.id).vlan_id);
}

std::vector<int> Episode::path_for(const AptProposal& p) const {
  const auto& spec = apt_action_spec(p.action);
  if (!spec.networked) return {};
  switch (p.target.kind) {
    case Target::Kind::node:
      if (p.source && *p.source == p.target.id) return {};
      return message_path(net_, p.source, p.target.id);
    case Target::Kind::vlan:
      return message_path_to_vlan(net_, p.source, p.target.id);
    case Target::Kind::plc:
      return message_path_to_plc(net_, p.source, p.target.id);
    case Target::Kind::none:
      break;
  }
  return {};
}

std::vector<AptInstance> Episode::admit_apt_actions(const std::vector<AptProposal>& proposals) {
  std::vector<AptInstance> admitted;
  double labor = labor_in_use();
  const double budget = apt_params_.labor_budget;
  std::set<AptBusyKey> busy = apt_busy();
  for (const auto& p : proposals) {
    constexpr double rate = 1.0;
    if (labor + rate > budget + 1e-12) break;
    if (!busy.insert(busy_key(p)).second) continue;
    const auto& spec = apt_action_spec(p.action);
    AptInstance inst;
    inst.proposal = p;
    inst.start = clock_;
    inst.end = clock_ + sample_duration(spec.duration_trials, spec.duration_prob, rng_);
    inst.success = bernoulli(rng_, spec.success_prob);
    inst.labor_rate = rate;
    labor += rate;
    std::size_t slot;
    if (!apt_free_.empty()) {
      slot = apt_free_.back();
      apt_free_.pop_back();
      apt_slots_[slot] = inst;
      apt_live_[slot] = true;
    } else {
      slot = apt_slots_.size();
      apt_slots_.push_back(inst);
      apt_live_.push_back(true);
    }
    schedule(inst.end, true, slot);
    admitted.push_back(inst);
  }
  return admitted;
}

void Episode::maybe_reenter(std::vector<AptProposal>& proposals) {
  if (!config_.apt.reentry) return;
  const bool any_controlled =
      std::any_of(net_.nodes.begin(), net_.nodes.end(), [](const Node& n) { return AptFsm::controlled(n); });
  if (any_controlled || labor_in_use() > 0.0) return;
  if (!bernoulli(rng_, 1.0 / config_.apt.reentry_mean_hours)) return;
  std::vector<int> candidates;
  for (const auto& n : net_.nodes)
    if (n.level == 2 && n.kind == NodeKind::workstation && n.online() && !n.quarantined && !n.flags.initial_compromise)
      candidates.push_back(n.id);
  if (candidates.empty()) return;
  const int target = candidates[uniform_index(rng_, candidates.size())];
  proposals.insert(proposals.begin(), AptProposal{AptAction::Compromise, std::nullopt, Target::node(target)});
}

StepResult Episode::step_hour(const std::vector<DefenderCommand>& actions) {
  if (done_) throw LifecycleError("episode is done; reset before stepping");
  for (const auto& cmd : actions) validate_command(net_, cmd);

  StepResult out;
  out.node_obs.assign(net_.nodes.size(), NodeObservation{});
  const auto [ws_before, srv_before] = compromised_split();

  for (const auto& cmd : actions) start_defender(cmd, out);

  ++clock_;
  while (!queue_.empty() && queue_.top().time <= clock_) {
    const Event ev = queue_.top();
    queue_.pop();
    if (ev.apt) complete_apt(ev.slot);
    else complete_defender(ev.slot, out);
  }

  for (const auto& a : passive_alerts(net_, apt_params_.cleanup_effectiveness, config_.ids, clock_, rng_))
    note_alert(a, out);
  for (const auto& a : false_alerts(net_, config_.ids, clock_, rng_)) note_alert(a, out);

  if (config_.apt.enabled) {
    std::vector<AptProposal> proposals;
    maybe_reenter(proposals);
    apt_.evaluate(net_);
    auto fsm_props = apt_.propose(net_, apt_busy());
    proposals.insert(proposals.end(), fsm_props.begin(), fsm_props.end());
    for (const auto& inst : admit_apt_actions(proposals)) {
      const auto& p = inst.proposal;
      const auto& spec = apt_action_spec(p.action);
      const auto path = path_for(p);
      std::uint32_t local_ip = 0;
      CompromiseFlags origin;
      if (p.source) {
        local_ip = net_.node(*p.source).ip;
        origin = net_.node(*p.source).flags;
      } else if (p.target.kind == Target::Kind::node) {
        local_ip = net_.node(p.target.id).ip;
      }
      const int sev = severity_mapping(origin, p.action);
      if (auto alert = action_alert(spec, path, net_, local_ip, sev, config_.ids, clock_, rng_)) note_alert(*alert, out);
    }
  }

  const auto [ws_after, srv_after] = compromised_split();
  out.t = clock_;
  out.plc_status = plc_statuses(net_);
  out.reward = step_reward(config_.reward, net_.count_plcs(PlcStatus::disrupted),
                           net_.count_plcs(PlcStatus::destroyed), out.completed_cost, clock_);
  out.reward.r_shape = shaping_reward(config_.reward, ws_before, srv_before, ws_after, srv_after);

  const bool all_destroyed =
      !net_.plcs.empty() && net_.count_plcs(PlcStatus::destroyed) == static_cast<int>(net_.plcs.size());
  done_ = clock_ >= config_.reward.t_max || (config_.engine.end_on_all_destroyed && all_destroyed);
  out.done = done_;
  return out;
}

}  // namespace icsim
