#include "icsim/protocol.hpp"

#include "icsim/errors.hpp"

namespace icsim {

using nlohmann::json;
using nlohmann::ordered_json;

ProtocolSession::ProtocolSession(SessionOptions options) : options_(std::move(options)) {}
ProtocolSession::~ProtocolSession() = default;

ProtocolSession::Reply ProtocolSession::error(const std::string& code, const std::string& message, bool close) const {
  ordered_json j;
  j["type"] = "error";
  j["code"] = code;
  j["message"] = message;
  return {j.dump(), close};
}

ProtocolSession::Reply ProtocolSession::handle(const std::string& line) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::parse_error& e) {
    return error("malformed", e.what());
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
    return error("malformed", "message must be an object with a string \"type\"");
  const auto type = msg["type"].get<std::string>();
  if (type == "reset") return on_reset(msg);
  if (type == "step") return on_step(msg);
  if (type == "close") return {"", true};
  return error("malformed", "unknown message type '" + type + "'");
}

ProtocolSession::Reply ProtocolSession::on_reset(const json& msg) {
  if (msg.contains("version") && (!msg["version"].is_number_integer() || msg["version"].get<int>() != kProtocolVersion))
    return error("version_mismatch", "server speaks protocol version " + std::to_string(kProtocolVersion), true);

  std::uint64_t seed = 0;
  if (options_.forced_seed) {
    seed = *options_.forced_seed;
  } else {
    if (!msg.contains("seed") || !msg["seed"].is_number_integer())
      return error("malformed", "reset needs an integer \"seed\"");
    seed = msg["seed"].is_number_unsigned() ? msg["seed"].get<std::uint64_t>()
                                            : static_cast<std::uint64_t>(msg["seed"].get<std::int64_t>());
  }

  Config config = options_.default_config;
  try {
    if (msg.contains("config") && !msg["config"].is_null()) {
      const json& c = msg["config"];
      if (c.is_string()) config = load_config(c.get<std::string>());
      else if (c.is_object()) config = config_from_json(c);
      else return error("malformed", "config must be a path or an object");
    }
    if (!cpts_) cpts_ = options_.cpts ? options_.cpts : &shipped_cpts();
  } catch (const ConfigError& e) {
    return error("malformed", e.what());
  } catch (const std::exception& e) {
    return error("malformed", e.what());
  }

  episode_ = std::make_unique<Episode>(config, seed);
  tracker_ = std::make_unique<BeliefTracker>(*cpts_, episode_->net().nodes.size());
  metrics_ = std::make_unique<MetricsAccumulator>(config.reward);
  finished_.reset();
  return {observation(episode_->initial()), false};
}

ProtocolSession::Reply ProtocolSession::on_step(const json& msg) {
  if (!episode_) return error("not_reset", "send reset before step");
  if (episode_->done()) return error("episode_done", "episode finished; send reset");
  if (!msg.contains("actions") || !msg["actions"].is_array())
    return error("malformed", "step needs an \"actions\" array");
  const auto& index = episode_->actions();
  std::vector<DefenderCommand> commands;
  for (const auto& a : msg["actions"]) {
    if (!a.is_number_integer()) return error("malformed", "action indices must be integers");
    const auto v = a.get<std::int64_t>();
    if (v < 0 || static_cast<std::uint64_t>(v) >= index.size())
      return error("invalid_action", "action index " + std::to_string(v) + " outside [0, " +
                                         std::to_string(index.size()) + ")");
    commands.push_back(index.at(static_cast<std::size_t>(v)));
  }
  const int start = episode_->clock();
  StepResult step;
  try {
    step = episode_->step_hour(commands);
  } catch (const InvalidTarget& e) {
    return error("invalid_action", e.what());
  }
  tracker_->update(step);
  metrics_->add(step, episode_->net(), start);
  if (step.done) finished_ = metrics_->finish(episode_->net());
  return {observation(step), false};
}

std::string ProtocolSession::observation(const StepResult& step) const {
  const auto& w = episode_->config().reward;
  ordered_json j;
  j["type"] = "obs";
  j["t"] = step.t;
  ordered_json alerts = ordered_json::array();
  for (const auto& a : step.alerts)
    alerts.push_back({{"ip", ip_to_string(a.ip)}, {"severity", a.severity}, {"source", std::string(to_string(a.source))}});
  j["alerts"] = std::move(alerts);
  ordered_json beliefs = ordered_json::array();
  for (const auto& b : tracker_->beliefs()) beliefs.push_back(b);
  j["beliefs"] = std::move(beliefs);
  ordered_json plcs = ordered_json::array();
  for (auto s : step.plc_status) plcs.push_back(static_cast<int>(s));
  j["plc_status"] = std::move(plcs);
  ordered_json completed = ordered_json::array();
  for (const auto& c : step.completed) {
    const auto idx = episode_->actions().index_of(c.cmd);
    completed.push_back({{"action", std::string(to_string(c.cmd.action))},
                         {"index", idx ? static_cast<std::int64_t>(*idx) : -1},
                         {"target", c.cmd.target},
                         {"cost", c.cost},
                         {"detected", c.detected}});
  }
  j["completed"] = std::move(completed);
  j["reward"] = {{"task", step.t == 0 ? 0.0 : step.reward.total_task(w)}, {"shaped", step.reward.r_shape}};
  j["done"] = step.done;
  return j.dump();
}

}  // namespace icsim
