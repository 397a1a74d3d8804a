#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "icsim/config.hpp"
#include "icsim/dbn.hpp"
#include "icsim/engine.hpp"
#include "icsim/harness.hpp"

namespace icsim {

inline constexpr int kProtocolVersion = 1;

struct SessionOptions {
  Config default_config = icsim::default_config();
  const Cpts* cpts = nullptr;                // shipped tables when null
  std::optional<std::uint64_t> forced_seed;  // overrides the client's seed (harness-driven runs)
};

/// One client session of the newline-delimited JSON protocol, independent of
/// the transport. Each call consumes one message and produces one reply.
class ProtocolSession {
 public:
  explicit ProtocolSession(SessionOptions options = {});
  ~ProtocolSession();

  struct Reply {
    std::string text;    // serialized JSON without trailing newline; empty when nothing is sent
    bool close = false;  // transport should close after sending
  };
  Reply handle(const std::string& line);

  bool has_episode() const { return episode_ != nullptr; }
  const Episode* episode() const { return episode_.get(); }
  /// Metrics of the most recent episode once it is done.
  const std::optional<EpisodeMetrics>& finished() const { return finished_; }

 private:
  Reply error(const std::string& code, const std::string& message, bool close = false) const;
  Reply on_reset(const nlohmann::json& msg);
  Reply on_step(const nlohmann::json& msg);
  std::string observation(const StepResult& step) const;

  SessionOptions options_;
  const Cpts* cpts_ = nullptr;
  std::unique_ptr<Episode> episode_;
  std::unique_ptr<BeliefTracker> tracker_;
  std::unique_ptr<MetricsAccumulator> metrics_;
  std::optional<EpisodeMetrics> finished_;
};

/// TCP listener speaking the protocol; one thread per connection.
class ProtocolServer {
 public:
  ProtocolServer(SessionOptions options, const std::string& host, int port);
  ~ProtocolServer();
  ProtocolServer(const ProtocolServer&) = delete;
  ProtocolServer& operator=(const ProtocolServer&) = delete;

  /// Port actually bound (useful with port 0).
  int port() const { return port_; }

  /// Accepts connections until `max_sessions` have completed (unbounded when
  /// 0) or stop() is called. Serial mode handles one connection at a time and
  /// reports each session to `on_session` with its final metrics or nullopt
  /// when the client left mid-episode.
  using SessionCallback = std::function<void(std::size_t, const std::optional<EpisodeMetrics>&)>;
  void run(std::size_t max_sessions = 0, bool serial = false, SessionCallback on_session = {});
  void stop();

  /// Per-session options hook, e.g. to force seeds for harness-driven runs.
  std::function<SessionOptions(std::size_t)> session_options;

 private:
  std::optional<EpisodeMetrics> serve_connection(int fd, std::size_t index);

  SessionOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
};

/// Splits "host:port".
std::pair<std::string, int> parse_endpoint(const std::string& text);

}  // namespace icsim
