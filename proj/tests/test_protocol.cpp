#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include <json.hpp>

#include "icsim/protocol.hpp"

using namespace icsim;
using nlohmann::json;

namespace {

SessionOptions short_options(int t_max = 5000) {
  SessionOptions o;
  o.default_config.reward.t_max = t_max;
  return o;
}

json reply(ProtocolSession& s, const json& msg) {
  const auto r = s.handle(msg.dump());
  REQUIRE_FALSE(r.text.empty());
  return json::parse(r.text);
}

}  // namespace

TEST_CASE("reset yields a deterministic first observation") {
  ProtocolSession a(short_options()), b(short_options());
  const auto ra = a.handle(R"({"type":"reset","seed":7,"version":1})");
  const auto rb = b.handle(R"({"type":"reset","seed":7})");
  CHECK(ra.text == rb.text);
  CHECK_FALSE(ra.close);
  const auto obs = json::parse(ra.text);
  CHECK(obs["type"] == "obs");
  CHECK(obs["t"] == 0);
  CHECK(obs["done"] == false);
  CHECK(obs["beliefs"].size() == 33);
  CHECK(obs["beliefs"][0].size() == 12);
  CHECK(obs["plc_status"].size() == 50);
}

TEST_CASE("observation fields keep their order") {
  ProtocolSession s(short_options());
  const auto text = s.handle(R"({"type":"reset","seed":1})").text;
  const char* keys[] = {"\"type\"", "\"t\"", "\"alerts\"", "\"beliefs\"", "\"plc_status\"",
                        "\"completed\"", "\"reward\"", "\"done\""};
  std::size_t last = 0;
  for (const char* k : keys) {
    const auto pos = text.find(k);
    REQUIRE(pos != std::string::npos);
    CHECK(pos >= last);
    last = pos;
  }
}

TEST_CASE("errors keep the session usable") {
  ProtocolSession s(short_options());
  auto e = reply(s, {{"type", "step"}, {"actions", json::array()}});
  CHECK(e["type"] == "error");
  CHECK(e["code"] == "not_reset");

  const auto bad = s.handle("{not json");
  CHECK_FALSE(bad.close);
  CHECK(json::parse(bad.text)["code"] == "malformed");
  CHECK(reply(s, {{"type", "dance"}})["code"] == "malformed");
  CHECK(reply(s, {{"type", "reset"}})["code"] == "malformed");

  REQUIRE(reply(s, {{"type", "reset"}, {"seed", 2}})["type"] == "obs");
  CHECK(reply(s, {{"type", "step"}, {"actions", {329}}})["code"] == "invalid_action");
  CHECK(reply(s, {{"type", "step"}, {"actions", {-1}}})["code"] == "invalid_action");
  CHECK(reply(s, {{"type", "step"}, {"actions", {"x"}}})["code"] == "malformed");
  CHECK(reply(s, {{"type", "step"}})["code"] == "malformed");
  CHECK(s.episode()->clock() == 0);

  const auto ok = reply(s, {{"type", "step"}, {"actions", {0}}});
  CHECK(ok["type"] == "obs");
  CHECK(ok["t"] == 1);
}

TEST_CASE("version mismatch closes the session") {
  ProtocolSession s(short_options());
  const auto r = s.handle(R"({"type":"reset","seed":1,"version":2})");
  CHECK(r.close);
  CHECK(json::parse(r.text)["code"] == "version_mismatch");
  CHECK(s.handle(R"({"type":"close"})").close);
}

TEST_CASE("completed actions report index and cost") {
  ProtocolSession s(short_options());
  reply(s, {{"type", "reset"}, {"seed", 4}});
  const auto& index = s.episode()->actions();
  const auto reboot = index.index_of({DefenderAction::Reboot, 3});
  REQUIRE(reboot);
  bool seen = false;
  for (int i = 0; i < 5 && !seen; ++i) {
    const auto obs = reply(s, {{"type", "step"}, {"actions", i == 0 ? json{*reboot} : json::array()}});
    for (const auto& c : obs["completed"])
      if (c["index"] == *reboot) {
        seen = true;
        CHECK(c["action"] == "Reboot");
        CHECK(c["target"] == 3);
        CHECK(c["cost"].get<double>() == doctest::Approx(0.01));
      }
  }
  CHECK(seen);
}

TEST_CASE("a full episode ends with the terminal reward") {
  auto o = short_options();
  o.default_config.apt.enabled = false;
  ProtocolSession s(o);
  reply(s, {{"type", "reset"}, {"seed", 9}});
  json obs;
  const auto step = json{{"type", "step"}, {"actions", json::array()}}.dump();
  for (int i = 0; i < 5000; ++i) obs = json::parse(s.handle(step).text);
  CHECK(obs["done"] == true);
  CHECK(obs["t"] == 5000);
  // Undisturbed hour (1 + 0.1) plus the terminal bonus.
  CHECK(obs["reward"]["task"].get<double>() == doctest::Approx(2001.1));
  REQUIRE(s.finished());
  CHECK(s.finished()->steps == 5000);
  CHECK(reply(s, json::parse(step))["code"] == "episode_done");
  CHECK(reply(s, {{"type", "reset"}, {"seed", 9}})["t"] == 0);
  CHECK_FALSE(s.finished());
}

TEST_CASE("forced seeds override the client") {
  SessionOptions o = short_options();
  o.forced_seed = 17;
  ProtocolSession forced(o);
  ProtocolSession plain(short_options());
  CHECK(forced.handle(R"({"type":"reset","seed":1})").text == plain.handle(R"({"type":"reset","seed":17})").text);
}

TEST_CASE("endpoint parsing") {
  CHECK(parse_endpoint("127.0.0.1:5555") == std::pair<std::string, int>{"127.0.0.1", 5555});
  CHECK_THROWS(parse_endpoint("localhost"));
  CHECK_THROWS(parse_endpoint("host:notaport"));
}

TEST_CASE("server speaks the protocol over TCP") {
  ProtocolServer server(short_options(3), "127.0.0.1", 0);
  REQUIRE(server.port() > 0);
  std::optional<EpisodeMetrics> metrics;
  std::size_t sessions = 0;
  std::thread th([&] {
    server.run(1, true, [&](std::size_t, const std::optional<EpisodeMetrics>& m) {
      ++sessions;
      metrics = m;
    });
  });

  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(server.port()));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);

  std::string buffer;
  auto exchange = [&](const std::string& line) {
    const std::string out = line + "\n";
    REQUIRE(::send(fd, out.data(), out.size(), 0) == static_cast<ssize_t>(out.size()));
    std::size_t nl;
    while ((nl = buffer.find('\n')) == std::string::npos) {
      char chunk[4096];
      const auto n = ::recv(fd, chunk, sizeof chunk, 0);
      REQUIRE(n > 0);
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
    auto msg = json::parse(buffer.substr(0, nl));
    buffer.erase(0, nl + 1);
    return msg;
  };

  CHECK(exchange(R"({"type":"reset","seed":3,"version":1})")["t"] == 0);
  json last;
  for (int i = 0; i < 3; ++i) last = exchange(R"({"type":"step","actions":[0]})");
  CHECK(last["done"] == true);
  const std::string bye = "{\"type\":\"close\"}\n";
  ::send(fd, bye.data(), bye.size(), 0);
  th.join();
  ::close(fd);
  CHECK(sessions == 1);
  REQUIRE(metrics);
  CHECK(metrics->steps == 3);
}
