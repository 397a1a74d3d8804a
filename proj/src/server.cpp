#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <thread>
#include <vector>

#include "icsim/protocol.hpp"

namespace icsim {

namespace {

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

std::pair<std::string, int> parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("endpoint must be HOST:PORT");
  const std::string host = text.substr(0, colon);
  const int port = std::stoi(text.substr(colon + 1));
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
  return {host.empty() ? "127.0.0.1" : host, port};
}

ProtocolServer::ProtocolServer(SessionOptions options, const std::string& host, int port)
    : options_(std::move(options)) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port_text = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints, &res); rc != 0)
    throw std::runtime_error("cannot resolve " + host + ": " + gai_strerror(rc));
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(listen_fd_);
    throw std::runtime_error("cannot listen on " + host + ":" + port_text + ": " + err);
  }
  ::freeaddrinfo(res);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

ProtocolServer::~ProtocolServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void ProtocolServer::stop() { stopping_ = true; }

std::optional<EpisodeMetrics> ProtocolServer::serve_connection(int fd, std::size_t index) {
  ProtocolSession session(session_options ? session_options(index) : options_);
  std::string buffer;
  char chunk[4096];
  bool open = true;
  while (open) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while (open && (pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto reply = session.handle(line);
      if (!reply.text.empty() && !send_all(fd, reply.text + "\n")) open = false;
      if (reply.close) open = false;
    }
  }
  ::close(fd);
  return session.finished();
}

void ProtocolServer::run(std::size_t max_sessions, bool serial, SessionCallback on_session) {
  std::vector<std::thread> workers;
  std::size_t accepted = 0;
  while (!stopping_ && (max_sessions == 0 || accepted < max_sessions)) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 200);
    if (ready < 0 && errno != EINTR) throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const std::size_t index = accepted++;
    if (serial) {
      auto result = serve_connection(fd, index);
      if (on_session) on_session(index, result);
    } else {
      workers.emplace_back([this, fd, index, on_session] {
        auto result = serve_connection(fd, index);
        if (on_session) on_session(index, result);
      });
    }
  }
  for (auto& w : workers) w.join();
}

}  // namespace icsim
