// Stream endpoints of the controller: one listener each for greetings
// (which also accepts fog resource reports), service requests, and
// shutdown requests. Frames use the protocol codec; a peer that speaks
// out of turn gets its connection closed.
#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "fognet/orchestrator.hpp"
#include "fognet/protocol.hpp"

namespace fognet {

struct ServeConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t greeting_port = 7001;
  std::uint16_t service_port = 7002;
  std::uint16_t shutdown_port = 7003;
  double refresh_period_s = 1.0;
  OrchestratorConfig orch;
};

inline ServeConfig serve_config_from_json(const nlohmann::json& j) {
  ServeConfig c;
  c.bind_address = j.value("bind_address", c.bind_address);
  c.greeting_port = j.value("greeting_port", c.greeting_port);
  c.service_port = j.value("service_port", c.service_port);
  c.shutdown_port = j.value("shutdown_port", c.shutdown_port);
  c.refresh_period_s = j.value("refresh_period_s", c.refresh_period_s);
  c.orch.control_reservation_bw = j.value("control_bw_bps", c.orch.control_reservation_bw);
  if (j.contains("port_range")) {
    c.orch.port_range_lo = j.at("port_range").at(0).get<TransportPort>();
    c.orch.port_range_hi = j.at("port_range").at(1).get<TransportPort>();
  }
  return c;
}

class OrchestratorServer {
 public:
  enum class Role { Greeting, Service, Shutdown };

  OrchestratorServer(Orchestrator& orch, const ServeConfig& cfg) : orch_(orch), cfg_(cfg) {}

  ~OrchestratorServer() { stop(); }

  void start() {
    running_ = true;
    listeners_[0] = open_listener(cfg_.greeting_port, 0);
    listeners_[1] = open_listener(cfg_.service_port, 1);
    listeners_[2] = open_listener(cfg_.shutdown_port, 2);
    accepters_.emplace_back([this] { accept_loop(listeners_[0], Role::Greeting); });
    accepters_.emplace_back([this] { accept_loop(listeners_[1], Role::Service); });
    accepters_.emplace_back([this] { accept_loop(listeners_[2], Role::Shutdown); });
  }

  void stop() {
    if (!running_.exchange(false)) return;
    for (int fd : listeners_)
      if (fd >= 0) {
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
      }
    for (auto& a : accepters_) a.join();
    accepters_.clear();
    std::vector<std::thread> conns;
    {
      std::lock_guard lk(conn_mu_);
      for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);  // unblock recv
      conns.swap(connections_);
    }
    for (auto& c : conns) c.join();
  }

  std::uint16_t greeting_port() const { return bound_ports_[0]; }
  std::uint16_t service_port() const { return bound_ports_[1]; }
  std::uint16_t shutdown_port() const { return bound_ports_[2]; }

 private:
  int open_listener(std::uint16_t port, std::size_t slot) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error("socket: " + std::string(std::strerror(errno)));
    const int opt = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &opt, sizeof(opt));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, cfg_.bind_address.c_str(), &addr.sin_addr) != 1)
      throw Error("bad bind address: " + cfg_.bind_address);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd);
      throw Error("bind " + std::to_string(port) + ": " + std::strerror(errno));
    }
    if (::listen(fd, 16) != 0) {
      ::close(fd);
      throw Error("listen: " + std::string(std::strerror(errno)));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_ports_[slot] = ntohs(addr.sin_port);
    return fd;
  }

  void accept_loop(int listener, Role role) {
    while (running_) {
      const int conn = ::accept(listener, nullptr, nullptr);
      if (conn < 0) break;
      std::lock_guard lk(conn_mu_);
      open_fds_.insert(conn);
      connections_.emplace_back([this, conn, role] { serve_connection(conn, role); });
    }
  }

  void serve_connection(int fd, Role role) {
    std::vector<std::uint8_t> buffer;
    std::uint8_t chunk[4096];
    while (running_) {
      const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n <= 0) break;
      buffer.insert(buffer.end(), chunk, chunk + n);
      bool drop = false;
      for (;;) {
        const protocol::DecodeResult r = protocol::decode(buffer);
        if (r.status == protocol::DecodeStatus::NeedMoreData) break;
        if (r.status == protocol::DecodeStatus::Error) {
          drop = true;
          break;
        }
        buffer.erase(buffer.begin(), buffer.begin() + static_cast<long>(r.consumed));
        if (!dispatch(fd, role, *r.message)) {
          drop = true;
          break;
        }
      }
      if (drop) break;
    }
    {
      std::lock_guard lk(conn_mu_);
      open_fds_.erase(fd);
    }
    ::close(fd);
  }

  // Returns false when the connection should be dropped.
  bool dispatch(int fd, Role role, const protocol::Message& msg) {
    try {
      switch (role) {
        case Role::Greeting:
          if (const auto* g = std::get_if<protocol::Greeting>(&msg))
            return static_cast<bool>(orch_.handle_greeting(*g));
          if (const auto* rep = std::get_if<protocol::ResourceReport>(&msg)) {
            orch_.service_fog_device(*rep);
            return true;
          }
          return false;
        case Role::Service:
          if (const auto* req = std::get_if<protocol::ServiceRequest>(&msg)) {
            const auto resp = orch_.service_end_device(*req, req->node_id);
            return send_frame(fd, protocol::encode(resp));
          }
          return false;
        case Role::Shutdown:
          if (const auto* req = std::get_if<protocol::ShutdownRequest>(&msg)) {
            const auto resp = orch_.service_shutdown_request(*req);
            return send_frame(fd, protocol::encode(resp));
          }
          return false;
      }
    } catch (const ProtocolViolation&) {
      return false;
    }
    return false;
  }

  static bool send_frame(int fd, const std::vector<std::uint8_t>& bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  Orchestrator& orch_;
  ServeConfig cfg_;
  std::atomic<bool> running_{false};
  int listeners_[3] = {-1, -1, -1};
  std::uint16_t bound_ports_[3] = {0, 0, 0};
  std::vector<std::thread> accepters_;
  std::mutex conn_mu_;
  std::vector<std::thread> connections_;
  std::set<int> open_fds_;
};

}  // namespace fognet
