#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "rehab/coach/profile_store.hpp"
#include "rehab/coach/protocol.hpp"
#include "rehab/coach/session.hpp"
#include "rehab/hybrid.hpp"

namespace rehab::coach {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  /// Session logs are written here as <subject>-<n>.jsonl when set.
  std::optional<std::filesystem::path> log_dir;
};

/// Length-prefixed JSON over TCP, one session per connection. The first
/// message must be hello; the server answers with the session's outbound
/// stream and closes after Wrap-up.
class Server {
 public:
  Server(const hybrid::ModelBundle& models, const ProfileStore* profiles, ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting; returns the bound port.
  std::uint16_t start();
  void stop();
  std::uint16_t port() const { return port_; }
  std::size_t sessions_served() const { return served_.load(); }

 private:
  void accept_loop();
  void handle(int fd);

  const hybrid::ModelBundle* models_;
  const ProfileStore* profiles_;
  ServerOptions options_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> served_{0};
  std::thread acceptor_;
  std::mutex mu_;
  std::set<int> clients_;
  std::vector<std::thread> workers_;
};

/// Blocking client used by tools and tests.
class Client {
 public:
  Client(const std::string& host, std::uint16_t port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void send(const Inbound& m);
  void send_raw(std::string_view payload);
  /// nullopt once the server has closed the connection.
  std::optional<nlohmann::json> receive();

 private:
  int fd_ = -1;
};

}  // namespace rehab::coach
