#include "rehab/coach/server.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fmt/format.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <spdlog/spdlog.h>
#include <sys/socket.h>
#include <unistd.h>

#include "rehab/errors.hpp"

namespace rehab::coach {

namespace {

std::string errno_text() { return std::strerror(errno); }

}  // namespace

Server::Server(const hybrid::ModelBundle& models, const ProfileStore* profiles, ServerOptions options)
    : models_(&models), profiles_(profiles), options_(std::move(options)) {}

Server::~Server() { stop(); }

std::uint16_t Server::start() {
  if (running_) return port_;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError("socket: " + errno_text());
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options_.port);
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ConfigurationError("bad listen address '" + options_.host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
    const auto msg = errno_text();
    ::close(listen_fd_);
    throw IoError("cannot listen on " + options_.host + ":" + std::to_string(options_.port) + ": " + msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (options_.log_dir) std::filesystem::create_directories(*options_.log_dir);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  return port_;
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : clients_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

void Server::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      if (running_) spdlog::error("accept failed: {}", errno_text());
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(mu_);
    if (!running_) {
      ::close(fd);
      return;
    }
    clients_.insert(fd);
    workers_.emplace_back([this, fd] { handle(fd); });
  }
}

void Server::handle(int fd) {
  bool connected = true;
  auto send = [&](const nlohmann::json& m) {
    if (!connected) return;
    try {
      write_message(fd, m.dump());
    } catch (const IoError& e) {
      spdlog::warn("client went away: {}", e.what());
      connected = false;
    }
  };

  std::unique_ptr<Session> session;
  std::string subject;
  try {
    auto first = read_message(fd);
    if (first) {
      try {
        auto hello = decode_inbound(*first);
        if (hello.type != InboundType::Hello) throw ParseError("first message must be hello");
        subject = hello.config->subject_id;
        session = std::make_unique<Session>(*hello.config, SessionResources{models_, profiles_, std::nullopt},
                                            SessionOptions{}, send);
      } catch (const VersionError& e) {
        send(error_message("version_mismatch", e.what()));
      } catch (const Error& e) {
        send(error_message("bad_hello", e.what()));
      }
    }
    if (session) {
      session->start();
      while (connected && !session->finished()) {
        auto raw = read_message(fd);
        if (!raw) {
          connected = false;
          session->abort("Connection to the console was lost.");
          break;
        }
        Inbound m;
        try {
          m = decode_inbound(*raw);
        } catch (const Error& e) {
          send(error_message("bad_message", e.what()));
          continue;
        }
        switch (m.type) {
          case InboundType::Hello: send(error_message("bad_message", "session already started")); break;
          case InboundType::Ready: session->control(EventKind::ReadyConfirm); break;
          case InboundType::StartCue: session->control(EventKind::StartCue); break;
          case InboundType::Quit: session->control(EventKind::UserQuit); break;
          case InboundType::DemoRequest: session->control(EventKind::DemoRequest); break;
          case InboundType::DemoSkip: session->control(EventKind::DemoSkip); break;
          case InboundType::DemoEnd: session->control(EventKind::DemoEnd); break;
          case InboundType::MotionEnd: session->motion_end(); break;
          case InboundType::Frame: session->frame(*m.frame); break;
        }
      }
    }
  } catch (const std::exception& e) {
    spdlog::error("session connection failed: {}", e.what());
    if (session) session->abort("The session ended because of an internal error.");
  }

  if (session) {
    const auto n = ++served_;
    if (options_.log_dir) {
      try {
        const auto stem = subject.empty() || subject.find_first_of("/\\") != std::string::npos ? "session" : subject;
        session->log().save(*options_.log_dir / fmt::format("{}-{}.jsonl", stem, n));
      } catch (const Error& e) {
        spdlog::error("cannot save session log: {}", e.what());
      }
    }
  }
  {
    std::lock_guard lock(mu_);
    clients_.erase(fd);
  }
  ::close(fd);
}

Client::Client(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || res == nullptr) {
    throw IoError("cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) < 0) {
    const auto msg = errno_text();
    ::freeaddrinfo(res);
    if (fd_ >= 0) ::close(fd_);
    throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " + msg);
  }
  ::freeaddrinfo(res);
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

void Client::send(const Inbound& m) { write_message(fd_, encode_inbound(m)); }

void Client::send_raw(std::string_view payload) { write_message(fd_, payload); }

std::optional<nlohmann::json> Client::receive() {
  auto raw = read_message(fd_);
  if (!raw) return std::nullopt;
  try {
    return nlohmann::json::parse(*raw);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("server sent malformed JSON: ") + e.what());
  }
}

}  // namespace rehab::coach
