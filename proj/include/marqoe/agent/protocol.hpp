// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Length-delimited message transport: each message is
//   Content-Length: <n>\r\n\r\n<n bytes of UTF-8 JSON>
// carried over stdio or a TCP connection. Responses on one connection come
// back in request order; separate connections are served concurrently.

#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <istream>
#include <list>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

#include "marqoe/agent/tools.hpp"
#include "marqoe/error.hpp"

namespace marqoe::agent {

inline constexpr std::size_t kMaxMessageBytes = 16u << 20;

inline std::string frame_message(std::string_view body) {
  return "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + std::string(body);
}

namespace detail {

// Parses the header block; returns the body length.
inline std::size_t parse_headers(const std::string& headers) {
  std::optional<std::size_t> length;
  std::size_t pos = 0;
  while (pos < headers.size()) {
    std::size_t end = headers.find("\r\n", pos);
    if (end == std::string::npos) end = headers.size();
    const std::string line = headers.substr(pos, end - pos);
    pos = end + 2;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw InvalidInput("malformed header line");
    std::string key = line.substr(0, colon);
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (key != "content-length") continue;
    std::string v = line.substr(colon + 1);
    v.erase(0, v.find_first_not_of(" \t"));
    std::size_t n = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc{} || p != v.data() + v.size()) throw InvalidInput("bad Content-Length");
    length = n;
  }
  if (!length) throw InvalidInput("missing Content-Length");
  if (*length > kMaxMessageBytes) throw InvalidInput("message too large");
  return *length;
}

}  // namespace detail

// Next message body, or nullopt at a clean end of stream.
inline std::optional<std::string> read_message(std::istream& in) {
  std::string headers;
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    any = true;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (headers.empty()) continue;  // tolerate blank lines between messages
      break;
    }
    if (!headers.empty()) headers += "\r\n";
    headers += line;
  }
  if (!any || headers.empty()) return std::nullopt;
  const std::size_t n = detail::parse_headers(headers);
  std::string body(n, '\0');
  in.read(body.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw InvalidInput("truncated message body");
  return body;
}

inline void write_message(std::ostream& out, std::string_view body) {
  out << frame_message(body);
  out.flush();
}

// Serves requests from `in` until end of stream or `stop` becomes true.
inline void serve_stream(const ToolService& service, std::istream& in, std::ostream& out,
                         const std::atomic<bool>* stop = nullptr) {
  while (!(stop && stop->load())) {
    std::optional<std::string> msg;
    try {
      msg = read_message(in);
    } catch (const InvalidInput& e) {
      write_message(out, json{{"id", nullptr}, {"error", {{"code", error_code::parse_error}, {"message", e.what()}}}}.dump());
      return;  // framing is lost
    }
    if (!msg) return;
    write_message(out, service.handle_text(*msg));
  }
}

// ============================================================================
// TCP
// ============================================================================
namespace detail {

inline bool send_all(int fd, std::string_view data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// Buffered framed reader over a socket.
class SocketReader {
public:
  explicit SocketReader(int fd) : fd_(fd) {}

  // nullopt on orderly close before a message starts.
  std::optional<std::string> next() {
    std::size_t header_end;
    while ((header_end = buf_.find("\r\n\r\n")) == std::string::npos) {
      if (buf_.size() > 8192) throw InvalidInput("header block too large");
      if (!fill()) {
        if (buf_.find_first_not_of("\r\n") == std::string::npos) return std::nullopt;
        throw InvalidInput("connection closed inside a header");
      }
    }
    std::string headers = buf_.substr(0, header_end);
    headers.erase(0, headers.find_first_not_of("\r\n"));
    const std::size_t n = parse_headers(headers);
    const std::size_t start = header_end + 4;
    while (buf_.size() < start + n)
      if (!fill()) throw InvalidInput("connection closed inside a body");
    std::string body = buf_.substr(start, n);
    buf_.erase(0, start + n);
    return body;
  }

private:
  bool fill() {
    char tmp[65536];
    while (true) {
      const ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
      if (n > 0) {
        buf_.append(tmp, static_cast<std::size_t>(n));
        return true;
      }
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
  }

  int fd_;
  std::string buf_;
};

struct HostPort {
  std::string host;
  int port{0};
};

inline HostPort split_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address must be host:port, got '" + addr + "'");
  HostPort hp{addr.substr(0, colon), 0};
  const std::string p = addr.substr(colon + 1);
  const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), hp.port);
  if (ec != std::errc{} || ptr != p.data() + p.size() || hp.port < 0 || hp.port > 65535)
    throw ConfigError("bad port in '" + addr + "'");
  if (hp.host.empty()) hp.host = "127.0.0.1";
  return hp;
}

}  // namespace detail

class TcpServer {
public:
  // Binds immediately; port 0 picks a free port. Throws IoError when the
  // address is unavailable.
  TcpServer(std::shared_ptr<const ToolService> service, const std::string& address)
      : service_(std::move(service)) {
    const auto hp = detail::split_address(address);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(hp.host.c_str(), std::to_string(hp.port).c_str(), &hints, &res) != 0 || !res)
      throw IoError("cannot resolve " + hp.host);
    fd_ = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
    if (fd_ < 0) {
      ::freeaddrinfo(res);
      throw IoError(std::string("socket: ") + std::strerror(errno));
    }
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd_, 64) != 0) {
      const int err = errno;
      ::freeaddrinfo(res);
      ::close(fd_);
      throw IoError("cannot listen on " + address + ": " + std::strerror(err));
    }
    ::freeaddrinfo(res);
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
    host_ = hp.host;
  }

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;
  ~TcpServer() { stop(); }

  int port() const { return port_; }
  std::string address() const { return host_ + ":" + std::to_string(port_); }

  void start() {
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  // Blocks until stop() is called from elsewhere.
  void run() { accept_loop(); }

  void stop() {
    if (stopping_.exchange(true)) {
      if (acceptor_.joinable()) acceptor_.join();
      return;
    }
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::list<Connection> conns;
    {
      std::lock_guard lock(mutex_);
      for (auto& c : conns_) ::shutdown(c.fd, SHUT_RDWR);
      conns.splice(conns.end(), conns_);
    }
    for (auto& c : conns)
      if (c.thread.joinable()) c.thread.join();
  }

private:
  struct Connection {
    int fd;
    std::thread thread;
  };

  void accept_loop() {
    while (!stopping_) {
      const int cfd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (cfd < 0) {
        if (errno == EINTR) continue;
        return;  // listener closed
      }
      std::lock_guard lock(mutex_);
      if (stopping_) {
        ::close(cfd);
        return;
      }
      conns_.push_back({cfd, {}});
      conns_.back().thread = std::thread([this, cfd] { serve(cfd); });
    }
  }

  void serve(int cfd) {
    detail::SocketReader reader(cfd);
    while (!stopping_) {
      std::optional<std::string> msg;
      try {
        msg = reader.next();
      } catch (const InvalidInput& e) {
        detail::send_all(cfd, frame_message(json{{"id", nullptr},
                                                 {"error", {{"code", error_code::parse_error}, {"message", e.what()}}}}
                                                .dump()));
        break;
      }
      if (!msg) break;
      if (!detail::send_all(cfd, frame_message(service_->handle_text(*msg)))) break;
    }
    ::shutdown(cfd, SHUT_RDWR);
    ::close(cfd);
  }

  std::shared_ptr<const ToolService> service_;
  int fd_{-1};
  int port_{0};
  std::string host_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mutex_;
  std::list<Connection> conns_;
};

// Blocking request/response client for one connection.
class TcpClient {
public:
  explicit TcpClient(const std::string& address) {
    const auto hp = detail::split_address(address);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(hp.host.c_str(), std::to_string(hp.port).c_str(), &hints, &res) != 0 || !res)
      throw IoError("cannot resolve " + hp.host);
    fd_ = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
    if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) != 0) {
      const int err = errno;
      ::freeaddrinfo(res);
      if (fd_ >= 0) ::close(fd_);
      throw IoError("cannot connect to " + address + ": " + std::strerror(err));
    }
    ::freeaddrinfo(res);
    reader_.emplace(fd_);
  }
  TcpClient(const TcpClient&) = delete;
  TcpClient& operator=(const TcpClient&) = delete;
  ~TcpClient() {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(std::string_view body) {
    if (!detail::send_all(fd_, frame_message(body))) throw IoError("send failed");
  }
  std::string receive() {
    auto m = reader_->next();
    if (!m) throw IoError("connection closed");
    return *m;
  }
  json request(const json& req) {
    send(req.dump());
    return json::parse(receive());
  }

private:
  int fd_{-1};
  std::optional<detail::SocketReader> reader_;
};

}  // namespace marqoe::agent
