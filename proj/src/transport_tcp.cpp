// Copyright 2026 The zccl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <deque>
#include <set>
#include <string>
#include <thread>

#include "transport_internal.hpp"
#include "zccl/error.hpp"

namespace zccl {
namespace {

constexpr std::uint8_t kHandshakeMagic[4] = {'Z', 'C', 'W', '1'};
constexpr std::size_t kFramePrefix = 8;

using clock = std::chrono::steady_clock;

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { reset(); }

  int fd() const noexcept { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

int remaining_ms(clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(left);
}

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  return res;
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

// Blocking-with-deadline exact I/O on a nonblocking socket.
void write_all(int fd, const std::uint8_t* p, std::size_t n, clock::time_point deadline) {
  while (n > 0) {
    ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w > 0) {
      p += w;
      n -= static_cast<std::size_t>(w);
      continue;
    }
    if (w < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
      throw TransportError(errno_text("handshake send"));
    }
    pollfd pfd{fd, POLLOUT, 0};
    if (::poll(&pfd, 1, remaining_ms(deadline)) == 0) throw TransportError("handshake send timed out");
  }
}

void read_all(int fd, std::uint8_t* p, std::size_t n, clock::time_point deadline) {
  while (n > 0) {
    ssize_t r = ::recv(fd, p, n, 0);
    if (r > 0) {
      p += r;
      n -= static_cast<std::size_t>(r);
      continue;
    }
    if (r == 0) throw TransportError("peer closed during handshake");
    if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
      throw TransportError(errno_text("handshake recv"));
    }
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, remaining_ms(deadline)) == 0) throw TransportError("handshake timed out");
  }
}

void send_handshake(int fd, int rank, clock::time_point deadline) {
  std::uint8_t msg[8];
  std::memcpy(msg, kHandshakeMagic, 4);
  store_u32(msg + 4, static_cast<std::uint32_t>(rank));
  write_all(fd, msg, sizeof msg, deadline);
}

int read_handshake(int fd, clock::time_point deadline) {
  std::uint8_t msg[8];
  read_all(fd, msg, sizeof msg, deadline);
  if (std::memcmp(msg, kHandshakeMagic, 4) != 0) throw TransportError("handshake magic mismatch");
  return static_cast<int>(get_u32(msg + 4));
}

Socket listen_on(const std::string& host, std::uint16_t port) {
  addrinfo* res = resolve(host, port, true);
  Socket s(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
  if (s.fd() < 0) {
    ::freeaddrinfo(res);
    throw TransportError(errno_text("socket"));
  }
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  int rc = ::bind(s.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) throw TransportError(errno_text("bind " + host + ":" + std::to_string(port)));
  if (::listen(s.fd(), 128) != 0) throw TransportError(errno_text("listen"));
  set_nonblocking(s.fd());
  return s;
}

Socket connect_to(const std::string& host, std::uint16_t port, clock::time_point deadline) {
  while (true) {
    addrinfo* res = resolve(host, port, false);
    Socket s(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    int rc = s.fd() < 0 ? -1 : ::connect(s.fd(), res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc == 0) {
      set_nonblocking(s.fd());
      return s;
    }
    if (clock::now() >= deadline) {
      throw TransportError(errno_text("connect to " + host + ":" + std::to_string(port)));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds{20});
  }
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_address(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ParameterError("address must be host:port, got '" + address + "'");
  }
  std::string host = address.substr(0, colon);
  std::string port_text = address.substr(colon + 1);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(port_text, &used);
    if (used != port_text.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ParameterError("invalid port in '" + address + "'");
  }
  if (port == 0 || port > 65535) throw ParameterError("port out of range in '" + address + "'");
  return {host, static_cast<std::uint16_t>(port)};
}

std::vector<std::string> allocate_local_addresses(int count) {
  // Hold all sockets open until every port is known so they stay distinct.
  std::vector<Socket> held;
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (s.fd() < 0 || ::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw TransportError(errno_text("reserve local port"));
    }
    socklen_t len = sizeof addr;
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    out.push_back("127.0.0.1:" + std::to_string(ntohs(addr.sin_port)));
    held.push_back(std::move(s));
  }
  return out;
}

namespace detail {
namespace {

class TcpEndpoint final : public Endpoint {
 public:
  explicit TcpEndpoint(const WorldConfig& cfg)
      : rank_(cfg.rank), max_message_(cfg.max_message_bytes), conns_(cfg.world_size) {
    if (static_cast<int>(cfg.addresses.size()) != cfg.world_size) {
      throw ParameterError("address list has " + std::to_string(cfg.addresses.size()) +
                           " entries for world size " + std::to_string(cfg.world_size));
    }
    std::set<std::string> unique(cfg.addresses.begin(), cfg.addresses.end());
    if (unique.size() != cfg.addresses.size()) throw ParameterError("duplicate address in address list");

    auto deadline = clock::now() + cfg.connect_timeout;
    auto [host, port] = parse_address(cfg.addresses[rank_]);
    Socket listener = listen_on(host, port);

    // Lower ranks are dialed, higher ranks dial us.
    for (int peer = 0; peer < rank_; ++peer) {
      auto [phost, pport] = parse_address(cfg.addresses[peer]);
      Socket s = connect_to(phost, pport, deadline);
      send_handshake(s.fd(), rank_, deadline);
      int got = read_handshake(s.fd(), deadline);
      if (got != peer) {
        throw TransportError("address of rank " + std::to_string(peer) + " answered as rank " +
                             std::to_string(got));
      }
      adopt(peer, std::move(s));
    }
    int expected = cfg.world_size - 1 - rank_;
    while (expected > 0) {
      pollfd pfd{listener.fd(), POLLIN, 0};
      int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready == 0) throw TransportError("timed out waiting for higher ranks to connect");
      Socket s(::accept(listener.fd(), nullptr, nullptr));
      if (s.fd() < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
        throw TransportError(errno_text("accept"));
      }
      set_nonblocking(s.fd());
      int peer = read_handshake(s.fd(), deadline);
      if (peer <= rank_ || peer >= cfg.world_size) {
        throw TransportError("unexpected rank " + std::to_string(peer) + " in handshake");
      }
      if (conns_[peer].sock.fd() >= 0) {
        throw TransportError("rank collision: rank " + std::to_string(peer) + " connected twice");
      }
      send_handshake(s.fd(), rank_, deadline);
      adopt(peer, std::move(s));
      --expected;
    }
  }

  void post_send(std::shared_ptr<HandleRecord> rec, Bytes payload) override {
    Conn& c = conns_[rec->peer];
    if (c.failed) {
      rec->state = HandleState::Failed;
      rec->reason = c.reason;
      return;
    }
    Outgoing out;
    out.buffer.reserve(kFramePrefix + payload.size());
    put_u64(out.buffer, payload.size());
    out.buffer.insert(out.buffer.end(), payload.begin(), payload.end());
    out.rec = std::move(rec);
    c.out.push_back(std::move(out));
  }

  void poll(std::chrono::milliseconds wait, DeliverySink& sink) override {
    std::vector<pollfd> fds;
    std::vector<int> peers;
    for (int p = 0; p < static_cast<int>(conns_.size()); ++p) {
      Conn& c = conns_[p];
      if (p == rank_ || c.failed) continue;
      short events = POLLIN;
      if (!c.out.empty()) events |= POLLOUT;
      fds.push_back({c.sock.fd(), events, 0});
      peers.push_back(p);
    }
    if (fds.empty()) return;
    int rc = ::poll(fds.data(), fds.size(), static_cast<int>(wait.count()));
    if (rc <= 0) return;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      int p = peers[i];
      if (fds[i].revents & (POLLOUT | POLLERR | POLLHUP)) flush(p, sink);
      if (fds[i].revents & (POLLIN | POLLERR | POLLHUP)) read_available(p, sink);
    }
  }

 private:
  struct Outgoing {
    Bytes buffer;
    std::size_t sent = 0;
    std::shared_ptr<HandleRecord> rec;
  };

  struct Conn {
    Socket sock;
    std::deque<Outgoing> out;
    std::uint8_t prefix[kFramePrefix];
    std::size_t prefix_got = 0;
    Bytes payload;
    std::size_t payload_got = 0;
    bool in_payload = false;
    bool failed = false;
    std::string reason;
  };

  void adopt(int peer, Socket s) {
    set_nodelay(s.fd());
    conns_[peer].sock = std::move(s);
  }

  void fail(int peer, const std::string& reason, DeliverySink& sink) {
    Conn& c = conns_[peer];
    if (c.failed) return;
    c.failed = true;
    c.reason = reason;
    for (auto& o : c.out) {
      o.rec->state = HandleState::Failed;
      o.rec->reason = reason;
    }
    c.out.clear();
    c.sock.reset();
    sink.on_peer_failed(peer, reason);
  }

  void flush(int peer, DeliverySink& sink) {
    Conn& c = conns_[peer];
    while (!c.failed && !c.out.empty()) {
      Outgoing& o = c.out.front();
      ssize_t w = ::send(c.sock.fd(), o.buffer.data() + o.sent, o.buffer.size() - o.sent, MSG_NOSIGNAL);
      if (w < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return;
        fail(peer, errno_text("send"), sink);
        return;
      }
      o.sent += static_cast<std::size_t>(w);
      if (o.sent < o.buffer.size()) return;
      auto rec = std::move(o.rec);
      c.out.pop_front();
      sink.on_send_complete(rec);
    }
  }

  void read_available(int peer, DeliverySink& sink) {
    Conn& c = conns_[peer];
    while (!c.failed) {
      ssize_t r;
      if (!c.in_payload) {
        r = ::recv(c.sock.fd(), c.prefix + c.prefix_got, kFramePrefix - c.prefix_got, 0);
      } else {
        r = ::recv(c.sock.fd(), c.payload.data() + c.payload_got, c.payload.size() - c.payload_got, 0);
      }
      if (r == 0) {
        fail(peer, "connection closed by peer", sink);
        return;
      }
      if (r < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return;
        fail(peer, errno_text("recv"), sink);
        return;
      }
      if (!c.in_payload) {
        c.prefix_got += static_cast<std::size_t>(r);
        if (c.prefix_got < kFramePrefix) continue;
        std::uint64_t len = get_u64(c.prefix);
        c.prefix_got = 0;
        if (len > max_message_) {
          fail(peer, "message length " + std::to_string(len) + " exceeds guard of " +
                         std::to_string(max_message_) + " bytes",
               sink);
          return;
        }
        c.payload.assign(len, 0);
        c.payload_got = 0;
        c.in_payload = true;
      } else {
        c.payload_got += static_cast<std::size_t>(r);
      }
      if (c.in_payload && c.payload_got == c.payload.size()) {
        c.in_payload = false;
        sink.on_message(peer, std::move(c.payload));
        c.payload = Bytes();
      }
    }
  }

  int rank_;
  std::uint64_t max_message_;
  std::vector<Conn> conns_;
};

}  // namespace

std::unique_ptr<Endpoint> make_tcp_endpoint(const WorldConfig& config) {
  return std::make_unique<TcpEndpoint>(config);
}

}  // namespace detail
}  // namespace zccl
