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

#pragma once

// Nonblocking point-to-point byte transport.
//
// Messages are matched by source rank in FIFO order; there are no tags. A
// Communicator is driven by exactly one thread. Two backends exist: an
// in-process loopback fabric shared by N communicators, and TCP with one
// full-duplex connection per rank pair. On the TCP wire every message is an
// 8-byte little-endian length followed by the payload; connections open with
// the handshake "ZCW1" + 4-byte little-endian rank in both directions.

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "zccl/bytes.hpp"

namespace zccl {

enum class HandleKind { Send, Recv };
enum class HandleState { Pending, Complete, Failed };

struct TransportCounters {
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
};

namespace detail {

struct HandleRecord {
  HandleKind kind;
  int peer;
  HandleState state = HandleState::Pending;
  std::size_t bytes = 0;
  Bytes data;
  std::string reason;

  HandleRecord(HandleKind k, int p) : kind(k), peer(p) {}
};

// Receives events from a backend during Endpoint::poll.
class DeliverySink {
 public:
  virtual ~DeliverySink() = default;
  virtual void on_message(int src, Bytes payload) = 0;
  virtual void on_send_complete(const std::shared_ptr<HandleRecord>& rec) = 0;
  virtual void on_peer_failed(int peer, const std::string& reason) = 0;
};

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual void post_send(std::shared_ptr<HandleRecord> rec, Bytes payload) = 0;
  // Advances I/O without blocking longer than `wait` when nothing is ready.
  virtual void poll(std::chrono::milliseconds wait, DeliverySink& sink) = 0;
};

}  // namespace detail

// Handle for one isend/irecv. Copies share state.
class MessageHandle {
 public:
  MessageHandle() = default;

  HandleKind kind() const { return rec_->kind; }
  int peer() const { return rec_->peer; }
  HandleState state() const { return rec_->state; }
  bool valid() const noexcept { return rec_ != nullptr; }
  // Payload of a completed receive.
  const Bytes& data() const { return rec_->data; }
  Bytes take() { return std::move(rec_->data); }
  const std::string& failure_reason() const { return rec_->reason; }

 private:
  friend class Communicator;
  explicit MessageHandle(std::shared_ptr<detail::HandleRecord> rec) : rec_(std::move(rec)) {}
  std::shared_ptr<detail::HandleRecord> rec_;
};

class LoopbackFabric;

enum class Backend { Loopback, Tcp };

struct WorldConfig {
  Backend backend = Backend::Loopback;
  int rank = 0;
  int world_size = 2;
  // Tcp: one "host:port" per rank.
  std::vector<std::string> addresses;
  // Loopback: the shared fabric; created by make_loopback_world.
  std::shared_ptr<LoopbackFabric> fabric;
  std::chrono::milliseconds connect_timeout{30000};
  std::chrono::milliseconds wait_timeout{300000};
  std::uint64_t max_message_bytes = std::uint64_t{1} << 30;
};

class Communicator : private detail::DeliverySink {
 public:
  Communicator(int rank, int world_size, std::unique_ptr<detail::Endpoint> endpoint,
               std::chrono::milliseconds wait_timeout);
  Communicator(Communicator&&) noexcept;
  Communicator& operator=(Communicator&&) noexcept;
  ~Communicator() override;

  int rank() const noexcept { return rank_; }
  int size() const noexcept { return size_; }
  const TransportCounters& counters() const noexcept { return counters_; }

  MessageHandle isend(int dest, Bytes payload);
  MessageHandle irecv(int src);

  // One non-blocking pass over the backend; returns the handle's state.
  HandleState progress(const MessageHandle& handle);
  // One non-blocking pass over the backend.
  void poll();
  // Blocks until the handle is Complete or Failed. Throws TransportError when
  // the wait timeout elapses first.
  HandleState wait(const MessageHandle& handle);
  // wait(), then throws TransportError if the handle failed.
  void wait_ok(const MessageHandle& handle);
  // Returns the payload of a successful receive.
  Bytes recv(int src);

  // Dissemination barrier over empty messages.
  void barrier();

  std::chrono::milliseconds wait_timeout() const noexcept { return wait_timeout_; }
  void set_wait_timeout(std::chrono::milliseconds t) noexcept { wait_timeout_ = t; }

 private:
  void on_message(int src, Bytes payload) override;
  void on_send_complete(const std::shared_ptr<detail::HandleRecord>& rec) override;
  void on_peer_failed(int peer, const std::string& reason) override;
  void drive(std::chrono::milliseconds wait);
  void match(int src);

  int rank_ = 0;
  int size_ = 0;
  std::unique_ptr<detail::Endpoint> endpoint_;
  std::chrono::milliseconds wait_timeout_;
  TransportCounters counters_;
  std::vector<std::deque<Bytes>> inbox_;
  std::vector<std::deque<std::shared_ptr<detail::HandleRecord>>> pending_recv_;
  std::vector<std::string> peer_failure_;
};

// Opens one rank's communicator. Throws ParameterError for world_size < 2 or
// an out-of-range rank, TransportError for timeouts, handshake magic
// mismatches and rank collisions.
Communicator connect_world(const WorldConfig& config);

std::shared_ptr<LoopbackFabric> make_loopback_fabric(int world_size);

// N communicators over one shared in-process fabric, index = rank.
std::vector<Communicator> make_loopback_world(int world_size,
                                              std::chrono::milliseconds wait_timeout = std::chrono::milliseconds{300000});

// Parses "host:port"; throws ParameterError.
std::pair<std::string, std::uint16_t> parse_address(const std::string& address);

// Reserves `count` distinct free localhost ports by binding to port 0.
std::vector<std::string> allocate_local_addresses(int count);

}  // namespace zccl
