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

#include "zccl/transport.hpp"

#include <string>

#include "transport_internal.hpp"
#include "zccl/error.hpp"

namespace zccl {

using detail::HandleRecord;

Communicator::Communicator(int rank, int world_size, std::unique_ptr<detail::Endpoint> endpoint,
                           std::chrono::milliseconds wait_timeout)
    : rank_(rank),
      size_(world_size),
      endpoint_(std::move(endpoint)),
      wait_timeout_(wait_timeout),
      inbox_(world_size),
      pending_recv_(world_size),
      peer_failure_(world_size) {}

Communicator::Communicator(Communicator&&) noexcept = default;
Communicator& Communicator::operator=(Communicator&&) noexcept = default;
Communicator::~Communicator() = default;

MessageHandle Communicator::isend(int dest, Bytes payload) {
  if (dest < 0 || dest >= size_ || dest == rank_) {
    throw ParameterError("isend: invalid destination rank " + std::to_string(dest));
  }
  auto rec = std::make_shared<HandleRecord>(HandleKind::Send, dest);
  rec->bytes = payload.size();
  if (!peer_failure_[dest].empty()) {
    rec->state = HandleState::Failed;
    rec->reason = peer_failure_[dest];
  } else {
    endpoint_->post_send(rec, std::move(payload));
  }
  return MessageHandle(rec);
}

MessageHandle Communicator::irecv(int src) {
  if (src < 0 || src >= size_ || src == rank_) {
    throw ParameterError("irecv: invalid source rank " + std::to_string(src));
  }
  auto rec = std::make_shared<HandleRecord>(HandleKind::Recv, src);
  pending_recv_[src].push_back(rec);
  match(src);
  return MessageHandle(rec);
}

void Communicator::on_message(int src, Bytes payload) {
  inbox_[src].push_back(std::move(payload));
  match(src);
}

void Communicator::on_send_complete(const std::shared_ptr<HandleRecord>& rec) {
  rec->state = HandleState::Complete;
  counters_.bytes_sent += rec->bytes;
  counters_.messages_sent += 1;
}

void Communicator::on_peer_failed(int peer, const std::string& reason) {
  if (peer_failure_[peer].empty()) peer_failure_[peer] = reason;
  match(peer);
}

void Communicator::match(int src) {
  auto& waiting = pending_recv_[src];
  auto& ready = inbox_[src];
  while (!waiting.empty() && !ready.empty()) {
    auto rec = std::move(waiting.front());
    waiting.pop_front();
    rec->data = std::move(ready.front());
    ready.pop_front();
    rec->bytes = rec->data.size();
    rec->state = HandleState::Complete;
    counters_.bytes_received += rec->bytes;
    counters_.messages_received += 1;
  }
  // Nothing more can arrive from a failed peer.
  if (!peer_failure_[src].empty()) {
    for (auto& rec : waiting) {
      rec->state = HandleState::Failed;
      rec->reason = peer_failure_[src];
    }
    waiting.clear();
  }
}

void Communicator::drive(std::chrono::milliseconds wait) { endpoint_->poll(wait, *this); }

void Communicator::poll() { drive(std::chrono::milliseconds{0}); }

HandleState Communicator::progress(const MessageHandle& handle) {
  if (handle.state() == HandleState::Pending) poll();
  return handle.state();
}

HandleState Communicator::wait(const MessageHandle& handle) {
  using clock = std::chrono::steady_clock;
  auto deadline = clock::now() + wait_timeout_;
  while (handle.state() == HandleState::Pending) {
    auto now = clock::now();
    if (now >= deadline) {
      throw TransportError("rank " + std::to_string(rank_) + ": timed out waiting for " +
                           (handle.kind() == HandleKind::Send ? "send to " : "receive from ") +
                           "rank " + std::to_string(handle.peer()));
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    drive(std::min(left, std::chrono::milliseconds{100}));
  }
  return handle.state();
}

void Communicator::wait_ok(const MessageHandle& handle) {
  if (wait(handle) == HandleState::Failed) {
    throw TransportError("rank " + std::to_string(rank_) + ": " +
                         (handle.kind() == HandleKind::Send ? "send to " : "receive from ") +
                         "rank " + std::to_string(handle.peer()) +
                         " failed: " + handle.failure_reason());
  }
}

Bytes Communicator::recv(int src) {
  MessageHandle h = irecv(src);
  wait_ok(h);
  return h.take();
}

void Communicator::barrier() {
  for (int dist = 1; dist < size_; dist <<= 1) {
    MessageHandle s = isend((rank_ + dist) % size_, {});
    MessageHandle r = irecv((rank_ - dist % size_ + size_) % size_);
    wait_ok(r);
    wait_ok(s);
  }
}

Communicator connect_world(const WorldConfig& config) {
  if (config.world_size < 2) throw ParameterError("world size must be at least 2");
  if (config.rank < 0 || config.rank >= config.world_size) {
    throw ParameterError("rank " + std::to_string(config.rank) + " outside world of size " +
                         std::to_string(config.world_size));
  }
  std::unique_ptr<detail::Endpoint> ep;
  if (config.backend == Backend::Loopback) {
    if (!config.fabric) throw ParameterError("loopback backend requires a fabric");
    ep = detail::make_loopback_endpoint(config.fabric, config.rank);
  } else {
    ep = detail::make_tcp_endpoint(config);
  }
  return Communicator(config.rank, config.world_size, std::move(ep), config.wait_timeout);
}

std::vector<Communicator> make_loopback_world(int world_size, std::chrono::milliseconds wait_timeout) {
  if (world_size < 2) throw ParameterError("world size must be at least 2");
  auto fabric = make_loopback_fabric(world_size);
  std::vector<Communicator> comms;
  comms.reserve(world_size);
  for (int r = 0; r < world_size; ++r) {
    WorldConfig cfg;
    cfg.backend = Backend::Loopback;
    cfg.rank = r;
    cfg.world_size = world_size;
    cfg.fabric = fabric;
    cfg.wait_timeout = wait_timeout;
    comms.push_back(connect_world(cfg));
  }
  return comms;
}

}  // namespace zccl
