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

#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <vector>

#include "transport_internal.hpp"
#include "zccl/error.hpp"

namespace zccl {

// Per-destination mailboxes holding one unbounded FIFO per source.
class LoopbackFabric {
 public:
  explicit LoopbackFabric(int world_size) : closed_(world_size) {
    boxes_.reserve(world_size);
    for (int r = 0; r < world_size; ++r) boxes_.push_back(std::make_unique<Mailbox>(world_size));
  }

  int size() const noexcept { return static_cast<int>(boxes_.size()); }

  void deliver(int src, int dest, Bytes payload) {
    Mailbox& box = *boxes_[dest];
    {
      std::lock_guard lock(box.mu);
      box.from[src].push_back(std::move(payload));
    }
    box.cv.notify_one();
  }

  bool is_closed(int rank) const { return closed_[rank].load(std::memory_order_acquire); }

  void close(int rank) {
    closed_[rank].store(true, std::memory_order_release);
    for (auto& box : boxes_) {
      { std::lock_guard lock(box->mu); ++box->closures; }
      box->cv.notify_all();
    }
  }

  // Moves everything queued for `dest` into `out` (indexed by source),
  // waiting up to `wait` if nothing is queued.
  void drain(int dest, std::chrono::milliseconds wait, std::vector<std::deque<Bytes>>& out,
             int& seen_closures) {
    Mailbox& box = *boxes_[dest];
    std::unique_lock lock(box.mu);
    auto ready = [&] {
      if (box.closures != seen_closures) return true;
      for (const auto& q : box.from) {
        if (!q.empty()) return true;
      }
      return false;
    };
    if (wait.count() > 0 && !ready()) box.cv.wait_for(lock, wait, ready);
    seen_closures = box.closures;
    for (std::size_t s = 0; s < box.from.size(); ++s) {
      auto& q = box.from[s];
      while (!q.empty()) {
        out[s].push_back(std::move(q.front()));
        q.pop_front();
      }
    }
  }

 private:
  struct Mailbox {
    explicit Mailbox(int n) : from(n) {}
    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::deque<Bytes>> from;
    int closures = 0;
  };

  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::vector<std::atomic<bool>> closed_;
};

std::shared_ptr<LoopbackFabric> make_loopback_fabric(int world_size) {
  if (world_size < 2) throw ParameterError("world size must be at least 2");
  return std::make_shared<LoopbackFabric>(world_size);
}

namespace detail {
namespace {

class LoopbackEndpoint final : public Endpoint {
 public:
  LoopbackEndpoint(std::shared_ptr<LoopbackFabric> fabric, int rank)
      : fabric_(std::move(fabric)), rank_(rank), staged_(fabric_->size()),
        reported_(fabric_->size(), false) {}

  ~LoopbackEndpoint() override { fabric_->close(rank_); }

  void post_send(std::shared_ptr<HandleRecord> rec, Bytes payload) override {
    bool delivered = !fabric_->is_closed(rec->peer);
    if (delivered) fabric_->deliver(rank_, rec->peer, std::move(payload));
    unfinished_.push_back({std::move(rec), delivered});
  }

  void poll(std::chrono::milliseconds wait, DeliverySink& sink) override {
    // Sends complete on the first poll after posting, so never block then.
    if (!unfinished_.empty()) wait = std::chrono::milliseconds{0};
    // Snapshot closures before draining: everything a closed peer sent is
    // already queued, so its failure can be reported after the drain.
    std::vector<bool> closed(staged_.size());
    for (int s = 0; s < static_cast<int>(closed.size()); ++s) closed[s] = fabric_->is_closed(s);
    fabric_->drain(rank_, wait, staged_, seen_closures_);
    for (auto& [rec, delivered] : unfinished_) {
      if (!delivered) {
        rec->state = HandleState::Failed;
        rec->reason = "peer closed";
      } else {
        sink.on_send_complete(rec);
      }
    }
    unfinished_.clear();
    for (int s = 0; s < static_cast<int>(staged_.size()); ++s) {
      while (!staged_[s].empty()) {
        sink.on_message(s, std::move(staged_[s].front()));
        staged_[s].pop_front();
      }
      if (s != rank_ && !reported_[s] && closed[s]) {
        reported_[s] = true;
        sink.on_peer_failed(s, "peer closed");
      }
    }
  }

 private:
  std::shared_ptr<LoopbackFabric> fabric_;
  int rank_;
  std::vector<std::deque<Bytes>> staged_;
  std::vector<bool> reported_;
  std::vector<std::pair<std::shared_ptr<HandleRecord>, bool>> unfinished_;
  int seen_closures_ = 0;
};

}  // namespace

std::unique_ptr<Endpoint> make_loopback_endpoint(std::shared_ptr<LoopbackFabric> fabric, int rank) {
  return std::make_unique<LoopbackEndpoint>(std::move(fabric), rank);
}

}  // namespace detail
}  // namespace zccl
