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

#include "zccl/collectives.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <string>

#include "zccl/codec_szx.hpp"
#include "zccl/error.hpp"

namespace zccl {
namespace {

using clock = std::chrono::steady_clock;

// Adds the scope's wall time to `slot`.
class Phase {
 public:
  explicit Phase(double& slot) : slot_(slot), t0_(clock::now()) {}
  ~Phase() { slot_ += std::chrono::duration<double>(clock::now() - t0_).count(); }
  Phase(const Phase&) = delete;
  Phase& operator=(const Phase&) = delete;

 private:
  double& slot_;
  clock::time_point t0_;
};

// Snapshots transport counters and total time for one collective call.
class CallScope {
 public:
  CallScope(Communicator& comm, OpCounters& c) : comm_(comm), c_(c), start_(comm.counters()), t0_(clock::now()) {}
  void finish() {
    const TransportCounters& now = comm_.counters();
    c_.transport.bytes_sent = now.bytes_sent - start_.bytes_sent;
    c_.transport.bytes_received = now.bytes_received - start_.bytes_received;
    c_.transport.messages_sent = now.messages_sent - start_.messages_sent;
    c_.transport.messages_received = now.messages_received - start_.messages_received;
    c_.times.total_s = std::chrono::duration<double>(clock::now() - t0_).count();
  }

 private:
  Communicator& comm_;
  OpCounters& c_;
  TransportCounters start_;
  clock::time_point t0_;
};

int wrap(long long v, int n) { return static_cast<int>(((v % n) + n) % n); }

Bytes float_bytes(std::span<const float> v) {
  Bytes out(v.size() * sizeof(float));
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

std::vector<float> bytes_to_floats(ByteView b) {
  if (b.size() % sizeof(float) != 0) throw FormatError("raw payload is not a whole number of floats", b.size());
  std::vector<float> out(b.size() / sizeof(float));
  std::memcpy(out.data(), b.data(), b.size());
  return out;
}

float frame_error_bound(ByteView frame) {
  if (frame.size() >= 4 && std::memcmp(frame.data(), SzxHeader::kMagic, 4) == 0) {
    return SzxHeader::parse(frame).eb_abs;
  }
  return FrameHeader::parse(frame).eb_abs;
}

// Re-raises the in-flight zccl error with a rank/step prefix, keeping its type.
[[noreturn]] void rethrow_with(const std::string& where) {
  try {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(where + e.what(), e.offset());
  } catch (const OverflowError& e) {
    throw OverflowError(where + e.what());
  } catch (const IngestionError& e) {
    throw IngestionError(where + e.what(), e.index());
  } catch (const ParameterError& e) {
    throw ParameterError(where + e.what());
  } catch (const TransportError& e) {
    throw TransportError(where + e.what());
  } catch (const AbortedError& e) {
    throw AbortedError(where + e.what());
  } catch (const Error& e) {
    throw Error(where + e.what());
  }
}

std::string context(const Communicator& comm, const char* what, std::size_t step) {
  return "rank " + std::to_string(comm.rank()) + " " + what + " " + std::to_string(step) + ": ";
}

void wait_all(Communicator& comm, std::vector<MessageHandle>& handles, double& comm_s) {
  Phase p(comm_s);
  for (auto& h : handles) comm.wait_ok(h);
  handles.clear();
}

// Runs the N-1 ring rounds shared by the per-round allgather and
// reduce-scatter schedules: round k sends make_out(k) to rank+1, then hands
// the message from rank-1 to on_in(k, bytes).
template <typename MakeOut, typename OnIn>
void ring_rounds(Communicator& comm, OpCounters& c, MakeOut make_out, OnIn on_in) {
  const int n = comm.size();
  const int next = wrap(comm.rank() + 1, n);
  const int prev = wrap(comm.rank() - 1, n);
  for (int k = 0; k + 1 < n; ++k) {
    try {
      MessageHandle rh = comm.irecv(prev);
      Bytes out = make_out(k, rh);
      c.payload_bytes_sent += out.size();
      MessageHandle sh;
      {
        Phase p(c.times.comm_s);
        sh = comm.isend(next, std::move(out));
        comm.wait_ok(rh);
      }
      Bytes in = rh.take();
      c.payload_bytes_received += in.size();
      on_in(k, std::move(in), sh);
      {
        Phase p(c.times.comm_s);
        comm.wait_ok(sh);
      }
    } catch (const Error&) {
      rethrow_with(context(comm, "round", k));
    }
    ++c.rounds;
  }
}

// Gathers one small blob per rank (metadata exchanges; not payload).
std::vector<Bytes> ring_allgather_blobs(Communicator& comm, Bytes mine, double& comm_s) {
  const int n = comm.size();
  const int r = comm.rank();
  std::vector<Bytes> all(n);
  all[r] = std::move(mine);
  Phase p(comm_s);
  for (int k = 0; k + 1 < n; ++k) {
    MessageHandle rh = comm.irecv(wrap(r - 1, n));
    MessageHandle sh = comm.isend(wrap(r + 1, n), all[wrap(r - k, n)]);
    comm.wait_ok(rh);
    all[wrap(r - k - 1, n)] = rh.take();
    comm.wait_ok(sh);
  }
  return all;
}

struct GlobalMeta {
  std::size_t length = 0;
  ValueRange range;
};

// Agrees on the common input length and the global value range. Every rank
// throws the same error when any rank's input is empty, non-finite, or of a
// different length.
GlobalMeta exchange_meta(Communicator& comm, std::span<const float> local, OpCounters& c) {
  std::size_t bad = first_non_finite(local);
  bool ok = !local.empty() && bad == local.size();
  ValueRange mine = ok ? value_range(local) : ValueRange{};
  Bytes blob;
  put_u64(blob, local.size());
  put_f32(blob, mine.min);
  put_f32(blob, mine.max);
  blob.push_back(ok ? 1 : 0);
  auto all = ring_allgather_blobs(comm, std::move(blob), c.times.comm_s);

  if (!local.empty() && bad != local.size()) {
    throw IngestionError("rank " + std::to_string(comm.rank()) + ": non-finite value at index " +
                             std::to_string(bad), bad);
  }
  GlobalMeta meta;
  meta.length = local.size();
  bool first = true;
  for (int q = 0; q < comm.size(); ++q) {
    const Bytes& b = all[q];
    if (b.size() != 17) throw FormatError("malformed metadata from rank " + std::to_string(q), b.size());
    std::uint64_t len = get_u64(b.data());
    if (len != local.size()) {
      throw ParameterError("input length mismatch: rank " + std::to_string(q) + " has " +
                           std::to_string(len) + " values, rank " + std::to_string(comm.rank()) +
                           " has " + std::to_string(local.size()));
    }
    if (b[16] == 0) throw ParameterError("rank " + std::to_string(q) + " supplied empty or non-finite input");
    ValueRange rr{get_f32(b.data() + 8), get_f32(b.data() + 12)};
    if (first) {
      meta.range = rr;
      first = false;
    } else {
      meta.range.min = std::min(meta.range.min, rr.min);
      meta.range.max = std::max(meta.range.max, rr.max);
    }
  }
  return meta;
}

void check_divisible(std::size_t length, int n) {
  if (length % static_cast<std::size_t>(n) != 0) {
    throw ParameterError("input length " + std::to_string(length) + " is not divisible by " +
                         std::to_string(n) + " ranks");
  }
}

Bytes compress_counted(std::span<const float> v, float eb, const CollectiveConfig& cfg, OpCounters& c) {
  Phase p(c.times.compress_s);
  ++c.compress_ops;
  return compress_frame(cfg.codec, v, eb, cfg.params);
}

std::vector<float> decompress_counted(ByteView frame, std::size_t expect, const CollectiveConfig& cfg,
                                      OpCounters& c) {
  std::vector<float> out;
  {
    Phase p(c.times.compress_s);
    ++c.decompress_ops;
    out = decompress_frame(frame, cfg.params.parallelism);
  }
  if (out.size() != expect) {
    throw FormatError("frame holds " + std::to_string(out.size()) + " values, expected " +
                          std::to_string(expect), 0);
  }
  return out;
}

void reduce_into(std::span<float> acc, std::span<const float> incoming, std::span<const float> local,
                 ReduceKind kind) {
  switch (kind) {
    case ReduceKind::Sum:
    case ReduceKind::Average:
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = incoming[i] + local[i];
      break;
    case ReduceKind::Max:
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = std::max(incoming[i], local[i]);
      break;
    case ReduceKind::Min:
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = std::min(incoming[i], local[i]);
      break;
  }
}

void scale_average(std::vector<float>& v, int n, ReduceKind kind) {
  if (kind != ReduceKind::Average) return;
  const float inv = 1.0f / static_cast<float>(n);
  for (float& x : v) x *= inv;
}

// ---------------------------------------------------------------------------
// Allgather

// Compress-once ring allgather. Compressed chunks are exchanged as one byte
// stream, forwarded in pieces of at most pipeline_segment_bytes as soon as
// they are available. Rank r sends
// total - size[r+1] bytes (its own chunk, then everything it received except
// its successor's chunk) and receives total - size[r] bytes.
std::vector<float> z_allgather_impl(Communicator& comm, std::span<const float> local, float eb,
                                    const CollectiveConfig& cfg, OpCounters& c) {
  const int n = comm.size();
  const int r = comm.rank();
  const int next = wrap(r + 1, n);
  const int prev = wrap(r - 1, n);
  const std::size_t m = local.size();

  Bytes own = compress_counted(local, eb, cfg, c);

  Bytes size_blob;
  put_u32(size_blob, static_cast<std::uint32_t>(own.size()));
  auto blobs = ring_allgather_blobs(comm, std::move(size_blob), c.times.comm_s);
  std::vector<std::size_t> sizes(n);
  std::size_t total = 0;
  for (int q = 0; q < n; ++q) {
    if (blobs[q].size() != 4) throw FormatError("malformed size from rank " + std::to_string(q), 0);
    sizes[q] = get_u32(blobs[q].data());
    total += sizes[q];
  }
  const std::size_t to_send = total - sizes[next];
  const std::size_t to_recv = total - sizes[r];
  const std::size_t seg = cfg.pipeline_segment_bytes;

  Bytes in(to_recv);
  std::size_t sent = 0, got = 0;
  std::vector<MessageHandle> sends;
  MessageHandle rh;
  bool posted = false;
  {
    Phase p(c.times.comm_s);
    while (sent < to_send || got < to_recv) {
      bool progressed = false;
      if (got < to_recv && !posted) {
        rh = comm.irecv(prev);
        posted = true;
      }
      if (posted) {
        HandleState st = comm.progress(rh);
        if (st == HandleState::Failed) comm.wait_ok(rh);
        if (st == HandleState::Complete) {
          Bytes piece = rh.take();
          if (piece.size() > to_recv - got) throw FormatError("allgather stream overrun", got);
          std::memcpy(in.data() + got, piece.data(), piece.size());
          got += piece.size();
          posted = false;
          progressed = true;
        }
      }
      const std::size_t ready = own.size() + std::min(got, to_send - own.size());
      while (sent < ready) {
        std::size_t len = std::min(seg, ready - sent);
        Bytes piece(len);
        std::size_t from_own = sent < own.size() ? std::min(len, own.size() - sent) : 0;
        if (from_own > 0) std::memcpy(piece.data(), own.data() + sent, from_own);
        if (from_own < len) {
          std::memcpy(piece.data() + from_own, in.data() + (sent + from_own - own.size()), len - from_own);
        }
        sends.push_back(comm.isend(next, std::move(piece)));
        sent += len;
        progressed = true;
      }
      if (!progressed && posted) comm.wait(rh);
    }
  }
  wait_all(comm, sends, c.times.comm_s);
  c.payload_bytes_sent += to_send;
  c.payload_bytes_received += to_recv;
  c.rounds += n - 1;

  std::vector<float> out(m * n);
  std::size_t offset = 0;
  for (int j = 1; j < n; ++j) {
    int owner = wrap(r - j, n);
    auto part = decompress_counted(ByteView(in).subspan(offset, sizes[owner]), m, cfg, c);
    std::copy(part.begin(), part.end(), out.begin() + owner * m);
    offset += sizes[owner];
  }
  if (cfg.self_exact) {
    std::copy(local.begin(), local.end(), out.begin() + r * m);
  } else {
    auto part = decompress_counted(own, m, cfg, c);
    std::copy(part.begin(), part.end(), out.begin() + r * m);
  }
  return out;
}

// Per-round ring allgather; Cprp2p recompresses the relayed slot each round.
std::vector<float> ring_allgather_impl(Variant v, Communicator& comm, std::span<const float> local,
                                       float eb, const CollectiveConfig& cfg, OpCounters& c) {
  const int n = comm.size();
  const int r = comm.rank();
  const std::size_t m = local.size();
  std::vector<float> out(m * n);
  std::copy(local.begin(), local.end(), out.begin() + r * m);
  auto slot = [&](int q) { return std::span<const float>(out).subspan(q * m, m); };
  ring_rounds(
      comm, c,
      [&](int k, MessageHandle&) {
        auto data = slot(wrap(r - k, n));
        if (v == Variant::Plain) return float_bytes(data);
        Bytes frame = compress_counted(data, eb, cfg, c);
        if (k == 0 && !cfg.self_exact) {
          auto own = decompress_counted(frame, m, cfg, c);
          std::copy(own.begin(), own.end(), out.begin() + r * m);
        }
        return frame;
      },
      [&](int k, Bytes in, MessageHandle&) {
        int owner = wrap(r - k - 1, n);
        std::vector<float> part = v == Variant::Plain ? bytes_to_floats(in) : decompress_counted(in, m, cfg, c);
        if (part.size() != m) throw FormatError("allgather chunk has wrong length", 0);
        std::copy(part.begin(), part.end(), out.begin() + owner * m);
      });
  return out;
}

// ---------------------------------------------------------------------------
// Reduce-scatter

std::vector<float> reduce_scatter_impl(Variant v, Communicator& comm, std::span<const float> local,
                                       ReduceKind kind, float eb, const CollectiveConfig& cfg,
                                       OpCounters& c) {
  const int n = comm.size();
  const int r = comm.rank();
  const std::size_t m = local.size() / n;
  auto block = [&](int i) { return local.subspan(static_cast<std::size_t>(i) * m, m); };
  std::vector<float> acc(block(wrap(r - 1, n)).begin(), block(wrap(r - 1, n)).end());
  std::vector<float> next_acc(m);
  // Hooks only interleave with serial chunk coding; parallel workers run the
  // chunks concurrently instead.
  const bool overlap = cfg.params.parallelism <= 1;

  ring_rounds(
      comm, c,
      [&](int, MessageHandle& rh) -> Bytes {
        if (v == Variant::Plain) return float_bytes(acc);
        if (v == Variant::Cprp2p) return compress_counted(acc, eb, cfg, c);
        Phase p(c.times.compress_s);
        ++c.compress_ops;
        ProgressHook hook;
        if (overlap) hook = [&] {
          comm.progress(rh);
          return true;
        };
        return compress_chunked(acc, eb, cfg.params, cfg.chunk_len, hook, cfg.codec).bytes;
      },
      [&](int k, Bytes in, MessageHandle& sh) {
        std::vector<float> incoming;
        if (v == Variant::Plain) {
          incoming = bytes_to_floats(in);
        } else if (v == Variant::Cprp2p) {
          incoming = decompress_counted(in, m, cfg, c);
        } else {
          Phase p(c.times.compress_s);
          ++c.decompress_ops;
          ProgressHook hook;
          if (overlap) hook = [&] {
            comm.progress(sh);
            return true;
          };
          incoming = decompress_chunked(in, hook);
        }
        if (incoming.size() != m) throw FormatError("reduce-scatter block has wrong length", 0);
        Phase p(c.times.reduce_s);
        reduce_into(next_acc, incoming, block(wrap(r - k - 2, n)), kind);
        std::swap(acc, next_acc);
      });
  return acc;
}

// ---------------------------------------------------------------------------
// Binomial tree helpers (virtual ranks relative to the root)

struct TreePosition {
  int vrank = 0;
  int parent = -1;             // real rank, -1 at the root
  std::vector<int> children;   // virtual ranks, in send order
  int extent = 0;              // number of virtual ranks in this subtree
};

TreePosition tree_position(int rank, int root, int n) {
  TreePosition t;
  t.vrank = wrap(rank - root, n);
  int mask = 1;
  while (mask < n) {
    if (t.vrank & mask) {
      t.parent = wrap(t.vrank - mask + root, n);
      break;
    }
    mask <<= 1;
  }
  t.extent = t.vrank == 0 ? n : std::min(mask, n - t.vrank);
  for (mask >>= 1; mask > 0; mask >>= 1) {
    if (t.vrank + mask < n) t.children.push_back(t.vrank + mask);
  }
  return t;
}

int subtree_extent(int vrank, int n) {
  return vrank == 0 ? n : std::min(vrank & -vrank, n - vrank);
}

void check_root(const Communicator& comm, int root) {
  if (root < 0 || root >= comm.size()) throw ParameterError("invalid root rank " + std::to_string(root));
}

void forward_rejection(Communicator& comm, const TreePosition& t, int root) {
  std::vector<MessageHandle> sends;
  for (int child : t.children) sends.push_back(comm.isend(wrap(child + root, comm.size()), {}));
  for (auto& h : sends) comm.wait(h);
}

// Validates root input before anything is sent; on failure the children are
// told with an empty message so they fail instead of waiting.
float prepare_root(Communicator& comm, const TreePosition& t, int root, std::span<const float> data,
                   const CollectiveConfig* cfg, std::size_t divisor) {
  try {
    if (data.empty()) throw ParameterError("root supplied an empty field");
    if (data.size() % divisor != 0) {
      throw ParameterError("root data length " + std::to_string(data.size()) + " is not divisible by " +
                           std::to_string(divisor));
    }
    std::size_t bad = first_non_finite(data);
    if (bad != data.size()) throw IngestionError("non-finite value at index " + std::to_string(bad), bad);
    return cfg ? resolve_error_bound(cfg->error_bound, value_range(data)) : 0.0f;
  } catch (const Error&) {
    forward_rejection(comm, t, root);
    throw;
  }
}

Bytes recv_from_parent(Communicator& comm, const TreePosition& t, int root, OpCounters& c) {
  Bytes payload;
  {
    Phase p(c.times.comm_s);
    payload = comm.recv(t.parent);
  }
  if (payload.empty()) {
    forward_rejection(comm, t, root);
    throw ParameterError("rank " + std::to_string(comm.rank()) + ": root rejected its input");
  }
  c.payload_bytes_received += payload.size();
  return payload;
}

CollectiveResult bcast_impl(Variant v, Communicator& comm, int root, std::span<const float> data,
                            const CollectiveConfig& cfg) {
  check_root(comm, root);
  if (v != Variant::Plain) cfg.validate();
  CollectiveResult res;
  OpCounters& c = res.counters;
  CallScope scope(comm, c);
  const int n = comm.size();
  TreePosition t = tree_position(comm.rank(), root, n);
  std::vector<MessageHandle> sends;
  auto send_children = [&](const Bytes& payload) {
    Phase p(c.times.comm_s);
    for (int child : t.children) {
      c.payload_bytes_sent += payload.size();
      sends.push_back(comm.isend(wrap(child + root, n), payload));
    }
  };

  if (t.vrank == 0) {
    float eb = prepare_root(comm, t, root, data, v == Variant::Plain ? nullptr : &cfg, 1);
    c.eb_abs = eb;
    if (v == Variant::Plain) {
      send_children(float_bytes(data));
      res.values.assign(data.begin(), data.end());
    } else {
      Bytes frame = compress_counted(data, eb, cfg, c);
      send_children(frame);
      if (cfg.self_exact) {
        res.values.assign(data.begin(), data.end());
      } else {
        res.values = decompress_counted(frame, data.size(), cfg, c);
      }
    }
  } else {
    Bytes payload = recv_from_parent(comm, t, root, c);
    try {
      if (v == Variant::Plain) {
        send_children(payload);
        res.values = bytes_to_floats(payload);
      } else {
        c.eb_abs = frame_error_bound(payload);
        if (v == Variant::Z) {
          send_children(payload);
          {
            Phase p(c.times.compress_s);
            ++c.decompress_ops;
            res.values = decompress_frame(payload, cfg.params.parallelism);
          }
          c.path_codec_pairs = 1;
        } else {
          {
            Phase p(c.times.compress_s);
            ++c.decompress_ops;
            res.values = decompress_frame(payload, cfg.params.parallelism);
          }
          if (!t.children.empty()) send_children(compress_counted(res.values, c.eb_abs, cfg, c));
          c.path_codec_pairs = static_cast<std::uint64_t>(std::popcount(static_cast<unsigned>(t.vrank)));
        }
      }
    } catch (const Error&) {
      rethrow_with("rank " + std::to_string(comm.rank()) + " bcast: ");
    }
  }
  wait_all(comm, sends, c.times.comm_s);
  c.rounds = static_cast<std::uint64_t>(binomial_depth(n));
  scope.finish();
  return res;
}

// Scatter messages: count u32 | size u32 x count | frames (Z), or raw floats (Plain).
CollectiveResult scatter_impl(Variant v, Communicator& comm, int root, std::span<const float> data,
                              const CollectiveConfig& cfg) {
  check_root(comm, root);
  if (v != Variant::Plain) cfg.validate();
  CollectiveResult res;
  OpCounters& c = res.counters;
  CallScope scope(comm, c);
  const int n = comm.size();
  TreePosition t = tree_position(comm.rank(), root, n);

  // Frames (or raw slices) for virtual ranks [vrank, vrank + extent).
  std::vector<Bytes> parts;
  std::size_t m = 0;
  if (t.vrank == 0) {
    float eb = prepare_root(comm, t, root, data, v == Variant::Plain ? nullptr : &cfg, n);
    c.eb_abs = eb;
    m = data.size() / n;
    parts.resize(n);
    for (int vr = 0; vr < n; ++vr) {
      auto slice = data.subspan(static_cast<std::size_t>(wrap(vr + root, n)) * m, m);
      parts[vr] = v == Variant::Plain ? float_bytes(slice) : compress_counted(slice, eb, cfg, c);
    }
  } else {
    Bytes msg = recv_from_parent(comm, t, root, c);
    try {
      parts.resize(t.extent);
      if (v == Variant::Plain) {
        if (msg.size() % (sizeof(float) * t.extent) != 0) throw FormatError("scatter payload size", 0);
        std::size_t each = msg.size() / t.extent;
        for (int i = 0; i < t.extent; ++i) parts[i].assign(msg.begin() + i * each, msg.begin() + (i + 1) * each);
      } else {
        if (msg.size() < 4 || get_u32(msg.data()) != static_cast<std::uint32_t>(t.extent) ||
            msg.size() < 4 + 4 * static_cast<std::size_t>(t.extent)) {
          throw FormatError("scatter index does not match subtree", 0);
        }
        std::size_t offset = 4 + 4 * static_cast<std::size_t>(t.extent);
        c.payload_bytes_received -= offset;
        for (int i = 0; i < t.extent; ++i) {
          std::size_t len = get_u32(msg.data() + 4 + 4 * i);
          if (len > msg.size() - offset) throw FormatError("scatter index overruns payload", 4 + 4 * i);
          parts[i].assign(msg.begin() + offset, msg.begin() + offset + len);
          offset += len;
        }
        if (offset != msg.size()) throw FormatError("scatter payload longer than index", offset);
        c.eb_abs = frame_error_bound(parts[0]);
      }
    } catch (const Error&) {
      rethrow_with("rank " + std::to_string(comm.rank()) + " scatter: ");
    }
  }

  std::vector<MessageHandle> sends;
  for (int child : t.children) {
    int first = child - t.vrank;
    int extent = subtree_extent(child, n);
    Bytes msg;
    std::size_t payload = 0;
    if (v != Variant::Plain) {
      put_u32(msg, static_cast<std::uint32_t>(extent));
      for (int i = 0; i < extent; ++i) put_u32(msg, static_cast<std::uint32_t>(parts[first + i].size()));
    }
    for (int i = 0; i < extent; ++i) {
      msg.insert(msg.end(), parts[first + i].begin(), parts[first + i].end());
      payload += parts[first + i].size();
    }
    c.payload_bytes_sent += payload;
    Phase p(c.times.comm_s);
    sends.push_back(comm.isend(wrap(child + root, n), std::move(msg)));
  }

  if (v == Variant::Plain) {
    res.values = bytes_to_floats(parts[0]);
  } else if (t.vrank == 0 && cfg.self_exact) {
    auto slice = data.subspan(static_cast<std::size_t>(root) * m, m);
    res.values.assign(slice.begin(), slice.end());
  } else {
    Phase p(c.times.compress_s);
    ++c.decompress_ops;
    res.values = decompress_frame(parts[0], cfg.params.parallelism);
  }
  wait_all(comm, sends, c.times.comm_s);
  c.rounds = static_cast<std::uint64_t>(binomial_depth(n));
  scope.finish();
  return res;
}

CollectiveResult allgather_variant(Variant v, Communicator& comm, std::span<const float> local,
                                   const CollectiveConfig& cfg) {
  CollectiveResult res;
  OpCounters& c = res.counters;
  CallScope scope(comm, c);
  if (v == Variant::Plain) {
    if (local.empty()) throw ParameterError("allgather of an empty field");
    res.values = ring_allgather_impl(v, comm, local, 0.0f, cfg, c);
  } else {
    cfg.validate();
    GlobalMeta meta = exchange_meta(comm, local, c);
    float eb = resolve_error_bound(cfg.error_bound, meta.range);
    c.eb_abs = eb;
    res.values = v == Variant::Z ? z_allgather_impl(comm, local, eb, cfg, c)
                                 : ring_allgather_impl(v, comm, local, eb, cfg, c);
  }
  scope.finish();
  return res;
}

CollectiveResult reduce_scatter_variant(Variant v, Communicator& comm, std::span<const float> local,
                                        ReduceKind kind, const CollectiveConfig& cfg) {
  CollectiveResult res;
  OpCounters& c = res.counters;
  CallScope scope(comm, c);
  float eb = 0.0f;
  if (v != Variant::Plain) {
    cfg.validate();
    GlobalMeta meta = exchange_meta(comm, local, c);
    eb = resolve_error_bound(cfg.error_bound, meta.range);
    c.eb_abs = eb;
  } else if (local.empty()) {
    throw ParameterError("reduce-scatter of an empty field");
  }
  check_divisible(local.size(), comm.size());
  res.values = reduce_scatter_impl(v, comm, local, kind, eb, cfg, c);
  scale_average(res.values, comm.size(), kind);
  scope.finish();
  return res;
}

CollectiveResult allreduce_variant(Variant v, Communicator& comm, std::span<const float> local,
                                   ReduceKind kind, const CollectiveConfig& cfg) {
  CollectiveResult res;
  OpCounters& c = res.counters;
  CallScope scope(comm, c);
  float eb = 0.0f;
  if (v != Variant::Plain) {
    cfg.validate();
    GlobalMeta meta = exchange_meta(comm, local, c);
    eb = resolve_error_bound(cfg.error_bound, meta.range);
    c.eb_abs = eb;
  } else if (local.empty()) {
    throw ParameterError("allreduce of an empty field");
  }
  check_divisible(local.size(), comm.size());
  std::vector<float> owned = reduce_scatter_impl(v, comm, local, kind, eb, cfg, c);
  res.values = v == Variant::Z ? z_allgather_impl(comm, owned, eb, cfg, c)
                               : ring_allgather_impl(v, comm, owned, eb, cfg, c);
  scale_average(res.values, comm.size(), kind);
  scope.finish();
  return res;
}

}  // namespace

const char* to_string(ReduceKind kind) noexcept {
  switch (kind) {
    case ReduceKind::Sum: return "sum";
    case ReduceKind::Max: return "max";
    case ReduceKind::Min: return "min";
    case ReduceKind::Average: return "average";
  }
  return "?";
}

const char* to_string(Variant variant) noexcept {
  switch (variant) {
    case Variant::Plain: return "plain";
    case Variant::Cprp2p: return "cprp2p";
    case Variant::Z: return "z";
  }
  return "?";
}

void CollectiveConfig::validate() const {
  error_bound.validate();
  params.validate();
  if (chunk_len == 0) throw ParameterError("chunk_len must be positive");
  if (codec == CodecKind::ZLite && chunk_len % params.thread_block_len != 0) {
    throw ParameterError("thread_block_len must divide chunk_len");
  }
  if (pipeline_segment_bytes == 0) throw ParameterError("pipeline_segment_bytes must be positive");
}

double PhaseTimes::other_s() const noexcept {
  return std::max(0.0, total_s - compress_s - comm_s - reduce_s);
}

int binomial_depth(int world_size) noexcept {
  int depth = 0;
  while ((1 << depth) < world_size) ++depth;
  return depth;
}

CollectiveResult z_allgather(Communicator& comm, std::span<const float> local, const CollectiveConfig& cfg) {
  return allgather_variant(Variant::Z, comm, local, cfg);
}
CollectiveResult cprp2p_allgather(Communicator& comm, std::span<const float> local, const CollectiveConfig& cfg) {
  return allgather_variant(Variant::Cprp2p, comm, local, cfg);
}
CollectiveResult plain_allgather(Communicator& comm, std::span<const float> local) {
  return allgather_variant(Variant::Plain, comm, local, CollectiveConfig{});
}

CollectiveResult z_bcast(Communicator& comm, int root, std::span<const float> data, const CollectiveConfig& cfg) {
  return bcast_impl(Variant::Z, comm, root, data, cfg);
}
CollectiveResult cprp2p_bcast(Communicator& comm, int root, std::span<const float> data,
                              const CollectiveConfig& cfg) {
  return bcast_impl(Variant::Cprp2p, comm, root, data, cfg);
}
CollectiveResult plain_bcast(Communicator& comm, int root, std::span<const float> data) {
  return bcast_impl(Variant::Plain, comm, root, data, CollectiveConfig{});
}

CollectiveResult z_scatter(Communicator& comm, int root, std::span<const float> data, const CollectiveConfig& cfg) {
  return scatter_impl(Variant::Z, comm, root, data, cfg);
}
CollectiveResult plain_scatter(Communicator& comm, int root, std::span<const float> data) {
  return scatter_impl(Variant::Plain, comm, root, data, CollectiveConfig{});
}

CollectiveResult z_reduce_scatter(Communicator& comm, std::span<const float> local, ReduceKind kind,
                                  const CollectiveConfig& cfg) {
  return reduce_scatter_variant(Variant::Z, comm, local, kind, cfg);
}
CollectiveResult cprp2p_reduce_scatter(Communicator& comm, std::span<const float> local, ReduceKind kind,
                                       const CollectiveConfig& cfg) {
  return reduce_scatter_variant(Variant::Cprp2p, comm, local, kind, cfg);
}
CollectiveResult plain_reduce_scatter(Communicator& comm, std::span<const float> local, ReduceKind kind) {
  return reduce_scatter_variant(Variant::Plain, comm, local, kind, CollectiveConfig{});
}

CollectiveResult z_allreduce(Communicator& comm, std::span<const float> local, ReduceKind kind,
                             const CollectiveConfig& cfg) {
  return allreduce_variant(Variant::Z, comm, local, kind, cfg);
}
CollectiveResult cprp2p_allreduce(Communicator& comm, std::span<const float> local, ReduceKind kind,
                                  const CollectiveConfig& cfg) {
  return allreduce_variant(Variant::Cprp2p, comm, local, kind, cfg);
}
CollectiveResult plain_allreduce(Communicator& comm, std::span<const float> local, ReduceKind kind) {
  return allreduce_variant(Variant::Plain, comm, local, kind, CollectiveConfig{});
}

CollectiveResult allgather(Variant v, Communicator& comm, std::span<const float> local, const CollectiveConfig& cfg) {
  return allgather_variant(v, comm, local, cfg);
}
CollectiveResult bcast(Variant v, Communicator& comm, int root, std::span<const float> data,
                       const CollectiveConfig& cfg) {
  return bcast_impl(v, comm, root, data, cfg);
}
CollectiveResult allreduce(Variant v, Communicator& comm, std::span<const float> local, ReduceKind kind,
                           const CollectiveConfig& cfg) {
  return allreduce_variant(v, comm, local, kind, cfg);
}

}  // namespace zccl
