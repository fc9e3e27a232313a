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

// Compression-enabled collectives over a Communicator.
//
// Three variants share each schedule:
//   Plain  - raw float bytes, the uncompressed reference.
//   Cprp2p - compress before every send, decompress after every receive.
//   Z      - data movement collectives compress each chunk once and relay
//            compressed bytes, decompressing only at the end; reduce-scatter
//            overlaps transfers with chunked compression through hooks.
//
// Ring schedules send to rank+1 and receive from rank-1. Binomial schedules
// use the standard virtual-rank tree rooted at `root`. All ranks of the
// communicator must call the same collective with the same configuration.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zccl/codec_chunked.hpp"
#include "zccl/field.hpp"
#include "zccl/transport.hpp"

namespace zccl {

enum class ReduceKind { Sum, Max, Min, Average };
enum class Variant { Plain, Cprp2p, Z };

const char* to_string(ReduceKind kind) noexcept;
const char* to_string(Variant variant) noexcept;

struct CollectiveConfig {
  ErrorBoundSpec error_bound = ErrorBoundSpec::relative(1e-4);
  CodecKind codec = CodecKind::ZLite;
  std::size_t chunk_len = kDefaultChunkLen;
  std::size_t pipeline_segment_bytes = 65536;
  // Keep the original data in a rank's own output slot instead of its
  // reconstruction. When false every rank holds bitwise-identical results.
  bool self_exact = true;
  // Codec block sizes and worker count. With parallelism > 1 the chunked
  // codec runs chunks in parallel instead of polling between them.
  CodecParams params;

  void validate() const;
};

// Wall-clock split of one collective call. The categories do not overlap;
// other_s is whatever total_s leaves over.
struct PhaseTimes {
  double total_s = 0.0;
  double compress_s = 0.0;  // compression and decompression, including hook polling
  double comm_s = 0.0;      // waiting on the transport
  double reduce_s = 0.0;    // elementwise reduction
  double other_s() const noexcept;
};

// Per-rank counts for one collective call.
struct OpCounters {
  std::uint64_t compress_ops = 0;
  std::uint64_t decompress_ops = 0;
  std::uint64_t rounds = 0;
  // Compress/decompress pairs the data went through on its way to this rank
  // (broadcast).
  std::uint64_t path_codec_pairs = 0;
  // Data-phase payload bytes, excluding size/metadata exchanges and indexes.
  std::uint64_t payload_bytes_sent = 0;
  std::uint64_t payload_bytes_received = 0;
  // Transport counter deltas over the whole call.
  TransportCounters transport;
  // Absolute bound used for every compression in the call (0 for Plain).
  float eb_abs = 0.0f;
  PhaseTimes times;
};

struct CollectiveResult {
  std::vector<float> values;
  OpCounters counters;
};

// Ring allgather; the result is rank-major, N * local.size() values.
CollectiveResult z_allgather(Communicator& comm, std::span<const float> local, const CollectiveConfig& cfg);
CollectiveResult cprp2p_allgather(Communicator& comm, std::span<const float> local, const CollectiveConfig& cfg);
CollectiveResult plain_allgather(Communicator& comm, std::span<const float> local);

// Binomial broadcast. `data` is read only at the root.
CollectiveResult z_bcast(Communicator& comm, int root, std::span<const float> data, const CollectiveConfig& cfg);
CollectiveResult cprp2p_bcast(Communicator& comm, int root, std::span<const float> data, const CollectiveConfig& cfg);
CollectiveResult plain_bcast(Communicator& comm, int root, std::span<const float> data);

// Binomial scatter; the root's data length must be divisible by N. Each rank
// receives its slice.
CollectiveResult z_scatter(Communicator& comm, int root, std::span<const float> data, const CollectiveConfig& cfg);
CollectiveResult plain_scatter(Communicator& comm, int root, std::span<const float> data);

// Ring reduce-scatter; local.size() must be divisible by N. Rank r receives
// reduced block r.
CollectiveResult z_reduce_scatter(Communicator& comm, std::span<const float> local, ReduceKind kind,
                                  const CollectiveConfig& cfg);
CollectiveResult cprp2p_reduce_scatter(Communicator& comm, std::span<const float> local, ReduceKind kind,
                                       const CollectiveConfig& cfg);
CollectiveResult plain_reduce_scatter(Communicator& comm, std::span<const float> local, ReduceKind kind);

// Reduce-scatter followed by allgather of the reduced blocks.
CollectiveResult z_allreduce(Communicator& comm, std::span<const float> local, ReduceKind kind,
                             const CollectiveConfig& cfg);
CollectiveResult cprp2p_allreduce(Communicator& comm, std::span<const float> local, ReduceKind kind,
                                  const CollectiveConfig& cfg);
CollectiveResult plain_allreduce(Communicator& comm, std::span<const float> local, ReduceKind kind);

// Variant dispatch, used by the benchmark harness. Plain ignores `cfg`.
CollectiveResult allgather(Variant v, Communicator& comm, std::span<const float> local, const CollectiveConfig& cfg);
CollectiveResult bcast(Variant v, Communicator& comm, int root, std::span<const float> data, const CollectiveConfig& cfg);
CollectiveResult allreduce(Variant v, Communicator& comm, std::span<const float> local, ReduceKind kind,
                           const CollectiveConfig& cfg);

// Tree depth of the binomial schedule, ceil(log2 N).
int binomial_depth(int world_size) noexcept;

}  // namespace zccl
