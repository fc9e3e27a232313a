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

// Error-bounded lossy codec for float32 fields.
//
// The field is split into thread-blocks that are encoded independently: each
// thread-block stores its first quantization index as a 4-byte outlier and
// the remaining values as 1D Lorenzo deltas grouped into micro blocks. Every
// micro block is written as a one-byte code length L followed, when L > 0, by
// a sign bitmap and L-bit magnitudes. A micro block with L == 0 is a constant
// block and costs one byte.
//
// Frame layout (all integers little-endian):
//   "ZCL1" | version u8 | eb_abs f32 | element_count u64 |
//   thread_block_len u32 | micro_block_len u32 | thread-block payloads...

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zccl/bytes.hpp"
#include "zccl/field.hpp"

namespace zccl {

struct CodecParams {
  std::uint32_t thread_block_len = 1024;
  std::uint32_t micro_block_len = 32;
  unsigned parallelism = 1;

  void validate() const;
};

struct FrameHeader {
  static constexpr std::uint8_t kMagic[4] = {'Z', 'C', 'L', '1'};
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kSize = 25;

  float eb_abs = 0.0f;
  std::uint64_t element_count = 0;
  std::uint32_t thread_block_len = 0;
  std::uint32_t micro_block_len = 0;

  void write(Bytes& out) const;
  // Validates magic, version and field domains; throws FormatError.
  static FrameHeader parse(ByteView bytes);
};

struct CompressedFrame {
  Bytes bytes;

  FrameHeader header() const { return FrameHeader::parse(bytes); }
  std::size_t size() const noexcept { return bytes.size(); }
};

struct CodecStats {
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  double ratio = 0.0;
  double bit_rate = 0.0;
  double constant_block_fraction = 0.0;
  double compress_seconds = 0.0;
  double decompress_seconds = 0.0;
};

struct Compressed {
  CompressedFrame frame;
  CodecStats stats;
};

// Quantized thread-block: q_0 plus the deltas q_i - q_{i-1}, i >= 1.
struct QuantizedBlock {
  std::int32_t outlier = 0;
  std::vector<std::int64_t> deltas;
};

// Quantization index of x on the grid of step 2*eb, such that the decoder's
// reconstruction lies within eb of x. Throws OverflowError when the index
// leaves int32, and Error when no grid point within eb is representable
// (eb near float resolution of x).
std::int32_t quantize_value(float x, float eb_abs);

// The decoder's reconstruction of index q.
inline float reconstruct_value(std::int64_t q, float eb_abs) {
  return static_cast<float>(2.0 * static_cast<double>(eb_abs) * static_cast<double>(q));
}

QuantizedBlock fused_quantize_lorenzo(std::span<const float> block, float eb_abs);

// Appends one micro block. `deltas` may be shorter than block_len; missing
// entries are zero.
void encode_micro_block(std::span<const std::int64_t> deltas, std::size_t block_len, Bytes& out);
Bytes encode_micro_block(std::span<const std::int64_t> deltas, std::size_t block_len);

// Decodes one micro block starting at `pos` into out[0..block_len), advancing
// pos. Throws FormatError on truncation or an invalid code length.
void decode_micro_block(ByteView in, std::size_t& pos, std::size_t block_len,
                        std::span<std::int64_t> out);

// Encoded size of a micro block with code length L.
constexpr std::size_t micro_block_bytes(unsigned code_len, std::size_t block_len) {
  return code_len == 0 ? 1 : 1 + (block_len + 7) / 8 + (block_len * code_len + 7) / 8;
}

// Every reconstruction lies within eb_abs of its input. The header records
// the quantization grid, which is eb_abs unless some value sits on a grid
// midpoint whose two neighbours both round past eb_abs in float; the frame is
// then re-encoded on a grid one ulp of the data magnitude finer.
Compressed compress(std::span<const float> values, float eb_abs, const CodecParams& params = {});
Compressed compress(const FloatField& field, const ErrorBoundSpec& spec,
                    const CodecParams& params = {});

// Throws FormatError (with byte offset) on any malformed input.
std::vector<float> decompress(ByteView frame, unsigned parallelism = 1);

// Ratio, bit rate and constant-block fraction of an existing frame.
CodecStats compression_metrics(ByteView frame);

}  // namespace zccl
