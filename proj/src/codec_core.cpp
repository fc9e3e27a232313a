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

#include "zccl/codec_core.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "grid.hpp"
#include "parallel.hpp"
#include "zccl/error.hpp"

namespace zccl {
namespace {

constexpr double kIndexLimit = static_cast<double>(std::numeric_limits<std::int32_t>::max());

inline bool reconstructs_within(std::int64_t q, float x, float grid, float limit) {
  double err = std::fabs(static_cast<double>(reconstruct_value(q, grid)) - static_cast<double>(x));
  return err <= static_cast<double>(limit);
}

// Quantizes x on the grid of step 2*grid, accepting a reconstruction within
// `limit` of x.
inline std::int32_t quantize_checked(float x, float grid, float limit) {
  double scaled = static_cast<double>(x) / (2.0 * static_cast<double>(grid));
  double r = std::round(scaled);
  if (!(std::fabs(r) <= kIndexLimit)) {
    throw OverflowError("quantization index of " + std::to_string(x) + " at bound " +
                        std::to_string(grid) + " exceeds int32");
  }
  auto q = static_cast<std::int64_t>(r);
  if (reconstructs_within(q, x, grid, limit)) [[likely]] {
    return static_cast<std::int32_t>(q);
  }
  // Float rounding of the reconstruction pushed it past the bound; the
  // neighbouring grid point on the other side of x may still fit.
  std::int64_t step = static_cast<double>(reconstruct_value(q, grid)) < static_cast<double>(x) ? 1 : -1;
  for (std::int64_t alt : {q + step, q - step}) {
    if (std::fabs(static_cast<double>(alt)) <= kIndexLimit && reconstructs_within(alt, x, grid, limit)) {
      return static_cast<std::int32_t>(alt);
    }
  }
  throw detail::GridMiss(x, limit);
}

inline unsigned code_length(std::uint64_t max_magnitude) {
  return static_cast<unsigned>(std::bit_width(max_magnitude));
}

// Returns the number of constant micro blocks written.
std::size_t encode_thread_block(std::span<const float> block, float grid, float limit,
                                std::size_t micro_len, Bytes& out, std::vector<std::int64_t>& scratch) {
  std::int32_t prev = quantize_checked(block[0], grid, limit);
  put_u32(out, static_cast<std::uint32_t>(prev));
  std::size_t constant = 0;
  scratch.assign(micro_len, 0);
  for (std::size_t i = 1; i < block.size(); i += micro_len) {
    std::size_t n = std::min(micro_len, block.size() - i);
    for (std::size_t j = 0; j < n; ++j) {
      std::int32_t q = quantize_checked(block[i + j], grid, limit);
      scratch[j] = static_cast<std::int64_t>(q) - prev;
      prev = q;
    }
    std::size_t before = out.size();
    encode_micro_block(std::span(scratch.data(), n), micro_len, out);
    if (out.size() - before == 1) ++constant;
  }
  return constant;
}

std::size_t micro_blocks_in(std::size_t thread_block_values, std::size_t micro_len) {
  return thread_block_values <= 1 ? 0 : (thread_block_values - 1 + micro_len - 1) / micro_len;
}

struct BodyLayout {
  std::vector<std::size_t> block_offsets;  // start of each thread-block payload
  std::size_t micro_blocks = 0;
  std::size_t constant_micro_blocks = 0;
};

// Walks the body once using only the code-length bytes.
BodyLayout scan_body(ByteView frame, const FrameHeader& h) {
  BodyLayout layout;
  std::size_t count = h.element_count;
  std::size_t tb = h.thread_block_len;
  std::size_t num_blocks = (count + tb - 1) / tb;
  layout.block_offsets.reserve(num_blocks);
  std::size_t pos = FrameHeader::kSize;
  for (std::size_t b = 0; b < num_blocks; ++b) {
    layout.block_offsets.push_back(pos);
    if (frame.size() - pos < 4) throw FormatError("truncated thread-block outlier", pos);
    pos += 4;
    std::size_t values = std::min(tb, count - b * tb);
    std::size_t micro = micro_blocks_in(values, h.micro_block_len);
    for (std::size_t m = 0; m < micro; ++m) {
      if (pos >= frame.size()) throw FormatError("truncated micro block", pos);
      unsigned len = frame[pos];
      if (len > 32) throw FormatError("invalid code length " + std::to_string(len), pos);
      std::size_t need = micro_block_bytes(len, h.micro_block_len);
      if (frame.size() - pos < need) throw FormatError("truncated micro block", pos);
      if (len == 0) ++layout.constant_micro_blocks;
      pos += need;
    }
    layout.micro_blocks += micro;
  }
  if (pos != frame.size()) throw FormatError("trailing bytes after last thread-block", pos);
  return layout;
}

void decode_thread_block(ByteView frame, std::size_t pos, const FrameHeader& h,
                         std::span<float> out, std::vector<std::int64_t>& scratch) {
  const float eb = h.eb_abs;
  const std::size_t micro_len = h.micro_block_len;
  std::int64_t q = static_cast<std::int32_t>(get_u32(frame.data() + pos));
  pos += 4;
  out[0] = reconstruct_value(q, eb);
  scratch.resize(micro_len);
  for (std::size_t i = 1; i < out.size(); i += micro_len) {
    std::size_t n = std::min(micro_len, out.size() - i);
    std::size_t at = pos;
    decode_micro_block(frame, pos, micro_len, scratch);
    for (std::size_t j = 0; j < n; ++j) {
      q += scratch[j];
      if (q > std::numeric_limits<std::int32_t>::max() ||
          q < std::numeric_limits<std::int32_t>::min()) {
        throw FormatError("quantization index leaves int32", at);
      }
      out[i + j] = reconstruct_value(q, eb);
    }
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void CodecParams::validate() const {
  if (thread_block_len == 0 || micro_block_len == 0) {
    throw ParameterError("block lengths must be positive");
  }
  if (thread_block_len % micro_block_len != 0) {
    throw ParameterError("micro_block_len must divide thread_block_len");
  }
  if (parallelism == 0) throw ParameterError("parallelism must be at least 1");
}

void FrameHeader::write(Bytes& out) const {
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  put_f32(out, eb_abs);
  put_u64(out, element_count);
  put_u32(out, thread_block_len);
  put_u32(out, micro_block_len);
}

FrameHeader FrameHeader::parse(ByteView bytes) {
  if (bytes.size() < kSize) throw FormatError("frame shorter than header", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad frame magic", 0);
  if (bytes[4] != kVersion) throw FormatError("unsupported frame version", 4);
  FrameHeader h;
  h.eb_abs = get_f32(bytes.data() + 5);
  h.element_count = get_u64(bytes.data() + 9);
  h.thread_block_len = get_u32(bytes.data() + 17);
  h.micro_block_len = get_u32(bytes.data() + 21);
  if (!std::isfinite(h.eb_abs) || !(h.eb_abs > 0.0f)) throw FormatError("invalid error bound", 5);
  if (h.element_count == 0) throw FormatError("empty frame", 9);
  if (h.thread_block_len == 0 || h.micro_block_len == 0 ||
      h.thread_block_len % h.micro_block_len != 0) {
    throw FormatError("invalid block lengths", 17);
  }
  return h;
}

std::int32_t quantize_value(float x, float eb_abs) { return quantize_checked(x, eb_abs, eb_abs); }

QuantizedBlock fused_quantize_lorenzo(std::span<const float> block, float eb_abs) {
  if (!(eb_abs > 0.0f)) throw ParameterError("error bound must be positive");
  if (block.empty()) throw ParameterError("empty block");
  QuantizedBlock out;
  std::int32_t prev = quantize_checked(block[0], eb_abs, eb_abs);
  out.outlier = prev;
  out.deltas.reserve(block.size() - 1);
  for (std::size_t i = 1; i < block.size(); ++i) {
    std::int32_t q = quantize_checked(block[i], eb_abs, eb_abs);
    out.deltas.push_back(static_cast<std::int64_t>(q) - prev);
    prev = q;
  }
  return out;
}

void encode_micro_block(std::span<const std::int64_t> deltas, std::size_t block_len, Bytes& out) {
  std::uint64_t max_mag = 0;
  for (std::int64_t d : deltas) max_mag = std::max(max_mag, static_cast<std::uint64_t>(d < 0 ? -d : d));
  unsigned len = code_length(max_mag);
  out.push_back(static_cast<std::uint8_t>(len));
  if (len == 0) return;

  std::size_t sign_bytes = (block_len + 7) / 8;
  std::size_t base = out.size();
  out.resize(base + sign_bytes, 0);
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    if (deltas[j] < 0) out[base + j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
  }

  std::size_t mag_bytes = (block_len * len + 7) / 8;
  base = out.size();
  out.resize(base + mag_bytes, 0);
  std::uint8_t* dst = out.data() + base;
  std::uint64_t acc = 0;
  unsigned bits = 0;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    std::uint64_t mag = static_cast<std::uint64_t>(deltas[j] < 0 ? -deltas[j] : deltas[j]);
    acc |= mag << bits;
    bits += len;
    while (bits >= 8) {
      *dst++ = static_cast<std::uint8_t>(acc);
      acc >>= 8;
      bits -= 8;
    }
  }
  // Padding entries are zero and already present in the zero-filled tail.
  if (bits > 0) *dst = static_cast<std::uint8_t>(acc);
}

Bytes encode_micro_block(std::span<const std::int64_t> deltas, std::size_t block_len) {
  Bytes out;
  encode_micro_block(deltas, block_len, out);
  return out;
}

void decode_micro_block(ByteView in, std::size_t& pos, std::size_t block_len,
                        std::span<std::int64_t> out) {
  if (pos >= in.size()) throw FormatError("truncated micro block", pos);
  unsigned len = in[pos];
  if (len > 32) throw FormatError("invalid code length " + std::to_string(len), pos);
  std::size_t need = micro_block_bytes(len, block_len);
  if (in.size() - pos < need) throw FormatError("truncated micro block", pos);
  if (len == 0) {
    std::fill(out.begin(), out.begin() + block_len, 0);
    pos += 1;
    return;
  }
  const std::uint8_t* signs = in.data() + pos + 1;
  const std::uint8_t* src = signs + (block_len + 7) / 8;
  const std::uint64_t mask = (std::uint64_t{1} << len) - 1;
  std::uint64_t acc = 0;
  unsigned bits = 0;
  for (std::size_t j = 0; j < block_len; ++j) {
    while (bits < len) {
      acc |= static_cast<std::uint64_t>(*src++) << bits;
      bits += 8;
    }
    auto mag = static_cast<std::int64_t>(acc & mask);
    acc >>= len;
    bits -= len;
    out[j] = (signs[j / 8] >> (j % 8)) & 1u ? -mag : mag;
  }
  pos += need;
}

namespace {

Compressed encode_frame(std::span<const float> values, float grid, float limit, const CodecParams& params,
                        std::chrono::steady_clock::time_point t0) {

  const std::size_t tb = params.thread_block_len;
  const std::size_t num_blocks = (values.size() + tb - 1) / tb;
  unsigned workers = params.parallelism;

  std::vector<Bytes> parts(std::min<std::size_t>(workers, num_blocks));
  std::vector<std::size_t> constant(parts.size(), 0);
  detail::parallel_ranges(num_blocks, static_cast<unsigned>(parts.size()),
                          [&](unsigned w, std::size_t begin, std::size_t end) {
    Bytes& out = parts[w];
    out.reserve((end - begin) * (4 + tb / params.micro_block_len));
    std::vector<std::int64_t> scratch;
    for (std::size_t b = begin; b < end; ++b) {
      std::size_t first = b * tb;
      std::size_t n = std::min(tb, values.size() - first);
      constant[w] += encode_thread_block(values.subspan(first, n), grid, limit, params.micro_block_len,
                                         out, scratch);
    }
  });

  Compressed result;
  Bytes& frame = result.frame.bytes;
  std::size_t body = 0;
  for (const auto& p : parts) body += p.size();
  frame.reserve(FrameHeader::kSize + body);
  FrameHeader{grid, values.size(), params.thread_block_len, params.micro_block_len}.write(frame);
  for (const auto& p : parts) frame.insert(frame.end(), p.begin(), p.end());

  std::size_t micro_total = 0;
  for (std::size_t b = 0; b < num_blocks; ++b) {
    micro_total += micro_blocks_in(std::min(tb, values.size() - b * tb), params.micro_block_len);
  }
  std::size_t constant_total = 0;
  for (auto c : constant) constant_total += c;

  CodecStats& s = result.stats;
  s.original_bytes = values.size() * sizeof(float);
  s.compressed_bytes = frame.size();
  s.ratio = static_cast<double>(s.original_bytes) / static_cast<double>(s.compressed_bytes);
  s.bit_rate = 32.0 / s.ratio;
  s.constant_block_fraction =
      micro_total == 0 ? 1.0 : static_cast<double>(constant_total) / static_cast<double>(micro_total);
  s.compress_seconds = seconds_since(t0);
  return result;
}

}  // namespace

Compressed compress(std::span<const float> values, float eb_abs, const CodecParams& params) {
  params.validate();
  if (values.empty()) throw ParameterError("cannot compress an empty field");
  if (!std::isfinite(eb_abs) || !(eb_abs > 0.0f)) throw ParameterError("error bound must be positive");
  auto t0 = std::chrono::steady_clock::now();
  return detail::encode_on_ladder(values, eb_abs, [&](float grid) {
    return encode_frame(values, grid, eb_abs, params, t0);
  });
}

namespace detail {

Bytes encode_zlite_on_grid(std::span<const float> values, float grid, float limit,
                           const CodecParams& params) {
  return encode_frame(values, grid, limit, params, std::chrono::steady_clock::now()).frame.bytes;
}

}  // namespace detail

Compressed compress(const FloatField& field, const ErrorBoundSpec& spec, const CodecParams& params) {
  if (field.empty()) throw ParameterError("cannot compress an empty field");
  return compress(field.values(), resolve_error_bound(spec, field.values()), params);
}

std::vector<float> decompress(ByteView frame, unsigned parallelism) {
  FrameHeader h = FrameHeader::parse(frame);
  // Each thread-block needs at least 4 bytes; reject absurd counts before allocating.
  if (h.element_count > (frame.size() - FrameHeader::kSize) / 4 * std::uint64_t{h.thread_block_len}) {
    throw FormatError("element count inconsistent with frame length", 9);
  }
  BodyLayout layout = scan_body(frame, h);
  std::vector<float> out(h.element_count);
  const std::size_t tb = h.thread_block_len;
  detail::parallel_ranges(layout.block_offsets.size(), std::max(1u, parallelism),
                          [&](unsigned, std::size_t begin, std::size_t end) {
    std::vector<std::int64_t> scratch;
    for (std::size_t b = begin; b < end; ++b) {
      std::size_t first = b * tb;
      std::size_t n = std::min<std::size_t>(tb, out.size() - first);
      decode_thread_block(frame, layout.block_offsets[b], h, std::span(out).subspan(first, n),
                          scratch);
    }
  });
  return out;
}

CodecStats compression_metrics(ByteView frame) {
  FrameHeader h = FrameHeader::parse(frame);
  BodyLayout layout = scan_body(frame, h);
  CodecStats s;
  s.original_bytes = h.element_count * sizeof(float);
  s.compressed_bytes = frame.size();
  s.ratio = static_cast<double>(s.original_bytes) / static_cast<double>(s.compressed_bytes);
  s.bit_rate = 32.0 / s.ratio;
  s.constant_block_fraction =
      layout.micro_blocks == 0
          ? 1.0
          : static_cast<double>(layout.constant_micro_blocks) / static_cast<double>(layout.micro_blocks);
  return s;
}

}  // namespace zccl
