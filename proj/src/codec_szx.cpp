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

#include "zccl/codec_szx.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "grid.hpp"
#include "zccl/error.hpp"

namespace zccl {
namespace {

inline float offset_value(float mu, std::int64_t q, float eb) {
  return static_cast<float>(static_cast<double>(mu) +
                            2.0 * static_cast<double>(eb) * static_cast<double>(q));
}

inline bool within(float recon, float x, float limit) {
  return std::fabs(static_cast<double>(recon) - static_cast<double>(x)) <= static_cast<double>(limit);
}

std::int64_t quantize_offset(float x, float mu, float grid, float limit) {
  double scaled = (static_cast<double>(x) - static_cast<double>(mu)) / (2.0 * static_cast<double>(grid));
  double r = std::round(scaled);
  if (!(std::fabs(r) <= static_cast<double>(std::numeric_limits<std::int32_t>::max()))) {
    throw OverflowError("block offset of " + std::to_string(x) + " exceeds int32 at bound " +
                        std::to_string(grid));
  }
  auto q = static_cast<std::int64_t>(r);
  if (within(offset_value(mu, q, grid), x, limit)) return q;
  std::int64_t step = offset_value(mu, q, grid) < x ? 1 : -1;
  for (std::int64_t alt : {q + step, q - step}) {
    if (within(offset_value(mu, alt, grid), x, limit)) return alt;
  }
  throw detail::GridMiss(x, limit);
}

SzxCompressed encode_szx(std::span<const float> values, float grid, float eb, std::uint32_t block_len,
                         std::chrono::steady_clock::time_point t0) {
  SzxCompressed result;
  Bytes& out = result.frame.bytes;
  out.reserve(SzxHeader::kSize + values.size());
  SzxHeader{grid, values.size(), block_len}.write(out);

  std::vector<std::int64_t> offsets(block_len);
  std::size_t blocks = 0, constant = 0;
  for (std::size_t first = 0; first < values.size(); first += block_len, ++blocks) {
    auto block = values.subspan(first, std::min<std::size_t>(block_len, values.size() - first));
    auto [lo, hi] = std::minmax_element(block.begin(), block.end());
    float mu = static_cast<float>((static_cast<double>(*lo) + static_cast<double>(*hi)) / 2.0);
    bool is_constant = within(mu, *lo, eb) && within(mu, *hi, eb);
    out.push_back(is_constant ? 0 : 1);
    put_f32(out, mu);
    if (is_constant) {
      ++constant;
      continue;
    }
    for (std::size_t j = 0; j < block.size(); ++j) offsets[j] = quantize_offset(block[j], mu, grid, eb);
    encode_micro_block(std::span(offsets.data(), block.size()), block.size(), out);
  }

  CodecStats& s = result.stats;
  s.original_bytes = values.size() * sizeof(float);
  s.compressed_bytes = out.size();
  s.ratio = static_cast<double>(s.original_bytes) / static_cast<double>(s.compressed_bytes);
  s.bit_rate = 32.0 / s.ratio;
  s.constant_block_fraction = static_cast<double>(constant) / static_cast<double>(blocks);
  s.compress_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace

void SzxHeader::write(Bytes& out) const {
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_f32(out, eb_abs);
  put_u64(out, element_count);
  put_u32(out, block_len);
}

SzxHeader SzxHeader::parse(ByteView bytes) {
  if (bytes.size() < kSize) throw FormatError("frame shorter than header", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad frame magic", 0);
  SzxHeader h;
  h.eb_abs = get_f32(bytes.data() + 4);
  h.element_count = get_u64(bytes.data() + 8);
  h.block_len = get_u32(bytes.data() + 16);
  if (!std::isfinite(h.eb_abs) || !(h.eb_abs > 0.0f)) throw FormatError("invalid error bound", 4);
  if (h.element_count == 0) throw FormatError("empty frame", 8);
  if (h.block_len == 0) throw FormatError("invalid block length", 16);
  // Every block costs at least 5 bytes.
  std::uint64_t blocks = (h.element_count + h.block_len - 1) / h.block_len;
  if (blocks > (bytes.size() - kSize) / 5) throw FormatError("element count inconsistent with frame length", 8);
  return h;
}

SzxCompressed compress_szx(std::span<const float> values, float eb, std::uint32_t block_len) {
  if (values.empty()) throw ParameterError("cannot compress an empty field");
  if (!std::isfinite(eb) || !(eb > 0.0f)) throw ParameterError("error bound must be positive");
  if (block_len == 0) throw ParameterError("block length must be positive");
  auto t0 = std::chrono::steady_clock::now();
  return detail::encode_on_ladder(values, eb, [&](float grid) {
    return encode_szx(values, grid, eb, block_len, t0);
  });
}

namespace detail {

Bytes encode_szx_on_grid(std::span<const float> values, float grid, float limit,
                         std::uint32_t block_len) {
  return encode_szx(values, grid, limit, block_len, std::chrono::steady_clock::now()).frame.bytes;
}

}  // namespace detail

SzxCompressed compress_szx(const FloatField& field, const ErrorBoundSpec& spec, std::uint32_t block_len) {
  if (field.empty()) throw ParameterError("cannot compress an empty field");
  return compress_szx(field.values(), resolve_error_bound(spec, field.values()), block_len);
}

std::vector<float> decompress_szx(ByteView frame) {
  SzxHeader h = SzxHeader::parse(frame);
  std::vector<float> out(h.element_count);
  std::vector<std::int64_t> offsets(h.block_len);
  std::size_t pos = SzxHeader::kSize;
  for (std::size_t first = 0; first < out.size(); first += h.block_len) {
    std::size_t n = std::min<std::size_t>(h.block_len, out.size() - first);
    if (frame.size() - pos < 5) throw FormatError("truncated block", pos);
    std::uint8_t flag = frame[pos];
    if (flag > 1) throw FormatError("invalid block flag " + std::to_string(flag), pos);
    float mu = get_f32(frame.data() + pos + 1);
    pos += 5;
    if (flag == 0) {
      std::fill_n(out.begin() + first, n, mu);
      continue;
    }
    decode_micro_block(frame, pos, n, offsets);
    for (std::size_t j = 0; j < n; ++j) out[first + j] = offset_value(mu, offsets[j], h.eb_abs);
  }
  if (pos != frame.size()) throw FormatError("trailing bytes after last block", pos);
  return out;
}

}  // namespace zccl
