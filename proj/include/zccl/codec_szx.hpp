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

// Constant-block baseline codec.
//
// Values are cut into fixed blocks (128 by default). A block whose values
// all lie within eb of its midrange mu = (max + min) / 2 is a constant block
// stored as flag 0 + mu. Otherwise the block is stored as flag 1 + mu + the
// offsets round((x - mu) / (2 eb)) in the micro-block bit layout of
// codec_core (width byte, sign bitmap, packed magnitudes).
//
// Frame layout: "ZSX1" | eb_abs f32 | element_count u64 | block_len u32 | blocks...

#include <cstdint>
#include <span>
#include <vector>

#include "zccl/codec_core.hpp"

namespace zccl {

struct SzxHeader {
  static constexpr std::uint8_t kMagic[4] = {'Z', 'S', 'X', '1'};
  static constexpr std::size_t kSize = 20;
  static constexpr std::uint32_t kDefaultBlockLen = 128;

  float eb_abs = 0.0f;
  std::uint64_t element_count = 0;
  std::uint32_t block_len = kDefaultBlockLen;

  void write(Bytes& out) const;
  static SzxHeader parse(ByteView bytes);
};

struct SzxFrame {
  Bytes bytes;
};

struct SzxCompressed {
  SzxFrame frame;
  CodecStats stats;  // constant_block_fraction counts whole blocks
};

// Same bound and grid fallback as compress().
SzxCompressed compress_szx(std::span<const float> values, float eb_abs,
                           std::uint32_t block_len = SzxHeader::kDefaultBlockLen);
SzxCompressed compress_szx(const FloatField& field, const ErrorBoundSpec& spec,
                           std::uint32_t block_len = SzxHeader::kDefaultBlockLen);

std::vector<float> decompress_szx(ByteView frame);

}  // namespace zccl
