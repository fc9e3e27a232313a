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

// Pipelined codec: the field is compressed chunk by chunk into one buffer
// whose front holds the chunk count and a 4-byte size index, so the receiver
// can locate each chunk without scanning. A progress hook runs between
// chunks; collectives use it to poll outstanding transfers.
//
// Layout (little-endian): chunk_count u32 | size u32 x chunk_count | chunk frames

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "zccl/codec_core.hpp"

namespace zccl {

enum class CodecKind { ZLite, Szx };

const char* to_string(CodecKind kind) noexcept;

// Returns false to abort the running codec.
using ProgressHook = std::function<bool()>;

inline constexpr std::size_t kDefaultChunkLen = 5120;

struct ChunkedFrame {
  Bytes bytes;
};

struct ChunkSpan {
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const ChunkSpan&) const = default;
};

// Single-shot codec dispatch used by the chunked codec and the collectives.
Bytes compress_frame(CodecKind kind, std::span<const float> values, float eb_abs,
                     const CodecParams& params);
// Dispatches on the frame's magic.
std::vector<float> decompress_frame(ByteView frame, unsigned parallelism = 1);

// Throws ParameterError if thread_block_len does not divide chunk_len (ZLite),
// AbortedError if the hook returns false, and codec errors annotated with the
// chunk ordinal. A no-op hook lets chunks compress in parallel.
ChunkedFrame compress_chunked(std::span<const float> values, float eb_abs,
                              const CodecParams& params = {},
                              std::size_t chunk_len = kDefaultChunkLen,
                              const ProgressHook& hook = {}, CodecKind kind = CodecKind::ZLite);
ChunkedFrame compress_chunked(const FloatField& field, const ErrorBoundSpec& spec,
                              const CodecParams& params = {},
                              std::size_t chunk_len = kDefaultChunkLen,
                              const ProgressHook& hook = {}, CodecKind kind = CodecKind::ZLite);

std::vector<float> decompress_chunked(ByteView frame, const ProgressHook& hook = {});

// Byte offset and length of every chunk payload; validates the index.
std::vector<ChunkSpan> chunk_offsets(ByteView frame);

}  // namespace zccl
