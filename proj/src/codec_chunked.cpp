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

#include "zccl/codec_chunked.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "grid.hpp"
#include "parallel.hpp"
#include "zccl/codec_szx.hpp"
#include "zccl/error.hpp"

namespace zccl {
namespace {

[[noreturn]] void rethrow_for_chunk(std::size_t chunk, std::size_t base_offset) {
  std::string where = "chunk " + std::to_string(chunk) + ": ";
  try {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(where + e.what(), base_offset + e.offset());
  } catch (const OverflowError& e) {
    throw OverflowError(where + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(where + e.what());
  } catch (const Error& e) {
    throw Error(where + e.what());
  }
}

}  // namespace

const char* to_string(CodecKind kind) noexcept {
  return kind == CodecKind::ZLite ? "zlite" : "szx";
}

Bytes compress_frame(CodecKind kind, std::span<const float> values, float eb_abs,
                     const CodecParams& params) {
  if (kind == CodecKind::Szx) return compress_szx(values, eb_abs).frame.bytes;
  return compress(values, eb_abs, params).frame.bytes;
}

std::vector<float> decompress_frame(ByteView frame, unsigned parallelism) {
  if (frame.size() >= 4 && std::memcmp(frame.data(), SzxHeader::kMagic, 4) == 0) {
    return decompress_szx(frame);
  }
  return decompress(frame, parallelism);
}

ChunkedFrame compress_chunked(std::span<const float> values, float eb_abs,
                              const CodecParams& params, std::size_t chunk_len,
                              const ProgressHook& hook, CodecKind kind) {
  params.validate();
  if (values.empty()) throw ParameterError("cannot compress an empty field");
  if (chunk_len == 0) throw ParameterError("chunk length must be positive");
  if (kind == CodecKind::ZLite && chunk_len % params.thread_block_len != 0) {
    throw ParameterError("thread_block_len must divide chunk_len");
  }
  const std::size_t chunks = (values.size() + chunk_len - 1) / chunk_len;
  if (chunks > UINT32_MAX) throw ParameterError("too many chunks");

  if (!std::isfinite(eb_abs) || !(eb_abs > 0.0f)) throw ParameterError("error bound must be positive");

  // Every chunk shares one grid, stepping down the whole-field ladder once
  // any chunk misses. Each chunk is compressed serially; parallelism goes
  // across chunks only when there is no hook to interleave.
  CodecParams inner = params;
  inner.parallelism = 1;
  std::vector<Bytes> parts(chunks);
  auto encode = [&](std::size_t c, float grid) {
    std::size_t first = c * chunk_len;
    auto chunk = values.subspan(first, std::min(chunk_len, values.size() - first));
    try {
      parts[c] = kind == CodecKind::Szx
                     ? detail::encode_szx_on_grid(chunk, grid, eb_abs, SzxHeader::kDefaultBlockLen)
                     : detail::encode_zlite_on_grid(chunk, grid, eb_abs, inner);
    } catch (const detail::GridMiss&) {
      throw;
    } catch (const Error&) {
      rethrow_for_chunk(c, 0);
    }
  };

  if (!hook) {
    detail::encode_on_ladder(values, eb_abs, [&](float grid) {
      detail::parallel_ranges(chunks, params.parallelism,
                              [&](unsigned, std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) encode(c, grid);
      });
      return 0;
    });
  } else {
    // A miss re-encodes the finished chunks on the next grid without
    // repeating their hook calls.
    detail::GridLadder ladder(values, eb_abs);
    float grid = ladder.next();
    for (std::size_t c = 0; c < chunks; ++c) {
      try {
        encode(c, grid);
      } catch (const detail::GridMiss&) {
        for (;;) {
          grid = ladder.next();
          if (grid <= 0.0f) throw;
          try {
            for (std::size_t done = 0; done <= c; ++done) encode(done, grid);
            break;
          } catch (const detail::GridMiss&) {
          }
        }
      }
      if (c + 1 < chunks && !hook()) {
        throw AbortedError("compression aborted by progress hook after chunk " + std::to_string(c));
      }
    }
  }

  ChunkedFrame frame;
  std::size_t payload = 0;
  for (const auto& p : parts) payload += p.size();
  frame.bytes.reserve(4 + 4 * chunks + payload);
  put_u32(frame.bytes, static_cast<std::uint32_t>(chunks));
  for (const auto& p : parts) put_u32(frame.bytes, static_cast<std::uint32_t>(p.size()));
  for (const auto& p : parts) frame.bytes.insert(frame.bytes.end(), p.begin(), p.end());
  return frame;
}

ChunkedFrame compress_chunked(const FloatField& field, const ErrorBoundSpec& spec,
                              const CodecParams& params, std::size_t chunk_len,
                              const ProgressHook& hook, CodecKind kind) {
  if (field.empty()) throw ParameterError("cannot compress an empty field");
  return compress_chunked(field.values(), resolve_error_bound(spec, field.values()), params,
                          chunk_len, hook, kind);
}

std::vector<ChunkSpan> chunk_offsets(ByteView frame) {
  if (frame.size() < 4) throw FormatError("chunked frame shorter than chunk count", frame.size());
  std::uint64_t count = get_u32(frame.data());
  std::uint64_t header = 4 + 4 * count;
  if (frame.size() < header) throw FormatError("truncated chunk index", frame.size());
  std::vector<ChunkSpan> spans;
  spans.reserve(count);
  std::size_t offset = header;
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t len = get_u32(frame.data() + 4 + 4 * c);
    if (len > frame.size() - offset) {
      throw FormatError("chunk " + std::to_string(c) + " extends past end of payload", 4 + 4 * c);
    }
    spans.push_back({offset, len});
    offset += len;
  }
  if (offset != frame.size()) {
    throw FormatError("chunk index sums to " + std::to_string(offset - header) +
                          " bytes but payload holds " + std::to_string(frame.size() - header),
                      offset);
  }
  return spans;
}

std::vector<float> decompress_chunked(ByteView frame, const ProgressHook& hook) {
  std::vector<ChunkSpan> spans = chunk_offsets(frame);
  if (spans.empty()) throw FormatError("chunked frame holds no chunks", 0);
  std::vector<float> out;
  std::size_t chunk_len = 0;
  for (std::size_t c = 0; c < spans.size(); ++c) {
    std::vector<float> part;
    try {
      part = decompress_frame(frame.subspan(spans[c].offset, spans[c].length));
    } catch (const Error&) {
      rethrow_for_chunk(c, spans[c].offset);
    }
    if (c == 0) {
      chunk_len = part.size();
      out.reserve(chunk_len * spans.size());
    } else if (part.size() > chunk_len || (c + 1 < spans.size() && part.size() != chunk_len)) {
      throw FormatError("chunk " + std::to_string(c) + " holds " + std::to_string(part.size()) +
                            " values, expected " + std::to_string(chunk_len),
                        spans[c].offset);
    }
    out.insert(out.end(), part.begin(), part.end());
    if (hook && c + 1 < spans.size() && !hook()) {
      throw AbortedError("decompression aborted by progress hook after chunk " + std::to_string(c));
    }
  }
  return out;
}

}  // namespace zccl
