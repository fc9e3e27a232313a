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

#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "zccl/codec_chunked.hpp"
#include "zccl/codec_szx.hpp"
#include "zccl/error.hpp"

namespace zccl {
namespace {

using testing::le32;
using testing::max_abs_error;
using testing::random_values;

TEST(Chunked, TwoFullChunksIndexLayout) {
  auto v = random_values(10240, 1, -1.0, 1.0);
  ChunkedFrame f = compress_chunked(v, 1e-3f);
  ASSERT_GE(f.bytes.size(), 12u);
  EXPECT_EQ(le32(f.bytes.data()), 2u);
  auto spans = chunk_offsets(f.bytes);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].offset, 12u);
  EXPECT_EQ(spans[0].length, le32(f.bytes.data() + 4));
  EXPECT_EQ(spans[1].offset, 12u + spans[0].length);
  EXPECT_EQ(spans[1].length, le32(f.bytes.data() + 8));
  EXPECT_EQ(spans[1].offset + spans[1].length, f.bytes.size());
}

TEST(Chunked, PartialLastChunk) {
  auto v = random_values(5121, 2, -1.0, 1.0);
  ChunkedFrame f = compress_chunked(v, 1e-3f);
  auto spans = chunk_offsets(f.bytes);
  ASSERT_EQ(spans.size(), 2u);
  ByteView second(f.bytes.data() + spans[1].offset, spans[1].length);
  EXPECT_EQ(FrameHeader::parse(second).element_count, 1u);
  EXPECT_EQ(FrameHeader::parse(ByteView(f.bytes.data() + spans[0].offset, spans[0].length)).element_count,
            5120u);
  auto out = decompress_chunked(f.bytes);
  ASSERT_EQ(out.size(), v.size());
  EXPECT_LE(max_abs_error(out, v), 1e-3);
}

TEST(Chunked, OffsetsArePrefixSums) {
  for (std::size_t n : {1u, 5120u, 5121u, 33333u, 100000u}) {
    auto v = random_values(n, n, -5.0, 5.0);
    ChunkedFrame f = compress_chunked(v, 1e-2f);
    auto spans = chunk_offsets(f.bytes);
    std::size_t count = (n + 5119) / 5120;
    ASSERT_EQ(spans.size(), count);
    std::size_t expect = 4 + 4 * count;
    for (std::size_t c = 0; c < count; ++c) {
      EXPECT_EQ(spans[c].offset, expect);
      expect += spans[c].length;
    }
    EXPECT_EQ(expect, f.bytes.size());
  }
}

TEST(Chunked, EquivalentToWholeFieldDecoding) {
  auto v = random_values(40000, 3, -20.0, 20.0);
  const float eb = 1e-2f;
  auto chunked = decompress_chunked(compress_chunked(v, eb).bytes);
  auto whole = decompress(compress(v, eb).frame.bytes);
  ASSERT_EQ(chunked.size(), whole.size());
  EXPECT_LE(max_abs_error(chunked, v), eb);
  EXPECT_LE(max_abs_error(whole, v), eb);
  // Chunk boundaries are multiples of the thread-block length, so each chunk
  // quantizes the same values the same way.
  EXPECT_EQ(chunked, whole);
}

TEST(Chunked, FallbackGridIsSharedAcrossChunks) {
  // Magnitude far above the bound forces the reduced grid somewhere.
  auto v = random_values(5120 * 8, 41, -100.0, 100.0);
  const float eb = 1e-4f;
  Compressed whole = compress(v, eb);
  ASSERT_LT(whole.frame.header().eb_abs, eb);
  for (bool with_hook : {false, true}) {
    int calls = 0;
    ProgressHook hook;
    if (with_hook) hook = [&] { return ++calls > 0; };
    ChunkedFrame f = compress_chunked(v, eb, {}, kDefaultChunkLen, hook);
    for (const auto& span : chunk_offsets(f.bytes)) {
      ByteView chunk = ByteView(f.bytes).subspan(span.offset, span.length);
      EXPECT_EQ(FrameHeader::parse(chunk).eb_abs, whole.frame.header().eb_abs);
    }
    EXPECT_EQ(calls, with_hook ? 7 : 0);
    auto out = decompress_chunked(f.bytes);
    EXPECT_EQ(out, decompress(whole.frame.bytes));
    EXPECT_LE(max_abs_error(out, v), eb);
  }
  ChunkedFrame s = compress_chunked(v, eb, {}, 5000, {}, CodecKind::Szx);
  SzxCompressed szx_whole = compress_szx(v, eb);
  for (const auto& span : chunk_offsets(s.bytes)) {
    EXPECT_EQ(SzxHeader::parse(ByteView(s.bytes).subspan(span.offset, span.length)).eb_abs,
              SzxHeader::parse(szx_whole.frame.bytes).eb_abs);
  }
  EXPECT_LE(max_abs_error(decompress_chunked(s.bytes), v), eb);
}

TEST(Chunked, HookIsCalledBetweenChunks) {
  auto v = random_values(5120 * 4, 4);
  int calls = 0;
  ChunkedFrame f = compress_chunked(v, 1e-2f, {}, kDefaultChunkLen, [&] {
    ++calls;
    return true;
  });
  EXPECT_EQ(calls, 3);
  calls = 0;
  decompress_chunked(f.bytes, [&] {
    ++calls;
    return true;
  });
  EXPECT_EQ(calls, 3);
}

TEST(Chunked, HookAbortStopsWork) {
  auto v = random_values(5120 * 4, 5);
  int calls = 0;
  EXPECT_THROW(compress_chunked(v, 1e-2f, {}, kDefaultChunkLen,
                                [&] { return ++calls < 2; }),
               AbortedError);
  EXPECT_EQ(calls, 2);
  ChunkedFrame f = compress_chunked(v, 1e-2f);
  EXPECT_THROW(decompress_chunked(f.bytes, [] { return false; }), AbortedError);
}

TEST(Chunked, HookDoesNotChangeOutput) {
  auto v = random_values(30000, 6);
  Bytes plain = compress_chunked(v, 1e-3f).bytes;
  Bytes hooked = compress_chunked(v, 1e-3f, {}, kDefaultChunkLen, [] { return true; }).bytes;
  EXPECT_EQ(plain, hooked);
  CodecParams par;
  par.parallelism = 4;
  EXPECT_EQ(plain, compress_chunked(v, 1e-3f, par).bytes);
}

TEST(Chunked, IndexMismatchIsFormatError) {
  auto v = random_values(10240, 7);
  Bytes f = compress_chunked(v, 1e-2f).bytes;
  Bytes grown = f;
  grown[4] += 1;
  EXPECT_THROW(chunk_offsets(grown), FormatError);
  EXPECT_THROW(decompress_chunked(grown), FormatError);
  Bytes shrunk = f;
  shrunk[4] -= 1;
  EXPECT_THROW(decompress_chunked(shrunk), FormatError);
  Bytes truncated(f.begin(), f.begin() + 6);
  EXPECT_THROW(chunk_offsets(truncated), FormatError);
  Bytes extra = f;
  extra.push_back(0);
  EXPECT_THROW(chunk_offsets(extra), FormatError);
}

TEST(Chunked, CorruptChunkReportsAbsoluteOffset) {
  auto v = random_values(10240, 8);
  Bytes f = compress_chunked(v, 1e-2f).bytes;
  auto spans = chunk_offsets(f);
  f[spans[1].offset] ^= 0xFF;
  try {
    decompress_chunked(f);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), spans[1].offset);
  }
}

TEST(Chunked, ParameterErrors) {
  EXPECT_THROW(compress_chunked(std::vector<float>{}, 1e-3f), ParameterError);
  auto v = random_values(100, 9);
  EXPECT_THROW(compress_chunked(v, 1e-3f, {}, 5000), ParameterError);
  EXPECT_THROW(compress_chunked(v, 1e-3f, {}, 0), ParameterError);
  EXPECT_THROW(compress_chunked(v, -1.0f), ParameterError);
}

TEST(Chunked, SzxChunks) {
  auto v = random_values(12000, 10, -1.0, 1.0);
  ChunkedFrame f = compress_chunked(v, 1e-3f, {}, 5000, {}, CodecKind::Szx);
  auto spans = chunk_offsets(f.bytes);
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(SzxHeader::parse(ByteView(f.bytes.data() + spans[0].offset, spans[0].length)).element_count,
            5000u);
  auto out = decompress_chunked(f.bytes);
  ASSERT_EQ(out.size(), v.size());
  EXPECT_LE(max_abs_error(out, v), 1e-3);
}

TEST(Chunked, FieldOverloadResolvesRelativeBound) {
  std::vector<float> v(10000);
  std::iota(v.begin(), v.end(), 0.0f);
  FloatField field(v);
  ChunkedFrame f = compress_chunked(field, ErrorBoundSpec::relative(1e-3));
  auto spans = chunk_offsets(f.bytes);
  float eb = FrameHeader::parse(ByteView(f.bytes.data() + spans[0].offset, spans[0].length)).eb_abs;
  EXPECT_EQ(eb, float_at_most(1e-3 * 9999.0));
  EXPECT_LE(max_abs_error(decompress_chunked(f.bytes), v), eb);
}

TEST(Chunked, RoundTripProperty) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 30; ++t) {
    std::size_t n = 1 + rng() % 60000;
    auto v = random_values(n, rng(), -3.0, 3.0);
    float eb = 1e-4f * static_cast<float>(1 + rng() % 1000);
    CodecKind kind = (t % 2) ? CodecKind::Szx : CodecKind::ZLite;
    auto out = decompress_chunked(compress_chunked(v, eb, {}, kDefaultChunkLen, {}, kind).bytes);
    ASSERT_EQ(out.size(), n);
    ASSERT_LE(max_abs_error(out, v), eb) << "trial " << t;
  }
}

}  // namespace
}  // namespace zccl
