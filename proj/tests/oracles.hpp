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

// Independent reference implementations used as test oracles. They follow
// the documented byte layouts bit by bit and share no code with the library.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <vector>

namespace zccl::testing {

// Bit sink writing LSB-first within each byte.
class BitWriter {
 public:
  void put(std::uint64_t value, unsigned bits) {
    for (unsigned i = 0; i < bits; ++i) {
      if (bit_ % 8 == 0) bytes_.push_back(0);
      if ((value >> i) & 1u) bytes_.back() |= static_cast<std::uint8_t>(1u << (bit_ % 8));
      ++bit_;
    }
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bit_ = 0;
};

class BitReader {
 public:
  BitReader(const std::uint8_t* p, std::size_t bytes) : p_(p), n_(bytes) {}
  std::uint64_t get(unsigned bits) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < bits; ++i, ++bit_) {
      if (bit_ / 8 >= n_) throw std::runtime_error("bit reader overrun");
      if ((p_[bit_ / 8] >> (bit_ % 8)) & 1u) v |= std::uint64_t{1} << i;
    }
    return v;
  }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t bit_ = 0;
};

inline unsigned naive_bit_width(std::uint64_t v) {
  unsigned w = 0;
  while (v) {
    ++w;
    v >>= 1;
  }
  return w;
}

// Code-length byte, sign bitmap over b slots, then b magnitudes of L bits.
inline std::vector<std::uint8_t> naive_micro_block(const std::vector<std::int64_t>& deltas, std::size_t b) {
  std::vector<std::int64_t> padded(deltas);
  padded.resize(b, 0);
  std::uint64_t max_mag = 0;
  for (auto d : padded) max_mag = std::max<std::uint64_t>(max_mag, static_cast<std::uint64_t>(d < 0 ? -d : d));
  unsigned len = naive_bit_width(max_mag);
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(len)};
  if (len == 0) return out;
  BitWriter signs;
  for (auto d : padded) signs.put(d < 0 ? 1 : 0, 1);
  auto s = signs.take();
  out.insert(out.end(), s.begin(), s.end());
  BitWriter mags;
  for (auto d : padded) mags.put(static_cast<std::uint64_t>(d < 0 ? -d : d), len);
  auto m = mags.take();
  out.insert(out.end(), m.begin(), m.end());
  return out;
}

inline std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint64_t le64(const std::uint8_t* p) { return le32(p) | std::uint64_t(le32(p + 4)) << 32; }
inline float lef32(const std::uint8_t* p) {
  std::uint32_t u = le32(p);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

// Reads one micro block of b slots, returning the signed deltas.
inline std::vector<std::int64_t> naive_read_micro(const std::vector<std::uint8_t>& f, std::size_t& pos, std::size_t b) {
  unsigned len = f.at(pos++);
  std::vector<std::int64_t> d(b, 0);
  if (len == 0) return d;
  std::size_t sign_bytes = (b + 7) / 8, mag_bytes = (b * len + 7) / 8;
  if (pos + sign_bytes + mag_bytes > f.size()) throw std::runtime_error("short micro block");
  BitReader signs(f.data() + pos, sign_bytes);
  BitReader mags(f.data() + pos + sign_bytes, mag_bytes);
  for (std::size_t j = 0; j < b; ++j) {
    bool neg = signs.get(1);
    auto m = static_cast<std::int64_t>(mags.get(len));
    d[j] = neg ? -m : m;
  }
  pos += sign_bytes + mag_bytes;
  return d;
}

// Decodes a ZCL1 frame straight from the layout description.
inline std::vector<float> naive_decode_zlite(const std::vector<std::uint8_t>& f) {
  if (f.size() < 25 || std::memcmp(f.data(), "ZCL1", 4) != 0 || f[4] != 1) throw std::runtime_error("header");
  float eb = lef32(&f[5]);
  std::uint64_t count = le64(&f[9]);
  std::uint32_t tb = le32(&f[17]), mb = le32(&f[21]);
  std::vector<float> out;
  std::size_t pos = 25;
  while (out.size() < count) {
    std::size_t n = std::min<std::uint64_t>(tb, count - out.size());
    if (pos + 4 > f.size()) throw std::runtime_error("short outlier");
    std::int64_t q = static_cast<std::int32_t>(le32(&f[pos]));
    pos += 4;
    out.push_back(static_cast<float>(2.0 * eb * static_cast<double>(q)));
    std::size_t left = n - 1;
    while (left > 0) {
      auto d = naive_read_micro(f, pos, mb);
      for (std::size_t j = 0; j < std::min<std::size_t>(mb, left); ++j) {
        q += d[j];
        out.push_back(static_cast<float>(2.0 * eb * static_cast<double>(q)));
      }
      left -= std::min<std::size_t>(mb, left);
    }
  }
  if (pos != f.size()) throw std::runtime_error("trailing bytes");
  return out;
}

// Decodes a ZSX1 frame straight from the layout description.
inline std::vector<float> naive_decode_szx(const std::vector<std::uint8_t>& f) {
  if (f.size() < 20 || std::memcmp(f.data(), "ZSX1", 4) != 0) throw std::runtime_error("header");
  float eb = lef32(&f[4]);
  std::uint64_t count = le64(&f[8]);
  std::uint32_t bl = le32(&f[16]);
  std::vector<float> out;
  std::size_t pos = 20;
  while (out.size() < count) {
    std::size_t n = std::min<std::uint64_t>(bl, count - out.size());
    if (pos + 5 > f.size()) throw std::runtime_error("short block");
    std::uint8_t flag = f[pos];
    float mu = lef32(&f[pos + 1]);
    pos += 5;
    if (flag == 0) {
      out.insert(out.end(), n, mu);
      continue;
    }
    auto d = naive_read_micro(f, pos, n);
    for (std::size_t j = 0; j < n; ++j) {
      out.push_back(static_cast<float>(static_cast<double>(mu) + 2.0 * eb * static_cast<double>(d[j])));
    }
  }
  if (pos != f.size()) throw std::runtime_error("trailing bytes");
  return out;
}

inline double max_abs_error(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(double(a[i]) - double(b[i])));
  return m;
}

inline std::vector<float> random_values(std::size_t n, std::uint64_t seed, double lo = -100.0, double hi = 100.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(u(rng));
  return v;
}

}  // namespace zccl::testing
