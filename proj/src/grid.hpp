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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "zccl/bytes.hpp"
#include "zccl/codec_core.hpp"
#include "zccl/error.hpp"
#include "zccl/field.hpp"

namespace zccl::detail {

// No grid point near x reconstructs within the limit.
class GridMiss : public Error {
 public:
  GridMiss(float x, float limit)
      : Error("error bound " + std::to_string(limit) + " is below float resolution at value " +
              std::to_string(x)) {}
};

// Grid half-steps to try in order: the bound itself, the bound less two
// float ulps at the largest reconstruction magnitude, then powers of two at
// or below the bound, halving until quantization indices would exceed 2^29.
// A power-of-two grid reconstructs exactly in float, and once it drops below
// half an ulp every reconstruction rounds back to its input.
class GridLadder {
 public:
  GridLadder(std::span<const float> values, float limit) : limit_(limit) {
    for (float x : values) top_ = std::max(top_, std::fabs(static_cast<double>(x)));
    top_ += limit;
  }

  // Next grid to try, or 0 when the ladder is exhausted.
  float next() {
    switch (step_++) {
      case 0: return limit_;
      case 1: {
        double g = static_cast<double>(limit_) - std::ldexp(1.0, std::ilogb(top_) - 22);
        if (g > 0.0) return float_at_most(g);
        return next();
      }
      default: {
        double p = std::ldexp(1.0, std::ilogb(static_cast<double>(limit_)) - (step_ - 3));
        if (top_ / (2.0 * p) >= std::ldexp(1.0, 29) || p < std::numeric_limits<float>::denorm_min()) return 0.0f;
        return static_cast<float>(p);
      }
    }
  }

 private:
  float limit_;
  double top_ = 0.0;
  int step_ = 0;
};

// Runs encode(grid) down the ladder until one grid reconstructs every value
// within the limit; rethrows the last GridMiss when none does.
template <typename Encode>
auto encode_on_ladder(std::span<const float> values, float limit, Encode&& encode) {
  GridLadder ladder(values, limit);
  for (float grid = ladder.next();; ) {
    try {
      return encode(grid);
    } catch (const GridMiss&) {
      grid = ladder.next();
      if (grid <= 0.0f) throw;
    }
  }
}

// Encode on an explicit grid, throwing GridMiss when a value cannot be
// reconstructed within `limit`.
Bytes encode_zlite_on_grid(std::span<const float> values, float grid, float limit,
                           const CodecParams& params);
Bytes encode_szx_on_grid(std::span<const float> values, float grid, float limit,
                         std::uint32_t block_len);

}  // namespace zccl::detail
