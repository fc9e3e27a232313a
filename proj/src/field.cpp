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

#include "zccl/field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "zccl/error.hpp"

namespace zccl {

void ErrorBoundSpec::validate() const {
  if (!std::isfinite(value) || value <= 0.0) {
    throw ParameterError("error bound must be finite and positive, got " + std::to_string(value));
  }
}

FloatField::FloatField(std::vector<float> values, std::vector<std::size_t> dims)
    : values_(std::move(values)), dims_(std::move(dims)) {
  if (values_.empty()) throw ParameterError("float field must contain at least one value");
  if (!dims_.empty()) {
    std::size_t product = std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                                          std::multiplies<>());
    if (product != values_.size() ||
        std::any_of(dims_.begin(), dims_.end(), [](std::size_t d) { return d == 0; })) {
      throw ParameterError("field dims do not match element count");
    }
  }
  std::size_t bad = first_non_finite(values_);
  if (bad != values_.size()) {
    throw IngestionError("non-finite value at index " + std::to_string(bad), bad);
  }
}

std::size_t first_non_finite(std::span<const float> values) noexcept {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) return i;
  }
  return values.size();
}

ValueRange value_range(std::span<const float> values) {
  if (values.empty()) throw ParameterError("value range of an empty sequence");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

float float_at_most(double v) noexcept {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) > v) f = std::nextafter(f, 0.0f);
  return f;
}

float resolve_error_bound(const ErrorBoundSpec& spec, ValueRange range) {
  spec.validate();
  double abs = spec.value;
  if (spec.mode == BoundMode::Relative && range.width() > 0.0) abs = spec.value * range.width();
  float eb = float_at_most(abs);
  if (!(eb > 0.0f) || !std::isfinite(eb)) {
    throw ParameterError("resolved error bound is not a positive float");
  }
  return eb;
}

float resolve_error_bound(const ErrorBoundSpec& spec, std::span<const float> values) {
  std::size_t bad = first_non_finite(values);
  if (bad != values.size()) {
    throw IngestionError("non-finite value at index " + std::to_string(bad), bad);
  }
  return resolve_error_bound(spec, value_range(values));
}

}  // namespace zccl
