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

#include <cstddef>
#include <span>
#include <vector>

namespace zccl {

enum class BoundMode { Absolute, Relative };

// A user error bound; Relative values are fractions of the field's range.
struct ErrorBoundSpec {
  BoundMode mode = BoundMode::Absolute;
  double value = 1e-4;

  static ErrorBoundSpec absolute(double v) { return {BoundMode::Absolute, v}; }
  static ErrorBoundSpec relative(double v) { return {BoundMode::Relative, v}; }

  // Throws ParameterError unless value is finite and > 0.
  void validate() const;
};

// A nonempty sequence of finite 32-bit floats with optional dimensions.
class FloatField {
 public:
  FloatField() = default;
  // Throws IngestionError naming the first non-finite value, ParameterError
  // on an empty input or dims whose product differs from the length.
  explicit FloatField(std::vector<float> values, std::vector<std::size_t> dims = {});

  std::span<const float> values() const noexcept { return values_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::vector<float> release() && { return std::move(values_); }

 private:
  std::vector<float> values_;
  std::vector<std::size_t> dims_;
};

// Index of the first NaN/Inf in `values`, or values.size() if all finite.
std::size_t first_non_finite(std::span<const float> values) noexcept;

struct ValueRange {
  float min = 0.0f;
  float max = 0.0f;
  double width() const noexcept { return static_cast<double>(max) - static_cast<double>(min); }
};

ValueRange value_range(std::span<const float> values);

// Resolves `spec` to an absolute bound for data spanning `range`. A relative
// bound on zero-range data resolves to the raw relative value. The result is
// rounded down to the nearest float so it survives storage in frame headers.
float resolve_error_bound(const ErrorBoundSpec& spec, ValueRange range);
float resolve_error_bound(const ErrorBoundSpec& spec, std::span<const float> values);

// Largest float not greater than v (v > 0).
float float_at_most(double v) noexcept;

}  // namespace zccl
