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

// Error-propagation model for compressed reductions and empirical quality
// metrics.
//
// Per-compression errors are modelled as independent N(mu_i, sigma_i^2).
// A sum over n ranks then has variance n*sigma^2, so it stays inside
// +/-2*sqrt(n)*sigma with probability 0.9544; with the bound taken as
// e_hat = 3*sigma this is +/-(2/3)*sqrt(n)*e_hat. Averaging divides the
// variance by n^2 (sigma^2/n overall), and a max/min chain keeps each
// compressed operand with probability 1/2 per hop, giving
// (2 - (n+2)/2^n) * sigma^2.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace zccl {

// Probability mass of a normal distribution within +/-2 sigma.
inline constexpr double kTwoSigmaCoverage = 0.9544;

// Symmetric interval [-half_width, half_width].
struct Interval {
  double half_width = 0.0;
  bool contains(double e) const noexcept { return e >= -half_width && e <= half_width; }
};

// Model parameters for one propagation question. e_hat and sigma are kept
// separate; use sigma_from_bound to relate them explicitly.
struct TheoryParams {
  int n = 1;
  double sigma = 0.0;
  double e_hat = 0.0;
  void validate() const;
};

struct NormalParams {
  double mean = 0.0;
  double variance = 0.0;
};

struct NormalFit {
  double mean = 0.0;
  double sigma = 0.0;
};

// sigma from a bound via e_hat = 3 sigma. Never applied implicitly.
constexpr double sigma_from_bound(double e_hat) noexcept { return e_hat / 3.0; }

Interval sum_error_interval_sigma(int n, double sigma);
Interval sum_error_interval_bound(int n, double e_hat);
double avg_error_variance(int n, double sigma);
double maxmin_error_variance(int n, double sigma);

// (sum a_i mu_i, sum a_i^2 sigma_i^2). Throws ParameterError on length mismatch.
NormalParams combine_normals(std::span<const double> coeffs, std::span<const double> means,
                             std::span<const double> sigmas);

// RMSE divided by the reference value range. Zero-range references use 1.
double nrmse(std::span<const float> result, std::span<const double> reference);
double nrmse(std::span<const float> result, std::span<const float> reference);

// 20 log10(range / RMSE); +infinity when the error is exactly zero.
double psnr(std::span<const float> result, std::span<const double> reference);
double psnr(std::span<const float> result, std::span<const float> reference);

// Sample mean and population standard deviation.
NormalFit fit_normal_mle(std::span<const double> errors);

double coverage_fraction(std::span<const double> errors, Interval interval);

struct ErrorStatsReport {
  std::size_t samples = 0;
  double nrmse = 0.0;
  double psnr = 0.0;
  double max_abs_err = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
  double variance = 0.0;
  Interval interval;
  double coverage = 0.0;
};

// Elementwise errors result - reference, in double.
std::vector<double> elementwise_errors(std::span<const float> result, std::span<const double> reference);

// Summarizes result vs. reference and the coverage of `interval`.
ErrorStatsReport error_report(std::span<const float> result, std::span<const double> reference,
                              Interval interval);

}  // namespace zccl
