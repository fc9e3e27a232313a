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

#include "zccl/error_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zccl/error.hpp"

namespace zccl {
namespace {

void check_theory(int n, double s, const char* name) {
  if (n < 1) throw ParameterError("node count must be at least 1");
  if (!std::isfinite(s) || s <= 0.0) throw ParameterError(std::string(name) + " must be positive");
}

template <typename Ref>
double rmse_of(std::span<const float> result, std::span<const Ref> reference) {
  if (result.size() != reference.size() || result.empty()) {
    throw ParameterError("result and reference must be nonempty and equally long");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < result.size(); ++i) {
    double d = static_cast<double>(result[i]) - static_cast<double>(reference[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(result.size()));
}

template <typename Ref>
double range_of(std::span<const Ref> reference) {
  auto [lo, hi] = std::minmax_element(reference.begin(), reference.end());
  double r = static_cast<double>(*hi) - static_cast<double>(*lo);
  return r > 0.0 ? r : 1.0;
}

template <typename Ref>
double nrmse_impl(std::span<const float> result, std::span<const Ref> reference) {
  double rmse = rmse_of(result, reference);
  return rmse / range_of(reference);
}

template <typename Ref>
double psnr_impl(std::span<const float> result, std::span<const Ref> reference) {
  double rmse = rmse_of(result, reference);
  if (rmse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(range_of(reference) / rmse);
}

}  // namespace

void TheoryParams::validate() const {
  check_theory(n, sigma, "sigma");
  check_theory(n, e_hat, "error bound");
}

Interval sum_error_interval_sigma(int n, double sigma) {
  check_theory(n, sigma, "sigma");
  return {2.0 * std::sqrt(static_cast<double>(n)) * sigma};
}

Interval sum_error_interval_bound(int n, double e_hat) {
  check_theory(n, e_hat, "error bound");
  return {2.0 / 3.0 * std::sqrt(static_cast<double>(n)) * e_hat};
}

double avg_error_variance(int n, double sigma) {
  check_theory(n, sigma, "sigma");
  return sigma * sigma / static_cast<double>(n);
}

double maxmin_error_variance(int n, double sigma) {
  check_theory(n, sigma, "sigma");
  // (n + 2) / 2^n underflows to 0 long before n overflows; ldexp keeps it exact.
  return (2.0 - std::ldexp(static_cast<double>(n) + 2.0, -n)) * sigma * sigma;
}

NormalParams combine_normals(std::span<const double> coeffs, std::span<const double> means,
                             std::span<const double> sigmas) {
  if (coeffs.size() != means.size() || coeffs.size() != sigmas.size()) {
    throw ParameterError("combine_normals: coefficient, mean and sigma counts differ");
  }
  NormalParams out;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    out.mean += coeffs[i] * means[i];
    out.variance += coeffs[i] * coeffs[i] * sigmas[i] * sigmas[i];
  }
  return out;
}

double nrmse(std::span<const float> result, std::span<const double> reference) {
  return nrmse_impl(result, reference);
}
double nrmse(std::span<const float> result, std::span<const float> reference) {
  return nrmse_impl(result, reference);
}
double psnr(std::span<const float> result, std::span<const double> reference) {
  return psnr_impl(result, reference);
}
double psnr(std::span<const float> result, std::span<const float> reference) {
  return psnr_impl(result, reference);
}

NormalFit fit_normal_mle(std::span<const double> errors) {
  if (errors.empty()) throw ParameterError("cannot fit an empty sample");
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= static_cast<double>(errors.size());
  double ss = 0.0;
  for (double e : errors) ss += (e - mean) * (e - mean);
  return {mean, std::sqrt(ss / static_cast<double>(errors.size()))};
}

double coverage_fraction(std::span<const double> errors, Interval interval) {
  if (errors.empty()) throw ParameterError("coverage of an empty sample");
  std::size_t inside = 0;
  for (double e : errors) inside += interval.contains(e) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(errors.size());
}

std::vector<double> elementwise_errors(std::span<const float> result, std::span<const double> reference) {
  if (result.size() != reference.size()) throw ParameterError("result and reference lengths differ");
  std::vector<double> out(result.size());
  for (std::size_t i = 0; i < result.size(); ++i) out[i] = static_cast<double>(result[i]) - reference[i];
  return out;
}

ErrorStatsReport error_report(std::span<const float> result, std::span<const double> reference,
                              Interval interval) {
  std::vector<double> errs = elementwise_errors(result, reference);
  ErrorStatsReport r;
  r.samples = errs.size();
  r.nrmse = nrmse(result, reference);
  r.psnr = psnr(result, reference);
  for (double e : errs) r.max_abs_err = std::max(r.max_abs_err, std::fabs(e));
  NormalFit fit = fit_normal_mle(errs);
  r.mean = fit.mean;
  r.sigma = fit.sigma;
  r.variance = fit.sigma * fit.sigma;
  r.interval = interval;
  r.coverage = coverage_fraction(errs, interval);
  return r;
}

}  // namespace zccl
