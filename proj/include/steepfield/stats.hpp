/*
 * Copyright 2026 The Steepfield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <vector>

// Small statistics toolbox shared by the verification suites.

namespace steepfield::stats {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares of y on x. Needs at least two distinct x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

MeanSE mean_se(const std::vector<double>& v);

/// Welford accumulator.
class Running {
 public:
  void add(double x);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double se() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate far into the tail.
double normal_sf(double x);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

/// One-sample KS against the standard normal. The input is copied and sorted.
KsResult ks_normal(std::vector<double> sample);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Sample covariance of paired draws.
double covariance(const std::vector<double>& a, const std::vector<double>& b);
/// Standard error of the sample covariance, from the spread of the products.
double covariance_se(const std::vector<double>& a, const std::vector<double>& b);

double median(std::vector<double> v);

}  // namespace steepfield::stats
