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

#include <vector>

// Covariances of the renormalized sphere averages theta_t(x) and the
// intrinsic metric they induce.

namespace steepfield::covariance {

/// A sphere average: center x (dimension = x.size()) and radius t.
struct AvgPoint {
  std::vector<double> x;
  double t = 1.0;
};

enum class Regime { concentric, disjoint, inclusion, general };

const char* regime_name(Regime r);

struct KernelValue {
  double value = 0.0;
  Regime regime = Regime::general;
};

Regime classify(double t, double s, double r);

/// (2 pi)^{-nu/2} K_m(r) / r^m.
double c_disj(int nu, double r);
/// (2 pi)^{-nu/2} (I_m(r) / r^m) (K_m / I_m)(t), valid when t >= r + s.
double c_incl(int nu, double t, double r);

/// Covariance for centers at distance r by reduction to a one-dimensional
/// angular integral. Valid in every regime; used for overlapping spheres.
double cov_general(int nu, double t, double s, double r);
/// Same quantity from the triple-Bessel Fourier integral. Slow; meant as an
/// independent check away from the regime boundaries.
double cov_fourier(int nu, double t, double s, double r);

/// Regime-dispatched covariance as a function of radii and center distance.
KernelValue cov_radial(int nu, double t, double s, double r);
KernelValue cov(const AvgPoint& a, const AvgPoint& b);

/// d^2 = G(t) + G(s) - 2 cov. Throws NumericalConsistencyError below -1e-9.
double intrinsic_metric_sq(const AvgPoint& a, const AvgPoint& b);
double intrinsic_metric(const AvgPoint& a, const AvgPoint& b);

/// 1 - 2^m Gamma(nu/2) w^{-m} J_m(w).
double psi(int nu, double w);
/// Power series form of psi, convergent for all w but used below w = 1.
double psi_series(int nu, double w);

}  // namespace steepfield::covariance
