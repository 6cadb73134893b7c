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

// Bessel functions of real order and the variance function G of the
// renormalized sphere-average family.
//
// Orders are restricted to multiples of 1/2, which covers (nu - 2) / 2 for
// every dimension nu together with the neighbouring orders used by
// recurrences and Wronskian checks.

namespace steepfield::specfun {

/// Order (nu - 2) / 2 attached to a spatial dimension nu >= 2.
struct BesselOrder {
  int nu = 2;
  double order = 0.0;

  static BesselOrder from_dimension(int nu);
  bool half_integer() const { return nu % 2 == 1; }
};

/// Variance G(t) of the radius-t average, tagged with its arguments.
struct GreenScalar {
  int nu = 2;
  double t = 1.0;
  double value = 0.0;
};

double bessel_J(double order, double x);
double bessel_I(double order, double x);
double bessel_K(double order, double x);

/// I_order(x) / x^order, finite and analytic at x = 0.
double bessel_I_scaled(double order, double x);
/// K_order(x) / x^order for x > 0.
double bessel_K_scaled(double order, double x);

double alpha_nu(int nu);

/// G(t) = alpha_nu (2 pi)^-nu K_m(t) / I_m(t), m = (nu - 2) / 2.
GreenScalar green_G(int nu, double t);
double green(int nu, double t);
/// G(1), computed once per dimension.
double green_at_one(int nu);
/// dG/dt = -alpha_nu (2 pi)^-nu / (t I_m(t)^2), from the I/K Wronskian.
double green_derivative(int nu, double t);
/// Solves G(t) = value for t > 0.
double green_inverse(int nu, double value);

/// (t/2)^m / (Gamma(nu/2) I_m(t)); tends to 1 as t -> 0.
double renorm_factor(int nu, double t);

namespace detail {
// Steed's continued fraction for K_mu(x), K_{mu+1}(x), |mu| <= 1/2, x >= 2.
void bessel_K_steed(double mu, double x, double& k_mu, double& k_mu1);
// Hankel asymptotic expansion of J_order for large x.
double bessel_J_hankel(double order, double x);
double bessel_J_series(double order, double x);
}  // namespace detail

}  // namespace steepfield::specfun
