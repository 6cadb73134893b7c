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

#include "steepfield/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "steepfield/errors.hpp"

namespace steepfield::specfun {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = std::numbers::egamma;
constexpr double kEps = 1e-17;
constexpr double kMaxOrder = 20.0;

// Above this argument integer-order J switches from Miller recurrence to the
// Hankel expansion; half-integer orders switch from the series to the
// elementary closed forms above kHalfIntegerSeriesLimit.
constexpr double kMillerLimit = 30.0;
constexpr double kHalfIntegerSeriesLimit = 12.0;
constexpr double kISeriesLimit = 60.0;

bool is_integer_order(double order) { return order == std::floor(order); }

void check_order(double order, const char* fn) {
  const double twice = 2.0 * order;
  if (!(order >= 0.0) || order > kMaxOrder || twice != std::floor(twice)) {
    std::ostringstream os;
    os << fn << ": order " << order << " is not a non-negative multiple of 1/2 up to " << kMaxOrder;
    throw DomainError(os.str());
  }
}

void check_dimension(int nu, const char* fn) {
  if (nu < 2) {
    std::ostringstream os;
    os << fn << ": dimension " << nu << " < 2";
    throw DomainError(os.str());
  }
}

// Miller's backward recurrence normalized by J_0 + 2 sum J_2k = 1.
double bessel_J_miller(int n, double x) {
  const double scale = std::max<double>(n, x);
  int start = static_cast<int>(scale + 20.0 + 8.0 * std::sqrt(scale));
  start += start % 2;
  const double two_over_x = 2.0 / x;
  double above = 0.0;
  double current = 1.0;
  double wanted = 0.0;
  double even_sum = 0.0;
  bool add = false;
  for (int j = start; j > 0; --j) {
    const double below = j * two_over_x * current - above;
    above = current;
    current = below;
    if (std::fabs(current) > 1e250) {
      current *= 1e-250;
      above *= 1e-250;
      wanted *= 1e-250;
      even_sum *= 1e-250;
    }
    if (add) even_sum += current;
    add = !add;
    if (j == n) wanted = above;
  }
  const double norm = 2.0 * even_sum - current;
  if (n == 0) wanted = current;
  return wanted / norm;
}

double bessel_I_asymptotic(double order, double x) {
  const double mu4 = 4.0 * order * order;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = -term * (mu4 - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x);
    if (std::fabs(next) >= std::fabs(term)) break;
    term = next;
    sum += term;
    if (std::fabs(term) < kEps * std::fabs(sum)) break;
  }
  return std::exp(x) / std::sqrt(2.0 * kPi * x) * sum;
}

// A&S 9.6.11 for n = 0, 1 at small argument.
void bessel_K01_series(double x, double& k0, double& k1) {
  const double q = 0.25 * x * x;
  const double log_half = std::log(0.5 * x);

  double term0 = 1.0;
  double harmonic = 0.0;
  double i0 = 0.0;
  double s0 = 0.0;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      term0 *= q / (static_cast<double>(k) * k);
      harmonic += 1.0 / k;
    }
    i0 += term0;
    s0 += term0 * harmonic;
    if (k > 0 && term0 < kEps * i0) break;
  }
  k0 = -(log_half + kEulerGamma) * i0 + s0;

  double term1 = 1.0;  // q^k / (k! (k+1)!)
  harmonic = 0.0;
  double i1 = 0.0;
  double s1 = 0.0;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      term1 *= q / (static_cast<double>(k) * (k + 1));
      harmonic += 1.0 / k;
    }
    const double psi_sum = (-kEulerGamma + harmonic) + (-kEulerGamma + harmonic + 1.0 / (k + 1));
    i1 += term1;
    s1 += psi_sum * term1;
    if (k > 0 && term1 < kEps * i1) break;
  }
  i1 *= 0.5 * x;
  k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1;
}

}  // namespace

BesselOrder BesselOrder::from_dimension(int nu) {
  check_dimension(nu, "BesselOrder");
  return BesselOrder{nu, 0.5 * (nu - 2)};
}

namespace detail {

double bessel_J_series(double order, double x) {
  if (x == 0.0) return order == 0.0 ? 1.0 : 0.0;
  const double half = 0.5 * x;
  const double q = half * half;
  double term = std::exp(order * std::log(half) - std::lgamma(order + 1.0));
  double sum = term;
  for (int k = 1; k < 1000; ++k) {
    term *= -q / (k * (k + order));
    sum += term;
    if (k > half && std::fabs(term) <= kEps * std::fabs(sum)) break;
    if (std::fabs(term) < 1e-300) break;
  }
  return sum;
}

double bessel_J_hankel(double order, double x) {
  const double mu4 = 4.0 * order * order;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = term * (mu4 - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x);
    if (std::fabs(next) >= std::fabs(term) && k > 2) break;
    term = next;
    // a_k enters P (k even) or Q (k odd) with sign (-1)^{floor(k/2)}.
    const double signed_term = ((k / 2) % 2 == 0) ? term : -term;
    if (k % 2 == 0) {
      p += signed_term;
    } else {
      q += signed_term;
    }
    if (std::fabs(term) < kEps) break;
  }
  const double omega = x - (0.5 * order + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(omega) - q * std::sin(omega));
}

void bessel_K_steed(double mu, double x, double& k_mu, double& k_mu1) {
  const double mu2 = mu * mu;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu2;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= 100000; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::fabs(dels / s) < 1e-16) break;
  }
  h = a1 * h;
  k_mu = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
  k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
}

}  // namespace detail

double bessel_J(double order, double x) {
  check_order(order, "bessel_J");
  if (!(x >= 0.0)) throw DomainError("bessel_J: negative argument");
  if (x == 0.0) return order == 0.0 ? 1.0 : 0.0;

  if (is_integer_order(order)) {
    const int n = static_cast<int>(order);
    if (x < kMillerLimit || order > 0.5 * x) return bessel_J_miller(n, x);
    double lower = detail::bessel_J_hankel(0.0, x);
    if (n == 0) return lower;
    double upper = detail::bessel_J_hankel(1.0, x);
    for (int j = 1; j < n; ++j) {
      const double next = (2.0 * j / x) * upper - lower;
      lower = upper;
      upper = next;
    }
    return upper;
  }

  if (x <= kHalfIntegerSeriesLimit || order > x - 1.0) return detail::bessel_J_series(order, x);
  const double amp = std::sqrt(2.0 / (kPi * x));
  double lower = amp * std::sin(x);                 // J_{1/2}
  if (order == 0.5) return lower;
  double upper = lower / x - amp * std::cos(x);     // J_{3/2}
  for (double nu = 1.5; nu < order; nu += 1.0) {
    const double next = (2.0 * nu / x) * upper - lower;
    lower = upper;
    upper = next;
  }
  return upper;
}

double bessel_I_scaled(double order, double x) {
  check_order(order, "bessel_I");
  if (!(x >= 0.0)) throw DomainError("bessel_I: negative argument");
  if (x > kISeriesLimit) return bessel_I_asymptotic(order, x) / std::pow(x, order);
  const double q = 0.25 * x * x;
  double term = std::exp(-std::lgamma(order + 1.0) - order * std::numbers::ln2);
  double sum = term;
  for (int k = 1; k < 2000; ++k) {
    term *= q / (k * (k + order));
    sum += term;
    if (term <= kEps * sum) break;
  }
  return sum;
}

double bessel_I(double order, double x) {
  check_order(order, "bessel_I");
  if (!(x >= 0.0)) throw DomainError("bessel_I: negative argument");
  if (x == 0.0) return order == 0.0 ? 1.0 : 0.0;
  if (x > kISeriesLimit) return bessel_I_asymptotic(order, x);
  return bessel_I_scaled(order, x) * std::pow(x, order);
}

double bessel_K(double order, double x) {
  check_order(order, "bessel_K");
  if (!(x > 0.0)) throw DomainError("bessel_K: argument must be positive");

  if (!is_integer_order(order)) {
    const int n = static_cast<int>(order - 0.5);
    double sum = 0.0;
    double coeff = 1.0;  // (n+k)! / (k! (n-k)! (2x)^k)
    for (int k = 0; k <= n; ++k) {
      if (k > 0) coeff *= static_cast<double>((n + k) * (n - k + 1)) / (k * 2.0 * x);
      sum += coeff;
    }
    return std::sqrt(kPi / (2.0 * x)) * std::exp(-x) * sum;
  }

  double k0 = 0.0;
  double k1 = 0.0;
  if (x <= 2.0) {
    bessel_K01_series(x, k0, k1);
  } else {
    detail::bessel_K_steed(0.0, x, k0, k1);
  }
  const int n = static_cast<int>(order);
  if (n == 0) return k0;
  for (int j = 1; j < n; ++j) {
    const double next = k0 + (2.0 * j / x) * k1;
    k0 = k1;
    k1 = next;
  }
  return k1;
}

double bessel_K_scaled(double order, double x) {
  return bessel_K(order, x) / std::pow(x, order);
}

double alpha_nu(int nu) {
  check_dimension(nu, "alpha_nu");
  return 2.0 * std::pow(kPi, 0.5 * nu) / std::tgamma(0.5 * nu);
}

namespace {

double green_prefactor(int nu) { return alpha_nu(nu) * std::pow(2.0 * kPi, -nu); }

double green_unchecked(int nu, double t) {
  const double m = 0.5 * (nu - 2);
  return green_prefactor(nu) * bessel_K_scaled(m, t) / bessel_I_scaled(m, t);
}

}  // namespace

GreenScalar green_G(int nu, double t) {
  check_dimension(nu, "green_G");
  if (!(t > 0.0)) throw DomainError("green_G: radius must be positive");
  return GreenScalar{nu, t, green_unchecked(nu, t)};
}

double green(int nu, double t) { return green_G(nu, t).value; }

double green_at_one(int nu) {
  check_dimension(nu, "green_at_one");
  static const std::array<double, 41> table = [] {
    std::array<double, 41> values{};
    for (int d = 2; d < static_cast<int>(values.size()); ++d) values[d] = green_unchecked(d, 1.0);
    return values;
  }();
  if (nu < static_cast<int>(table.size())) return table[nu];
  return green_unchecked(nu, 1.0);
}

double green_derivative(int nu, double t) {
  check_dimension(nu, "green_derivative");
  if (!(t > 0.0)) throw DomainError("green_derivative: radius must be positive");
  const double i = bessel_I(0.5 * (nu - 2), t);
  return -green_prefactor(nu) / (t * i * i);
}

double green_inverse(int nu, double value) {
  check_dimension(nu, "green_inverse");
  if (!(value > 0.0) || !std::isfinite(value)) throw DomainError("green_inverse: value must be positive");
  const double pre = green_prefactor(nu);
  const double m = 0.5 * (nu - 2);
  double u = 0.0;
  if (nu == 2) {
    u = -2.0 * kPi * value;
  } else {
    u = -std::log(alpha_nu(nu) * (nu - 2) * value) / (nu - 2);
  }
  u = std::clamp(u, -700.0, 6.0);
  for (int iter = 0; iter < 200; ++iter) {
    const double t = std::exp(u);
    const double g = green_unchecked(nu, t);
    const double i = bessel_I(m, t);
    const double slope = -pre / (i * i);  // dG/du
    double step = (g - value) / slope;
    // Work on log G for the power-law branch; Newton in u is then nearly linear.
    if (nu > 2) step = (std::log(g) - std::log(value)) / (slope / g);
    const double next = std::clamp(u - step, u - 5.0, u + 5.0);
    if (std::fabs(next - u) < 1e-15 * std::max(1.0, std::fabs(u))) {
      u = next;
      break;
    }
    u = next;
  }
  return std::exp(u);
}

double renorm_factor(int nu, double t) {
  check_dimension(nu, "renorm_factor");
  if (!(t > 0.0)) throw DomainError("renorm_factor: radius must be positive");
  const double m = 0.5 * (nu - 2);
  return 1.0 / (std::tgamma(0.5 * nu) * std::pow(2.0, m) * bessel_I_scaled(m, t));
}

}  // namespace steepfield::specfun
