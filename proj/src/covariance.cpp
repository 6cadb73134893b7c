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

#include "steepfield/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "steepfield/errors.hpp"
#include "steepfield/specfun.hpp"

namespace steepfield::covariance {

namespace {

using boost::math::quadrature::gauss_kronrod;
using specfun::bessel_I_scaled;
using specfun::bessel_K_scaled;

constexpr double kPi = std::numbers::pi;

double order_of(int nu) { return 0.5 * (nu - 2); }

double kernel_prefactor(int nu) { return std::pow(2.0 * kPi, -0.5 * nu); }

void check_radii(double t, double s, double r) {
  if (!(t > 0.0) || !(s > 0.0)) throw DomainError("covariance: radii must be positive");
  if (!(r >= 0.0)) throw DomainError("covariance: negative center distance");
}

double distance(const AvgPoint& a, const AvgPoint& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    const double d = a.x[i] - b.x[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

int checked_dimension(const AvgPoint& a, const AvgPoint& b) {
  if (a.x.size() != b.x.size()) throw DomainError("covariance: points of different dimension");
  if (a.x.size() < 2) throw DomainError("covariance: dimension must be at least 2");
  for (const AvgPoint* p : {&a, &b}) {
    if (!(p->t > 0.0) || p->t > 1.0) throw DomainError("covariance: radius outside (0,1]");
    for (double c : p->x) {
      if (!(c >= -1.0 && c <= 1.0)) throw DomainError("covariance: center outside the closed unit cube");
    }
  }
  return static_cast<int>(a.x.size());
}

// Real part of e^{-i phi} * integral_T^inf tau^-q e^{i omega tau} dtau, by
// repeated integration by parts. Needs omega * T well above 1.
double oscillatory_tail(double q, double omega, double phase, double T) {
  if (omega == 0.0) return std::cos(phase) * std::pow(T, 1.0 - q) / (q - 1.0);
  if (omega < 0.0) {
    omega = -omega;
    phase = -phase;
  }
  const std::complex<double> i(0.0, 1.0);
  std::complex<double> term = 1.0;
  std::complex<double> sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const std::complex<double> next = term * (-i * (q + k - 1.0) / (omega * T));
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17) break;
  }
  const std::complex<double> value =
      std::exp(i * (omega * T - phase)) * std::pow(T, -q) * (i / omega) * sum;
  return value.real();
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::concentric: return "concentric";
    case Regime::disjoint: return "disjoint";
    case Regime::inclusion: return "inclusion";
    case Regime::general: return "general";
  }
  return "unknown";
}

Regime classify(double t, double s, double r) {
  if (r == 0.0) return Regime::concentric;
  if (r >= t + s) return Regime::disjoint;
  if (std::max(t, s) >= r + std::min(t, s)) return Regime::inclusion;
  return Regime::general;
}

double c_disj(int nu, double r) {
  if (!(r > 0.0)) throw DomainError("c_disj: distance must be positive");
  return kernel_prefactor(nu) * bessel_K_scaled(order_of(nu), r);
}

double c_incl(int nu, double t, double r) {
  if (!(t > 0.0) || !(r >= 0.0)) throw DomainError("c_incl: bad arguments");
  const double m = order_of(nu);
  return kernel_prefactor(nu) * bessel_I_scaled(m, r) * bessel_K_scaled(m, t) / bessel_I_scaled(m, t);
}

double cov_general(int nu, double t, double s, double r) {
  check_radii(t, s, r);
  const double big = std::max(t, s);
  const double small = std::min(t, s);
  if (r == 0.0) return specfun::green(nu, big);
  const double m = order_of(nu);

  // Average over the small sphere of the big sphere's potential
  // h(rho) ~ I_m(min(rho, big)) K_m(max(rho, big)), in scaled form.
  const double k_big = bessel_K_scaled(m, big);
  const double i_big = bessel_I_scaled(m, big);
  const double diff = r - small;
  auto integrand = [&](double phi) {
    const double half = std::sin(0.5 * phi);
    const double rho = std::sqrt(diff * diff + 4.0 * r * small * half * half);
    const double h = rho <= big ? bessel_I_scaled(m, rho) * k_big : i_big * bessel_K_scaled(m, rho);
    return nu == 2 ? h : h * std::pow(std::sin(phi), nu - 2);
  };
  const double norm = nu == 2 ? kPi
                              : std::sqrt(kPi) * std::tgamma(0.5 * (nu - 1)) / std::tgamma(0.5 * nu);

  double integral = 0.0;
  const double kink_cos = (r * r + small * small - big * big) / (2.0 * r * small);
  if (kink_cos > -1.0 && kink_cos < 1.0) {
    const double kink = std::acos(kink_cos);
    integral = gauss_kronrod<double, 31>::integrate(integrand, 0.0, kink, 15, 1e-14) +
               gauss_kronrod<double, 31>::integrate(integrand, kink, kPi, 15, 1e-14);
  } else {
    integral = gauss_kronrod<double, 31>::integrate(integrand, 0.0, kPi, 15, 1e-14);
  }
  const double average = integral / norm;
  const double mean_value_norm = std::tgamma(0.5 * nu) * std::pow(2.0, m);
  return kernel_prefactor(nu) * average / (mean_value_norm * i_big * bessel_I_scaled(m, small));
}

double cov_fourier(int nu, double t, double s, double r) {
  check_radii(t, s, r);
  if (r == 0.0) throw DomainError("cov_fourier: needs distinct centers");
  const double m = order_of(nu);
  auto integrand = [&](double tau) {
    if (tau == 0.0) return 0.0;
    return std::pow(tau, 2.0 - 0.5 * nu) * specfun::bessel_J(m, t * tau) * specfun::bessel_J(m, s * tau) *
           specfun::bessel_J(m, r * tau) / (1.0 + tau * tau);
  };

  const double phase0 = 0.5 * m * kPi + 0.25 * kPi;
  const double omegas[4] = {t + s + r, t + s - r, t - s + r, -t + s + r};
  const double phases[4] = {3.0 * phase0, phase0, phase0, phase0};
  double omega_min = omegas[0];
  for (double w : omegas) {
    if (w != 0.0) omega_min = std::min(omega_min, std::fabs(w));
  }
  const double span = omegas[0];
  double T = std::max(2000.0 / span, 60.0 / omega_min);
  T = std::min(T, 2e5 / span);

  const double step = kPi / span;
  const int pieces = static_cast<int>(std::ceil(T / step));
  T = pieces * step;
  double body = 0.0;
  for (int k = 0; k < pieces; ++k) {
    body += gauss_kronrod<double, 21>::integrate(integrand, k * step, (k + 1) * step, 0, 0.0);
  }

  // Leading Bessel asymptotics: the integrand behaves like
  // A tau^{-q} (1 - tau^{-2}) cos(tA - p) cos(sA - p) cos(rA - p).
  const double amp = std::pow(2.0 / kPi, 1.5) / std::sqrt(t * s * r);
  const double q = 0.5 * (nu + 3);
  double tail = 0.0;
  for (int j = 0; j < 4; ++j) {
    tail += 0.25 * (oscillatory_tail(q, omegas[j], phases[j], T) - oscillatory_tail(q + 2.0, omegas[j], phases[j], T));
  }
  tail *= amp;

  const double alpha = specfun::alpha_nu(nu);
  const double raw = std::pow(2.0 * kPi, 0.5 * nu) / (alpha * alpha * std::pow(t * s * r, m)) * (body + tail);
  return specfun::renorm_factor(nu, t) * specfun::renorm_factor(nu, s) * raw;
}

KernelValue cov_radial(int nu, double t, double s, double r) {
  check_radii(t, s, r);
  const Regime regime = classify(t, s, r);
  switch (regime) {
    case Regime::concentric: return {specfun::green(nu, std::max(t, s)), regime};
    case Regime::disjoint: return {c_disj(nu, r), regime};
    case Regime::inclusion: return {c_incl(nu, std::max(t, s), r), regime};
    case Regime::general: break;
  }
  return {cov_general(nu, t, s, r), regime};
}

KernelValue cov(const AvgPoint& a, const AvgPoint& b) {
  const int nu = checked_dimension(a, b);
  return cov_radial(nu, a.t, b.t, distance(a, b));
}

double intrinsic_metric_sq(const AvgPoint& a, const AvgPoint& b) {
  const int nu = checked_dimension(a, b);
  const double d2 = specfun::green(nu, a.t) + specfun::green(nu, b.t) - 2.0 * cov(a, b).value;
  if (d2 < -1e-9) {
    std::ostringstream os;
    os << "intrinsic metric: d^2 = " << d2 << " is negative beyond quadrature noise";
    throw NumericalConsistencyError(os.str());
  }
  return std::max(0.0, d2);
}

double intrinsic_metric(const AvgPoint& a, const AvgPoint& b) { return std::sqrt(intrinsic_metric_sq(a, b)); }

double psi_series(int nu, double w) {
  if (nu < 2) throw DomainError("psi: dimension < 2");
  if (!(w >= 0.0)) throw DomainError("psi: negative argument");
  const double a = 0.5 * nu;
  const double q = 0.25 * w * w;
  double term = 1.0;  // q^k / (k! (a)_k)
  double sum = 0.0;
  for (int k = 1; k < 500; ++k) {
    term *= -q / (k * (a + k - 1.0));
    sum -= term;
    if (k > q && std::fabs(term) <= 1e-17 * std::fabs(sum)) break;
  }
  return sum;
}

double psi(int nu, double w) {
  if (nu < 2) throw DomainError("psi: dimension < 2");
  if (!(w >= 0.0)) throw DomainError("psi: negative argument");
  if (w < 1.0) return psi_series(nu, w);
  const double m = order_of(nu);
  return 1.0 - std::pow(2.0, m) * std::tgamma(0.5 * nu) * std::pow(w, -m) * specfun::bessel_J(m, w);
}

}  // namespace steepfield::covariance
