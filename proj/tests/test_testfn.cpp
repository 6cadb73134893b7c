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


#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "steepfield/errors.hpp"
#include "steepfield/specfun.hpp"
#include "steepfield/testfn.hpp"

using namespace steepfield;
using namespace steepfield::testfn;
using std::numbers::pi;

namespace {

std::vector<double> log_grid(double t_min, int per_decade) {
  std::vector<double> g;
  const int n = static_cast<int>(std::ceil(-std::log10(t_min) * per_decade));
  for (int k = 0; k <= n; ++k) g.push_back(std::pow(10.0, -static_cast<double>(k) / per_decade));
  g.back() = t_min;
  return g;
}

// Sigma over [lo, hi] by direct quadrature of f^2 |G'| in -ln t.
double sigma_oracle(const TestFunction& f, double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  auto g = [&](double v) {
    const double t = std::exp(-v);
    const double val = f(t);
    return val * val * (-specfun::green_derivative(f.nu(), t)) * t;
  };
  double total = 0.0;
  std::vector<double> cuts{-std::log(hi)};
  for (double j : f.jumps())
    if (j > lo && j < hi) cuts.push_back(-std::log(j));
  cuts.push_back(-std::log(lo));
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 1; k < cuts.size(); ++k)
    total += gauss_kronrod<double, 61>::integrate(g, cuts[k - 1], cuts[k], 15, 1e-13);
  return total;
}

}  // namespace

TEST_SUITE("testfn") {

TEST_CASE("class membership of the standard examples") {
  CHECK(validate_class_C(constant(2, 1.3), 1e-6).all());
  CHECK(validate_class_C(inverse_sqrt_G(3, 0.5), 1e-6).all());
  TestFunction zero(2, {Segment{0.0, 1.0, SegmentKind::affine_inv_sqrt_g, {0.0, 0.0}}}, {}, GrowthCert{});
  const auto rep = validate_class_C(zero, 1e-6);
  CHECK_FALSE(rep.divergence);
  CHECK_FALSE(rep.witnesses.empty());
  CHECK_THROWS_AS(constant(2, 0.0), StructuralError);
}

TEST_CASE("crafted counterexamples fail") {
  // |f| oscillates inside one segment.
  TestFunction wiggle(2, {Segment{0.0, 1.0, SegmentKind::log_sine, {1.0, 3.0}}}, {}, GrowthCert{5.0, 1.0});
  CHECK_FALSE(validate_class_C(wiggle, 1e-6).monotone);
  // Jump count growing faster than the certificate allows.
  std::vector<Segment> segs;
  std::vector<double> jumps;
  double right = 1.0;
  for (int k = 1; k <= 400; ++k) {
    const double left = std::exp(-0.03 * k);
    segs.push_back(Segment{left, right, SegmentKind::affine_inv_sqrt_g, {1.0, 0.0}});
    jumps.push_back(left);
    right = left;
  }
  segs.push_back(Segment{0.0, right, SegmentKind::affine_inv_sqrt_g, {1.0, 0.0}});
  TestFunction crowded(2, segs, jumps, GrowthCert{1.0, 1.0});
  CHECK_FALSE(validate_class_C(crowded, 1e-6).jumps);
  CHECK_THROWS_AS(certify(crowded), StructuralError);
}

TEST_CASE("Sigma closed forms") {
  const auto c = constant(2, 1.3);
  const auto h = inverse_sqrt_G(3, 0.7);
  for (double t : {0.9, 0.3, 1e-3, 1e-8}) {
    CHECK(sigma(c, t).sigma ==
          doctest::Approx(1.69 * (specfun::green(2, t) - specfun::green_at_one(2))).epsilon(1e-12));
    CHECK(sigma(h, t).sigma ==
          doctest::Approx(0.49 * std::log(specfun::green(3, t) / specfun::green_at_one(3))).epsilon(1e-12));
  }
  CHECK(sigma(c, 1.0).sigma == 0.0);
  const auto osc = oscillating_constant(2, 1.3, factorial_square_sequence(4));
  for (double t : {0.4, 1e-3, 1e-9}) CHECK(sigma(osc, t).sigma == doctest::Approx(sigma(c, t).sigma).epsilon(1e-10));
}

TEST_CASE("Sigma additivity and quadrature oracle") {
  const auto g = g_eps(3, 0.5, 0.3, factorial_square_sequence(3));
  const auto osc = oscillating_constant(2, 0.9, factorial_square_sequence(4));
  // Power segments take the quadrature route rather than the antiderivative.
  const TestFunction pw = certify(TestFunction(
      2, {Segment{0.1, 1.0, SegmentKind::power, {0.7, 0.0}}, Segment{0.0, 0.1, SegmentKind::power, {1.2, 0.0}}}, {0.1},
      GrowthCert{3.0, 1.0}));
  for (const TestFunction* f : {&g, &osc, &pw}) {
    const double a = 0.6, b = 0.02, c = 1e-5;
    CHECK(std::fabs(f->sigma_between(c, a) - f->sigma_between(c, b) - f->sigma_between(b, a)) < 1e-8);
    CHECK(f->sigma_between(c, a) == doctest::Approx(sigma_oracle(*f, c, a)).epsilon(1e-8));
  }
}

TEST_CASE("limit ratios of the certified examples") {
  const auto grid = log_grid(1e-6, 20);
  const auto c = limit_ratios(constant(2, 1.1), grid);
  CHECK(c.upper == doctest::Approx(1.21 / (2 * pi)));
  CHECK(std::fabs(c.numeric_upper - c.upper) < 0.02);
  CHECK(std::fabs(c.numeric_lower - c.lower) < 0.02);
  CHECK(c.agrees);
  for (int nu : {3, 4}) {
    const auto h = limit_ratios(inverse_sqrt_G(nu, 0.6), grid);
    CHECK(h.upper == doctest::Approx(0.36 * (nu - 2)));
    CHECK(std::fabs(h.numeric_upper - h.upper) < 0.02);
    CHECK(h.agrees);
  }
  const auto e = g_eps(3, 0.5, 0.3, factorial_square_sequence(4));
  CHECK(e.ratios()->upper == doctest::Approx(0.25 + 0.09));
  CHECK(e.ratios()->lower == doctest::Approx(0.09));
  const auto g = g_thick(3, 0.6, factorial_square_sequence(4));
  CHECK(g.ratios()->upper == doctest::Approx(0.36));
  CHECK(g.ratios()->lower == 0.0);
}

TEST_CASE("g family reaches its certificate only along the sequence") {
  // Sigma_t / (-ln t) is near gamma^2 at r_n = 2^{-(n!)^2} and falls toward 0
  // halfway down to the next term.
  const double gamma = 0.6;
  const auto seq = factorial_square_sequence(4);
  const auto g = g_thick(3, gamma, seq);
  std::vector<double> at, half;
  for (double L : seq) {
    at.push_back(g.sigma_unchecked(std::exp(-L)) / L);
    half.push_back(g.sigma_unchecked(std::exp(-L / 2)) / (L / 2));
  }
  CHECK(std::fabs(at.back() - gamma * gamma) < 0.05);
  for (std::size_t k = 2; k < half.size(); ++k) CHECK(half[k] < half[k - 1]);
  CHECK(half.back() < 0.2 * gamma * gamma);
  // At t_min = 1e-6 the numeric estimate is far from the certificate.
  CHECK_FALSE(limit_ratios(g, log_grid(1e-6, 20)).agrees);
}

TEST_CASE("sequence conditions") {
  std::vector<double> fact = factorial_square_sequence(5);
  CHECK(check_sequence(SequenceCheck::fast_decay, fact).holds);
  std::vector<double> cube;
  for (int m = 1; m <= 6; ++m) cube.push_back(m * m * m * std::log(2.0));
  CHECK_FALSE(check_sequence(SequenceCheck::fast_decay, cube).holds);

  std::vector<double> dyadic;
  for (int m = 1; m <= 40; ++m) dyadic.push_back(m * std::log(2.0));
  const auto c = constant(2, 1.0);
  const auto rep = check_sequence(SequenceCheck::ratio, dyadic, &c);
  CHECK(rep.second_holds);
  CHECK_FALSE(rep.first_holds);
  CHECK_THROWS_AS(check_sequence(SequenceCheck::fast_decay, {1.0, 1.0, 1.0}), StructuralError);
}

TEST_CASE("JSON round trip") {
  for (const auto& f : {constant(2, 0.8), inverse_sqrt_G(3, 0.5), g_eps(4, 0.4, 0.2, factorial_square_sequence(3))}) {
    const auto j = to_json(f);
    const auto back = from_json(j);
    CHECK(to_json(back) == j);
    for (double t : {0.7, 0.01, 1e-5}) CHECK(back(t) == f(t));
  }
  CHECK_THROWS(from_json(nlohmann::json{{"nu", 2}, {"builtin", {{"name", "nope"}}}}));
  CHECK(builtin_names().size() == 6);
}

TEST_CASE("builtin domains") {
  CHECK_THROWS_AS(constant(3, 1.0), DomainError);
  CHECK_THROWS_AS(g_thick(2, 0.5, factorial_square_sequence(4)), DomainError);
}

}
