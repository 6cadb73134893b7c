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

#include "doctest.h"
#include "steepfield/errors.hpp"
#include "steepfield/fractal.hpp"
#include "steepfield/rng.hpp"
#include "steepfield/sampler.hpp"
#include "steepfield/specfun.hpp"
#include "steepfield/stats.hpp"
#include "steepfield/steep.hpp"
#include "steepfield/testfn.hpp"

using namespace steepfield;
using sampler::ScaleSchedule;

namespace {

steep::SetMask filled(int nu, const ScaleSchedule& s, std::uint8_t v) {
  steep::SetMask m;
  m.nu = nu;
  m.schedule = s;
  for (int n = 0; n <= s.depth(); ++n) m.levels.emplace_back(s.cells(nu, n), v);
  return m;
}

steep::Criterion steep_crit() {
  steep::Criterion c;
  c.kind = steep::Kind::steep;
  return c;
}

}  // namespace

TEST_SUITE("fractal") {

TEST_CASE("box counts and slopes of known sets") {
  const auto s = ScaleSchedule::geometric(2, 6);
  const auto full = fractal::box_count(filled(3, s, 1));
  const auto none = fractal::box_count(filled(3, s, 0));
  for (int n = 0; n <= 6; ++n) {
    CHECK(full[n] == std::pow(8.0, n));
    CHECK(none[n] == 0.0);
  }
  const auto d = fractal::fit_dimension(full, s);
  CHECK(d.slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(d.r2 == doctest::Approx(1.0));
  CHECK_THROWS(fractal::fit_dimension(none, s));

  // Middle-thirds product set: 4 of 9 cells per refinement in the plane.
  const auto s3 = ScaleSchedule::geometric(3, 5);
  std::vector<double> cantor;
  for (int n = 0; n <= 5; ++n) cantor.push_back(std::pow(4.0, n));
  CHECK(fractal::fit_dimension(cantor, s3).slope == doctest::Approx(2.0 * std::log(2.0) / std::log(3.0)));
  const auto late = fractal::fit_dimension(cantor, s3, 2);
  CHECK(late.levels.front() == 2);
  CHECK(late.levels.size() == 4);
}

TEST_CASE("predicted dimensions") {
  const auto d1 = fractal::predicted_dimension(testfn::constant(2, std::sqrt(std::numbers::pi)), steep_crit());
  CHECK(d1.lower == doctest::Approx(1.0));
  CHECK(d1.upper == doctest::Approx(1.0));
  CHECK(fractal::predicted_dimension(testfn::constant(2, 2.6), steep_crit()).empty);
  const auto d3 = fractal::predicted_dimension(testfn::inverse_sqrt_G(3, 1.0), steep_crit());
  CHECK(d3.upper == doctest::Approx(0.0).epsilon(1e-12));

  steep::Criterion osc;
  osc.kind = steep::Kind::oscillatory;
  osc.gamma = 1.0;
  osc.gamma2 = 1.5;
  const auto d4 = fractal::predicted_dimension(testfn::constant(2, 1.0), osc);
  CHECK(d4.upper == doctest::Approx(2.0 - 2.25 / std::numbers::pi));
  osc.gamma = 0.5;
  osc.gamma2 = 0.3;
  const auto d5 = fractal::predicted_dimension(testfn::inverse_sqrt_G(3, 0.5), osc);
  CHECK(d5.lower == doctest::Approx(1.5));
  CHECK(d5.upper == doctest::Approx(2.25));

  const auto band = fractal::band_adjusted_dimension(testfn::constant(2, std::sqrt(std::numbers::pi / 2)), 0.15);
  CHECK(band.upper == doctest::Approx(2.0 - 0.5 * 0.85 * 0.85));

  for (const auto& name : testfn::builtin_names()) {
    const int nu = (name == "constant" || name == "oscillating_constant") ? 2 : 3;
    nlohmann::json j{{"nu", nu}, {"builtin", {{"name", name}}}};
    if (name == "constant" || name == "oscillating_constant") j["builtin"]["gamma"] = 0.8;
    if (name == "inverse_sqrt_G") j["builtin"]["c"] = 0.5;
    if (name == "g_thick" || name == "g_oscil") j["builtin"]["gamma"] = 0.5;
    if (name == "g_eps") {
      j["builtin"]["gamma_prime"] = 0.5;
      j["builtin"]["eps"] = 0.1;
    }
    const auto f = testfn::from_json(j);
    for (auto k : {steep::Kind::steep, steep::Kind::super_steep}) {
      steep::Criterion c;
      c.kind = k;
      const auto d = fractal::predicted_dimension(f, c);
      CAPTURE(name);
      if (!d.empty) CHECK(d.lower <= d.upper);
    }
  }
}

TEST_CASE("cell kernel against Monte Carlo") {
  for (auto [alpha, delta] : {std::pair{1.0, std::vector<long long>{3, 1}}, std::pair{0.5, std::vector<long long>{0, 0}},
                              std::pair{1.5, std::vector<long long>{1, 0}}}) {
    fractal::CellKernel k(2, alpha);
    stats::Running mc;
    rng::Stream st(5, 99, 2, static_cast<std::uint64_t>(alpha * 10));
    for (int i = 0; i < 200000; ++i) {
      const double x = delta[0] + st.uniform() - st.uniform(), y = delta[1] + st.uniform() - st.uniform();
      mc.add(std::pow(std::hypot(x, y), -alpha));
    }
    CAPTURE(alpha);
    CHECK(std::fabs(k(delta) - mc.mean()) <= 4.0 * mc.se() + 1e-6);
    CHECK(k(delta) == k({-delta[0], delta[1]}));
  }
}

TEST_CASE("energy of uniform weights") {
  const auto s = ScaleSchedule::geometric(2, 3);
  const auto L = sampler::lattice(2, s, 3);
  std::vector<std::uint64_t> all(L.size());
  for (std::uint64_t j = 0; j < all.size(); ++j) all[j] = j;
  const double w = 1.0 / all.size();
  CHECK(fractal::alpha_energy(2, 0.0, L, all, w) == doctest::Approx(1.0));
  // With the diagonal as the length unit, distances are at most 1.
  const double unit = 2.0 * std::sqrt(2.0);
  double prev = 0.0;
  for (double a : {0.0, 0.5, 1.0, 1.5}) {
    const double e = fractal::alpha_energy(2, a, L, all, w, unit);
    CHECK(e >= prev);
    prev = e;
  }
  // Level 3 of the full square approximates the Lebesgue energy, which is
  // finite and grows slowly with refinement.
  const auto L4 = sampler::lattice(2, ScaleSchedule::geometric(2, 4), 4);
  std::vector<std::uint64_t> all4(L4.size());
  for (std::uint64_t j = 0; j < all4.size(); ++j) all4[j] = j;
  const double e3 = fractal::alpha_energy(2, 1.0, L, all, w), e4 = fractal::alpha_energy(2, 1.0, L4, all4, 1.0 / all4.size());
  CHECK(e4 == doctest::Approx(e3).epsilon(0.02));
}

TEST_CASE("phi probability modes") {
  const auto f = testfn::constant(2, 1.0);
  const auto s = ScaleSchedule::geometric(2, 3);
  double prod = 1.0, sig = 0.0;
  for (int m = 1; m <= 3; ++m) {
    const double ds = f.sigma_between(s.t[m], s.t[m - 1]);
    prod *= steep::tube_probability(2, ds);
    sig += ds;
  }
  const double p = steep::confinement_probability();
  CHECK(fractal::phi_probability(f, s, 3, fractal::WeightMode::exact_series, p) == doctest::Approx(prod));
  CHECK(fractal::phi_probability(f, s, 3, fractal::WeightMode::sandwich_midpoint, p) ==
        doctest::Approx(std::pow(p, 3) * std::exp(-2.0 * sig)));
  CHECK(fractal::weight_mode_from_name("sandwich_midpoint") == fractal::WeightMode::sandwich_midpoint);
}

TEST_CASE("Frostman mass has mean one") {
  const auto f = testfn::constant(2, 1.0);
  const auto s = ScaleSchedule::geometric(2, 2);
  fractal::FrostmanOptions opt;
  opt.energy = false;
  opt.events.min_substeps = 16;
  std::vector<double> mass;
  for (std::uint64_t i = 0; i < 600; ++i) {
    const auto r = sampler::sample_lattice_hierarchical(2, s, rng::mix(71, i));
    mass.push_back(fractal::frostman_measure(r, f, 2, 1.0, opt).total_mass);
  }
  const auto ms = stats::mean_se(mass);
  MESSAGE("E[mu_2] = " << ms.mean << " +- " << ms.se);
  CHECK(std::fabs(ms.mean - 1.0) <= 4.0 * ms.se);

  opt.mode = fractal::WeightMode::supplied;
  opt.supplied_probability = 0.25;
  opt.energy = true;
  const auto mu = fractal::frostman_measure(sampler::sample_lattice_hierarchical(2, s, 3), f, 2, 1.0, opt);
  CHECK(mu.weight == doctest::Approx(1.0 / (16 * 0.25)));
  CHECK(mu.total_mass == doctest::Approx(mu.weight * mu.cells.size()));
  CHECK(mu.zero == mu.cells.empty());
  opt.supplied_probability = 0.0;
  CHECK_THROWS_AS(fractal::frostman_measure(sampler::sample_lattice_hierarchical(2, s, 3), f, 2, 1.0, opt), DomainError);
}

}
