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


#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "steepfield/constants.hpp"
#include "steepfield/errors.hpp"
#include "steepfield/rng.hpp"
#include "steepfield/sampler.hpp"
#include "steepfield/specfun.hpp"
#include "steepfield/stats.hpp"
#include "steepfield/steep.hpp"
#include "steepfield/testfn.hpp"

using namespace steepfield;
using sampler::ScaleSchedule;

namespace {

// Killed Brownian motion on (-1, 1) from 0 at time 1, by its sine series,
// integrated against exp(-beta x - beta^2 / 2).
double tube_by_eigen_series(double beta) {
  auto dens = [](double x) {
    double s = 0.0;
    for (int k = 1; k < 40; ++k)
      s += std::sin(k * std::numbers::pi / 2) * std::sin(k * std::numbers::pi * (x + 1) / 2) *
           std::exp(-k * k * std::numbers::pi * std::numbers::pi / 8);
    return s;
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double x) { return dens(x) * std::exp(-beta * x - beta * beta / 2); }, -1.0, 1.0, 12, 1e-13);
}

sampler::FieldReplica drift_replica(double gamma) {
  sampler::FieldReplica r;
  r.nu = 2;
  r.schedule = ScaleSchedule::geometric(2, 4);
  r.seed = 3;
  const double g0 = specfun::green(2, 1.0);
  for (int n = 0; n <= 4; ++n)
    r.levels.emplace_back(r.schedule.cells(2, n), 0.3 + 2.0 * gamma * (specfun::green(2, r.schedule.t[n]) - g0));
  return r;
}

bool subset(const steep::SetMask& a, const steep::SetMask& b) {
  for (std::size_t n = 0; n < a.levels.size(); ++n)
    for (std::size_t j = 0; j < a.levels[n].size(); ++j)
      if (a.levels[n][j] && !b.levels[n][j]) return false;
  return true;
}

steep::Criterion crit(steep::Kind k, double a = 0.1, int window = 1) {
  steep::Criterion c;
  c.kind = k;
  c.a = a;
  c.window = window;
  return c;
}

}  // namespace

TEST_SUITE("steep") {

TEST_CASE("X for constant f is gamma times the increment") {
  const auto f = testfn::constant(2, 1.5);
  const std::vector<double> grid{1.0, 0.5, 0.2, 0.05};
  const std::vector<double> th{0.1, -0.4, 0.9, 2.0};
  const auto p = steep::compute_X(grid, th, f);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(p.X[k] == doctest::Approx(1.5 * (th[k] - th[0])));
    CHECK(p.sigma[k] == doctest::Approx(2.25 * (specfun::green(2, grid[k]) - specfun::green(2, 1.0))));
  }
  CHECK(steep::ratio(p, 0.2) == doctest::Approx(p.X[2] / p.sigma[2]));
  CHECK_THROWS_AS(steep::ratio_at(p, 0), DomainError);
  const auto z = steep::compute_X(grid, std::vector<double>(4, 0.7), f);
  for (double x : z.X) CHECK(x == 0.0);
}

TEST_CASE("X for a piecewise constant f telescopes") {
  const auto seq = testfn::factorial_square_sequence(3);
  const auto f = testfn::oscillating_constant(2, 1.2, seq);
  std::vector<double> grid{1.0, 0.8};
  for (double j : f.jumps()) grid.push_back(j);
  grid.insert(grid.end(), {0.01, 1e-3});
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<double> th;
  rng::Stream st(4, 99, 0, 0);
  for (std::size_t k = 0; k < grid.size(); ++k) th.push_back(st.normal());
  const auto p = steep::compute_X(grid, th, f);
  double x = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    x += f(std::sqrt(grid[k - 1] * grid[k])) * (th[k] - th[k - 1]);
    CHECK(p.X[k] == doctest::Approx(x));
    CHECK(p.sigma[k] == doctest::Approx(f.sigma_unchecked(grid[k])));
  }
  // A grid that skips a jump is refused.
  CHECK_THROWS_AS(steep::compute_X({1.0, 1e-3}, {0.0, 1.0}, f), StructuralError);
}

TEST_CASE("tube events on drift and flat paths") {
  const double gamma = 3.0;
  const auto f = testfn::constant(2, gamma);
  std::vector<double> grid;
  for (int k = 0; k <= 3 * 32; ++k) grid.push_back(std::exp2(-k / 32.0));
  std::vector<double> drift, flat(grid.size(), 0.0);
  for (double t : grid) drift.push_back(2.0 * gamma * (specfun::green(2, t) - specfun::green(2, 1.0)));
  const std::vector<double> levels{1.0, 0.5, 0.25, 0.125};
  steep::EventOptions off;
  off.bridge_correction = false;
  off.min_substeps = 16;
  const auto up = steep::detect_events(steep::compute_X(grid, drift, f), 2, levels, off);
  CHECK(up.P == std::vector<bool>{true, true, true});
  CHECK(up.Phi == std::vector<bool>{true, true, true});
  CHECK(up.min_substeps_seen == 32);
  CHECK_FALSE(up.coarse_warning);
  const auto down = steep::detect_events(steep::compute_X(grid, flat, f), 2, levels, off);
  CHECK(down.P == std::vector<bool>{false, false, false});
  CHECK(down.Phi == std::vector<bool>{false, false, false});

  off.min_substeps = 64;
  CHECK(steep::detect_events(steep::compute_X(grid, drift, f), 2, levels, off).coarse_warning);
}

TEST_CASE("bridge stay probability") {
  for (double T : {0.1, 1.0, 3.0}) {
    const double x = 0.4, y = 0.7;
    CHECK(steep::bridge_stay_probability(x, y, 1e6, T) == doctest::Approx(-std::expm1(-2 * x * y / T)).epsilon(1e-10));
    CHECK(steep::bridge_stay_probability(x, y, 1.5, T) ==
          doctest::Approx(steep::bridge_stay_probability(1.5 - x, 1.5 - y, 1.5, T)).epsilon(1e-12));
    CHECK(steep::bridge_stay_probability(x, y, 1.5, T) < steep::bridge_stay_probability(x, y, 3.0, T));
  }
  CHECK(steep::bridge_stay_probability(0.0, 0.5, 1.0, 1.0) == 0.0);
}

TEST_CASE("tube probability") {
  CHECK(steep::confinement_probability() == doctest::Approx(constants::kConfinementP).epsilon(1e-12));
  CHECK(steep::confinement_probability() == doctest::Approx(tube_by_eigen_series(0.0)).epsilon(1e-10));
  for (int nu : {2, 3, 5})
    for (double ds : {0.01, 0.25, 1.0, 2.0, 6.0}) {
      CAPTURE(nu);
      CAPTURE(ds);
      const double w = steep::tube_probability(nu, ds);
      CHECK(w == doctest::Approx(tube_by_eigen_series(std::sqrt(2.0 * nu * ds))).epsilon(1e-9));
      const auto [lo, hi] = steep::tube_sandwich(nu, ds, constants::kConfinementP);
      CHECK(lo <= w);
      CHECK(w <= hi);
    }
  CHECK(steep::tube_probability(2, 0.0) == 1.0);
}

TEST_CASE("tube probability against a bridge-corrected walk") {
  const double ds = 0.5, c = 2.0;
  const int steps = 200, R = 40000;
  stats::Running hit;
  for (int i = 0; i < R; ++i) {
    rng::Stream st(8, 99, 1, i);
    std::vector<double> s{0.0}, y{0.0};
    double b = 0.0;
    for (int k = 1; k <= steps; ++k) {
      b += std::sqrt(ds / steps) * st.normal();
      s.push_back(ds * k / steps);
      y.push_back(b);
    }
    // Under the Girsanov tilt the event is evaluated on the driftless walk.
    const bool in = steep::tube_event(s, y, std::sqrt(ds), true, 8, i, 1);
    hit.add(in ? std::exp(-c * b - c * c * ds / 2) : 0.0);
  }
  CHECK(std::fabs(hit.mean() - steep::tube_probability(2, ds)) <= 4 * hit.se());
}

TEST_CASE("masks: empty, injected drift, thick2D agreement") {
  const auto f = testfn::constant(2, 1.0);
  sampler::FieldReplica zero = drift_replica(0.0);
  for (const auto& lv : steep::detect_mask(zero, f, crit(steep::Kind::steep)).levels)
    for (auto b : lv) CHECK(b == 0);

  const auto hot = steep::detect_mask(drift_replica(1.0), f, crit(steep::Kind::steep, 0.1, 3));
  CHECK(hot.levels[0][0] == 0);
  for (int n = 1; n <= 4; ++n)
    for (auto b : hot.levels[n]) CHECK(b == 1);

  const auto r = sampler::sample_lattice_hierarchical(2, ScaleSchedule::geometric(2, 5), 21);
  auto th = crit(steep::Kind::thick2D);
  th.gamma = 1.0;
  const auto a = steep::detect_mask(r, f, crit(steep::Kind::steep));
  const auto b = steep::detect_mask(r, f, th);
  std::size_t flagged = 0, differ = 0;
  for (int n = 1; n <= 5; ++n)
    for (std::size_t j = 0; j < a.levels[n].size(); ++j) {
      flagged += a.levels[n][j];
      differ += a.levels[n][j] != b.levels[n][j];
    }
  CHECK(flagged > 0);
  CHECK(differ == 0);
}

TEST_CASE("mask nesting and band monotonicity") {
  const auto f = testfn::constant(2, 1.3);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = sampler::sample_lattice_hierarchical(2, ScaleSchedule::geometric(2, 6), seed);
    const auto steepm = steep::detect_mask(r, f, crit(steep::Kind::steep, 0.2, 3));
    const auto sub = steep::detect_mask(r, f, crit(steep::Kind::sub_steep, 0.2, 3));
    const auto super = steep::detect_mask(r, f, crit(steep::Kind::super_steep, 0.2, 3));
    const auto seq = steep::detect_mask(r, f, crit(steep::Kind::sequential, 0.2, 3));
    CHECK(subset(steepm, sub));
    CHECK(subset(sub, super));
    CHECK(subset(steepm, seq));
    CHECK(subset(seq, super));
    CHECK(subset(steep::detect_mask(r, f, crit(steep::Kind::steep, 0.05)),
                 steep::detect_mask(r, f, crit(steep::Kind::steep, 0.3))));
  }
}

TEST_CASE("mean count of flagged cells matches the band probability") {
  const double gamma = 1.0;
  const auto f = testfn::constant(2, gamma);
  const auto s = ScaleSchedule::geometric(2, 4);
  const int R = 300;
  std::vector<stats::Running> frac(5);
  for (int i = 0; i < R; ++i) {
    const auto m = steep::detect_mask(sampler::sample_lattice_hierarchical(2, s, rng::mix(55, i)), f,
                                      crit(steep::Kind::steep, 0.3));
    for (int n = 2; n <= 4; ++n) {
      double cnt = 0;
      for (auto b : m.levels[n]) cnt += b;
      frac[n].add(cnt / m.levels[n].size());
    }
  }
  for (int n = 2; n <= 4; ++n) {
    const double sig = gamma * gamma * (specfun::green(2, s.t[n]) - specfun::green(2, 1.0));
    const double p = stats::normal_cdf(2.0 * 1.3 * std::sqrt(sig)) - stats::normal_cdf(2.0 * 0.7 * std::sqrt(sig));
    CAPTURE(n);
    CHECK(std::fabs(frac[n].mean() / p - 1.0) <= 4.0 * frac[n].se() / p);
  }
}

TEST_CASE("criteria and mask serialization") {
  auto c = crit(steep::Kind::oscillatory, 0.15, 2);
  c.gamma = 0.8;
  c.gamma2 = 0.6;
  const auto back = steep::criterion_from_json(steep::to_json(c));
  CHECK(back.kind == steep::Kind::oscillatory);
  CHECK(back.gamma2 == 0.6);
  CHECK(back.window == 2);
  CHECK(steep::kind_from_name("lasting") == steep::Kind::lasting);
  CHECK_THROWS(steep::kind_from_name("shallow"));
  CHECK_THROWS_AS(crit(steep::Kind::steep, 0.0).validate(2), DomainError);
  CHECK(crit(steep::Kind::lasting).lasting_threshold() == doctest::Approx(1.0 - std::pow(1.05 / 1.1, 2)));

  const auto r = sampler::sample_lattice_hierarchical(2, ScaleSchedule::geometric(2, 5), 4);
  const auto m = steep::detect_mask(r, testfn::constant(2, 1.0), crit(steep::Kind::sub_steep));
  const auto j = steep::mask_to_json(m);
  const auto m2 = steep::mask_from_json(j);
  CHECK(m2.levels == m.levels);
  CHECK(m2.replica_seed == 4);
  CHECK(steep::mask_to_json(m2).dump() == j.dump());
  std::ostringstream csv;
  steep::write_mask_csv(csv, m);
  CHECK(csv.str().rfind("level,cell,flag\n", 0) == 0);
}

TEST_CASE("phi flags on a drift replica follow the bridge law") {
  // Endpoints sit on the drift line, so each level survives with the
  // probability that a Brownian bridge of duration T stays within sqrt(T).
  double stay = 1.0;
  for (int k = 1; k < 10; ++k) stay -= 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k);
  const auto f = testfn::constant(2, 1.0);
  steep::EventOptions opt;
  opt.min_substeps = 8;
  std::vector<double> frac;
  for (std::uint64_t i = 0; i < 400; ++i) {
    auto r = drift_replica(1.0);
    r.seed = i;
    double alive = 0;
    for (auto b : steep::detect_phi(r, f, 2, opt)) alive += b;
    frac.push_back(alive / 16);
  }
  const auto ms = stats::mean_se(frac);
  CHECK(std::fabs(ms.mean - stay * stay) <= 4.0 * ms.se);
  const auto r = sampler::sample_lattice_hierarchical(2, ScaleSchedule::geometric(2, 4), 6);
  CHECK(steep::detect_phi(r, f, 4, opt, 1) == steep::detect_phi(r, f, 4, opt, 3));
}

}
