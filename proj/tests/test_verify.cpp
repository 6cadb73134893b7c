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
#include "steepfield/constants.hpp"
#include "steepfield/errors.hpp"
#include "steepfield/sampler.hpp"
#include "steepfield/specfun.hpp"
#include "steepfield/steep.hpp"
#include "steepfield/testfn.hpp"
#include "steepfield/verify.hpp"

using namespace steepfield;
using sampler::ScaleSchedule;

namespace {

const verify::Entry& entry(const verify::VerifyReport& r, const std::string& name) {
  for (const auto& e : r.entries)
    if (e.name == name) return e;
  FAIL("no entry " << name);
  return r.entries.front();
}

void require_pass(const verify::VerifyReport& r) {
  for (const auto& e : r.entries) {
    CAPTURE(e.name);
    CAPTURE(e.estimate);
    if (e.gating) CHECK(e.pass);
  }
  CHECK(r.pass());
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("covariance and regimes") {
  for (int nu : {2, 3}) {
    const auto pairs = verify::default_covariance_pairs(nu);
    CHECK(pairs.size() == 5);
    const auto r = verify::verify_covariance(nu, pairs, 20000, 11);
    CHECK(r.suite == "covariance");
    CHECK(r.seed == 11);
    require_pass(r);
  }
  const auto reg = verify::verify_regimes();
  CHECK(reg.entries.size() == 50);
  require_pass(reg);
}

TEST_CASE("confinement estimate brackets the series value") {
  const auto c = verify::estimate_confinement_p(200, 20000, 3);
  CHECK(std::fabs(c.p - constants::kConfinementP) <= 4.0 * c.se);
  // Without the correction the walk misses excursions and overestimates.
  const auto raw = verify::estimate_confinement_p(20, 20000, 3, false);
  CHECK(raw.p > constants::kConfinementP + 4.0 * raw.se);
  require_pass(verify::verify_confinement(200, 20000, 5));
}

TEST_CASE("sandwich and independence") {
  const verify::Confinement p{constants::kConfinementP, 0.0, 0, 0};
  const auto r = verify::verify_sandwich(2, {0.5, 0.25}, 40000, 8, p, 32);
  require_pass(r);
  const auto& a = entry(r, "dSigma=0.5");
  CHECK(entry(r, "dSigma=0.25").lower <= entry(r, "dSigma=0.25").upper);
  CHECK(a.lower <= a.upper);
  const auto& rows = r.data.at("cases");
  const double wa = rows[0].at("upper").get<double>() / rows[0].at("lower").get<double>();
  const double wb = rows[1].at("upper").get<double>() / rows[1].at("lower").get<double>();
  CHECK(wb < wa);
  CHECK(wb == doctest::Approx(std::exp(2.0 * std::sqrt(4.0 * 0.25))));
  CHECK(entry(r, "exact law dSigma=0.5").pass);
  // Fewer than ten hits is reported as inconclusive, never as a pass.
  const auto tiny = verify::verify_sandwich(2, {6.0}, 50, 8, p, 8);
  CHECK_FALSE(tiny.pass());
  require_pass(verify::verify_independence(2, 0.5, 0.5, 40000, 9, 32));
  CHECK(verify::level_dsigma(testfn::constant(2, 1.0), ScaleSchedule::geometric(2, 2), 1) ==
        doctest::Approx(specfun::green(2, 0.5) - specfun::green(2, 1.0)));
}

TEST_CASE("normality, LIL and variance") {
  const auto f = testfn::constant(2, 1.0);
  // Fixed seed; across seeds the KS p-values are uniform, so any one seed
  // fails a 1% test now and then.
  require_pass(verify::verify_normality_and_lil(f, {0.5, 0.1, 0.01}, 2000, 5));
  require_pass(verify::verify_variance(testfn::inverse_sqrt_G(3, 0.7), ScaleSchedule::geometric(2, 5), 20000, 6));
}

TEST_CASE("modulus") {
  const auto f = testfn::constant(2, 1.0);
  const auto r = verify::verify_modulus(f, {1, 2}, 60, 2, 4, 8);
  CHECK(entry(r, "decreasing in n").pass);
  const auto zero = verify::verify_modulus(f, {1}, 10, 2, 4, 8, 1, 0.0);
  CHECK(entry(zero, "n=1 E sup / 2^{-n/4}").estimate == 0.0);
}

TEST_CASE("exceedance slope") {
  const auto f = testfn::constant(2, std::sqrt(std::numbers::pi));
  // a = 1 puts the threshold at zero: P = 1/2 at every radius.
  const auto flat = verify::verify_exceedance_slope(f, {2, 4, 6, 8}, 20000, 3, 1.0, 0.05);
  CHECK(entry(flat, "slope").estimate == doctest::Approx(0.0).epsilon(0.02));
  CHECK(flat.pass());
  const auto r = verify::verify_exceedance_slope(f, {4, 6, 8, 10}, 20000, 3, 0.0, 0.2);
  MESSAGE("raw slope " << entry(r, "slope").estimate << ", Mills " << entry(r, "Mills-corrected slope").estimate);
  CHECK(entry(r, "slope").estimate > 1.0);
  CHECK(std::fabs(entry(r, "Mills-corrected slope").estimate - 1.0) < std::fabs(entry(r, "slope").estimate - 1.0));
}

TEST_CASE("Frostman mass and nesting") {
  const auto f = testfn::constant(2, 1.0);
  const auto s = ScaleSchedule::geometric(2, 3);
  require_pass(verify::verify_frostman_mass(f, s, {1, 2}, 200, 10));
  const auto nest = verify::verify_nesting(f, s, 0.2, 2, 0.0, 20, 3);
  require_pass(nest);
  require_pass(verify::verify_nesting(testfn::inverse_sqrt_G(3, 0.6), ScaleSchedule::geometric(2, 2), 0.2, 2, 0.5, 5, 3));
}

TEST_CASE("reports are deterministic and carry their seed") {
  const auto pairs = verify::default_covariance_pairs(2);
  const auto a = verify::to_json(verify::verify_covariance(2, pairs, 2000, 42, 1));
  const auto b = verify::to_json(verify::verify_covariance(2, pairs, 2000, 42, 3));
  CHECK(a.dump() == b.dump());
  CHECK(a.at("seed") == 42);
  CHECK(a.at("suite") == "covariance");
  CHECK(verify::suite_names().size() == 11);
}

}
