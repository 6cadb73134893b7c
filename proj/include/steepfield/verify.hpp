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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "steepfield/covariance.hpp"
#include "steepfield/fractal.hpp"
#include "steepfield/sampler.hpp"
#include "steepfield/steep.hpp"
#include "steepfield/testfn.hpp"

// Monte Carlo suites. Each returns a report whose entries carry an estimate,
// its standard error, the bounds it is held to, and a pass flag. Entries with
// gating = false are reported but do not decide the suite.

namespace steepfield::verify {

struct Entry {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool gating = true;
  std::string note;
};

struct VerifyReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  std::vector<Entry> entries;
  nlohmann::json data;  // raw values worth archiving

  bool pass() const;
  Entry& add(Entry e);
};

nlohmann::json to_json(const VerifyReport& r);

using PointPair = std::pair<covariance::AvgPoint, covariance::AvgPoint>;

/// Concentric, disjoint, inclusion and coincident pairs inside [-1, 1]^nu.
std::vector<PointPair> default_covariance_pairs(int nu);
/// Empirical covariance of exact joint draws against the analytic kernel,
/// |difference| <= 4 SE per pair.
VerifyReport verify_covariance(int nu, const std::vector<PointPair>& pairs, std::size_t replicas, std::uint64_t seed,
                               int jobs = 1);

/// General quadrature against the closed forms exactly at the disjoint and
/// inclusion boundaries, |difference| <= 1e-6.
VerifyReport verify_regimes(int cases = 50);

struct Confinement {
  double p = 0.0;
  double se = 0.0;
  std::size_t steps = 0;
  std::size_t replicas = 0;
};

/// P(sup_{[0,1]} |B| <= 1) from Gaussian random walks of `steps` steps. With
/// bridge correction the between-step excursions are accounted for exactly.
Confinement estimate_confinement_p(std::size_t steps, std::size_t replicas, std::uint64_t seed,
                                   bool bridge_correction = true, int jobs = 1);
/// Step-halving stability, mirror symmetry and p in (0, 1).
VerifyReport verify_confinement(std::size_t steps, std::size_t replicas, std::uint64_t seed, int jobs = 1);

/// Frequency of the tube event for a Brownian path in Sigma-time with the
/// given increments dSigma, against p exp(-nu dS -/+ sqrt(2 nu dS)).
VerifyReport verify_sandwich(int nu, const std::vector<double>& dsigma, std::size_t replicas, std::uint64_t seed,
                             const Confinement& p, int substeps = 64, int jobs = 1);
/// dSigma_n = Sigma_{t_n} - Sigma_{t_{n-1}} of f along a schedule.
double level_dsigma(const testfn::TestFunction& f, const sampler::ScaleSchedule& s, int n);

/// Phi at level 2 against the product of the two single-level frequencies.
VerifyReport verify_independence(int nu, double dsigma1, double dsigma2, std::size_t replicas, std::uint64_t seed,
                                 int substeps = 64, int jobs = 1);

/// (i) KS of X_t / sqrt(Sigma_t) at the given radii (exact point paths through
/// compute_X); (ii) running max of X / sqrt(2 S ln ln S) over S in [10, 1e3]
/// for Brownian motion in Sigma-time.
VerifyReport verify_normality_and_lil(const testfn::TestFunction& f, const std::vector<double>& radii,
                                      std::size_t replicas, std::uint64_t seed, int jobs = 1);

/// E sup |X_t(y) - X_t(x)| / Sigma_t over pairs |x - y| < 2^{-(n+1)^2} 2 sqrt(nu),
/// t in [2^{-n^2}, 2^{-(n-1)^2}] (capped at 0.75), on a finite set of pairs
/// and radii drawn jointly with the exact backend. Partners sit at
/// `separation` times the maximal distance; 0 makes them coincide.
VerifyReport verify_modulus(const testfn::TestFunction& f, const std::vector<int>& levels, std::size_t replicas,
                            std::uint64_t seed, int base_points = 8, int radii_per_level = 12, int jobs = 1,
                            double separation = 0.999);

/// ln P(X_t / Sigma_t >= sqrt(2 nu)(1 - a)) against ln t at t = exp(-k),
/// importance sampled by a drift tilt. Slope held to nu c_f (1 - a)^2 within
/// a relative tolerance.
VerifyReport verify_exceedance_slope(const testfn::TestFunction& f, const std::vector<double>& neg_log_t,
                                     std::size_t replicas, std::uint64_t seed, double a = 0.0,
                                     double tolerance = 0.05, int jobs = 1);

/// E[mu_n(total)] = 1 within 4 SE over hierarchical replicas; second moment
/// reported.
VerifyReport verify_frostman_mass(const testfn::TestFunction& f, const sampler::ScaleSchedule& s,
                                  const std::vector<int>& levels, std::size_t replicas, std::uint64_t seed,
                                  int jobs = 1);

/// Cell-exact nesting of the masks on hierarchical replicas. With nu >= 3 the
/// lasting / thickPoly pair is checked as well.
VerifyReport verify_nesting(const testfn::TestFunction& f, const sampler::ScaleSchedule& s, double a, int window,
                            double gamma_thick, std::size_t replicas, std::uint64_t seed, int jobs = 1);

/// Var(X_t) = Sigma_t within 4 SE at every schedule level, exact point paths.
VerifyReport verify_variance(const testfn::TestFunction& f, const sampler::ScaleSchedule& s, std::size_t replicas,
                             std::uint64_t seed, int jobs = 1);

std::vector<std::string> suite_names();

}  // namespace steepfield::verify
