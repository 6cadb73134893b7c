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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "steepfield/sampler.hpp"
#include "steepfield/testfn.hpp"

// X_t = int_1^t f d theta, the per-level tube events, and finite-depth
// surrogates of the exceptional sets.

namespace steepfield::steep {

struct SteepPath {
  std::uint64_t point = 0;
  std::vector<double> t;      // decreasing, t[0] = 1
  std::vector<double> X;      // X[0] = 0
  std::vector<double> sigma;  // Sigma_t, sigma[0] = 0
};

/// Increment weights for a fixed grid. Where f is constant on a grid interval
/// the weight is f itself; elsewhere it is sign(f) sqrt(dSigma / dG), which
/// gives each increment of X exactly the variance dSigma.
struct Plan {
  std::vector<double> t;
  std::vector<double> weight;  // weight[k] multiplies theta[k] - theta[k-1], k >= 1
  std::vector<double> sigma;
};

/// Throws StructuralError when the grid is not decreasing from 1 or misses a
/// jump of f inside [grid.back(), 1).
Plan make_plan(const std::vector<double>& grid, const testfn::TestFunction& f);
SteepPath compute_X(const std::vector<double>& grid, const std::vector<double>& theta,
                    const testfn::TestFunction& f, std::uint64_t point = 0);
SteepPath compute_X(const Plan& plan, const std::vector<double>& theta, std::uint64_t point = 0);

/// X_t / Sigma_t at grid index k; DomainError where Sigma_t = 0.
double ratio_at(const SteepPath& p, std::size_t k);
/// Same at radius t, which must be a grid point.
double ratio(const SteepPath& p, double t);

/// Probability that a Brownian bridge from x to y over time T stays inside
/// (0, w), from the image sum.
double bridge_stay_probability(double x, double y, double w, double T);

struct EventOptions {
  int min_substeps = 64;
  /// Randomized exact correction for excursions between grid points. When
  /// off, the supremum is the grid maximum.
  bool bridge_correction = true;
  std::uint64_t seed = 0;
  std::uint64_t key = 0;  // identifies the path (cell) for the correction draws
};

struct EventFlags {
  std::vector<bool> P;    // P[n-1] for level n = 1..L
  std::vector<bool> Phi;  // cumulative conjunction
  int min_substeps_seen = 0;
  bool coarse_warning = false;
};

/// Tube events |X_t - X_{t_{n-1}} - sqrt(2 nu)(Sigma_t - Sigma_{t_{n-1}})| <= sqrt(dSigma_n)
/// on [t_n, t_{n-1}] for the given level radii (t_0 = 1 first). The path grid
/// must contain every level radius.
EventFlags detect_events(const SteepPath& path, int nu, const std::vector<double>& level_t,
                         const EventOptions& opt = {});

/// Single-level tube check on a path segment already shifted so that
/// Y_0 = 0; `s` holds Sigma offsets from the segment start.
bool tube_event(const std::vector<double>& s, const std::vector<double>& y, double width,
                bool bridge_correction, std::uint64_t seed, std::uint64_t key, std::uint64_t level);

/// Exact W(P) for increment dSigma: E[1{sup|B| <= sqrt(dS)} exp(-c B - c^2 dS / 2)], c = sqrt(2 nu).
double tube_probability(int nu, double dsigma);
/// p exp(-nu dS -/+ sqrt(2 nu dS)) with p the confinement probability.
std::pair<double, double> tube_sandwich(int nu, double dsigma, double p);
/// P(sup_{[0,1]} |B| <= 1) from its eigenfunction series.
double confinement_probability();

enum class Kind { steep, super_steep, sub_steep, sequential, thick2D, thickPoly, seq_thick, oscillatory, lasting };

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

struct Criterion {
  Kind kind = Kind::steep;
  double a = 0.1;     // band half-width, relative
  int window = 1;     // levels n-W+1..n
  double gamma = 0.0;   // thick kinds; oscillatory positive side
  double gamma2 = 0.0;  // oscillatory negative side
  std::optional<double> lasting_fraction;  // default from gamma and a
  std::vector<int> sequence_levels;        // sequential kinds; default: n, n-2, ...

  /// Level the statistic is compared to: sqrt(2 nu) for steep kinds,
  /// gamma/pi for thick2D, sqrt(2 nu) gamma for the polynomial kinds.
  double target(int nu) const;
  double lasting_threshold() const;
  /// Throws DomainError on a bad band or a kind that does not fit nu.
  void validate(int nu) const;
};

nlohmann::json to_json(const Criterion& c);
Criterion criterion_from_json(const nlohmann::json& j);

struct SetMask {
  Criterion criterion;
  int nu = 2;
  sampler::ScaleSchedule schedule;
  std::uint64_t replica_seed = 0;
  std::vector<std::vector<std::uint8_t>> levels;  // levels[n][j]; level 0 never flagged
};

/// Per-level finite-depth surrogate of the criterion on every cell. The
/// statistic at level n uses the lineage of the cell and the window ending
/// at n.
SetMask detect_mask(const sampler::FieldReplica& r, const testfn::TestFunction& f, const Criterion& c,
                    int jobs = 1);

/// Phi flags (all tube events up to level n) for every level-n cell. Fine
/// paths are bridges keyed by the ancestor cell of each level, so cells that
/// share an ancestor share its events.
std::vector<std::uint8_t> detect_phi(const sampler::FieldReplica& r, const testfn::TestFunction& f, int n,
                                     const EventOptions& opt = {}, int jobs = 1);

/// Run-length JSON: {criterion, nu, schedule, seed, levels: [[flag, run, flag, run, ...], ...]}.
nlohmann::json mask_to_json(const SetMask& m);
SetMask mask_from_json(const nlohmann::json& j);
void write_mask_csv(std::ostream& os, const SetMask& m);

}  // namespace steepfield::steep
