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
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "steepfield/sampler.hpp"
#include "steepfield/steep.hpp"
#include "steepfield/testfn.hpp"

// Box counting, predicted dimensions, Frostman measures and alpha-energies.

namespace steepfield::fractal {

/// Flagged cells per level.
std::vector<double> box_count(const steep::SetMask& m);

struct DimensionEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  std::vector<int> levels;     // levels entering the fit
  std::vector<double> scales;  // t_n
  std::vector<double> counts;  // N(t_n), possibly averaged over replicas
  double predicted_lower = 0.0;
  double predicted_upper = 0.0;
  bool predicted_empty = false;
  double band_a = 0.0;
  std::string band_formula;
};

/// Least squares of ln N against ln(1/t) over levels >= min_level with a
/// nonzero count. Needs four such levels.
DimensionEstimate fit_dimension(const std::vector<double>& counts, const sampler::ScaleSchedule& s,
                                int min_level = 0);
nlohmann::json to_json(const DimensionEstimate& d);

struct DimensionInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool empty = false;  // the set is a.s. empty
  std::string formula;
};

/// Dimension interval for the exceptional set behind a criterion. Steep kinds
/// read (c_upper, c_lower) from f's ratio certificate; thick kinds use gamma.
DimensionInterval predicted_dimension(const testfn::TestFunction& f, const steep::Criterion& c);
/// Count-scaling exponent of a band-a surrogate when c_upper = c_lower = c:
/// nu (1 - c (1 - a)^2).
DimensionInterval band_adjusted_dimension(const testfn::TestFunction& f, double a);

/// kappa(delta) = int_{[-1,1]^nu} |delta + z|^{-alpha} prod (1 - |z_i|) dz, the
/// mean of |Y - Y'|^{-alpha} / (2t)^{-alpha} for Y, Y' uniform in two cells of
/// half-width t whose integer offset is delta. Memoized by |delta| pattern.
class CellKernel {
 public:
  CellKernel(int nu, double alpha);
  double operator()(std::vector<long long> delta);

 private:
  static constexpr unsigned kOrder = 20;
  double compute(const std::vector<long long>& delta) const;
  int nu_;
  double alpha_;
  int order_ = 0;
  std::vector<double> x_, w_;  // Gauss-Legendre on [0, 1]
  std::map<std::vector<long long>, double> memo_;
};

enum class WeightMode { exact_series, sandwich_midpoint, supplied };

const char* weight_mode_name(WeightMode m);
WeightMode weight_mode_from_name(const std::string& name);

/// W(Phi_n) for a point: the product of exact tube probabilities, or the
/// geometric midpoint p^n exp(-nu Sigma) of the two-sided bound.
double phi_probability(const testfn::TestFunction& f, const sampler::ScaleSchedule& s, int n, WeightMode mode,
                       double p);

struct FrostmanOptions {
  WeightMode mode = WeightMode::exact_series;
  double supplied_probability = 0.0;  // mode == supplied
  steep::EventOptions events;
  bool energy = true;
  double length_unit = 1.0;  // distances divided by this in the energy
  std::size_t max_energy_cells = 20000;
  int jobs = 1;
};

struct FrostmanMeasure {
  int level = 0;
  double alpha = 0.0;
  double phi_probability = 0.0;
  std::vector<std::uint64_t> cells;  // surviving cells
  double weight = 0.0;               // common weight 1 / (J_n W(Phi))
  double total_mass = 0.0;
  double energy = 0.0;
  bool zero = false;
  bool energy_computed = false;
};

FrostmanMeasure frostman_measure(const sampler::FieldReplica& r, const testfn::TestFunction& f, int n, double alpha,
                                 const FrostmanOptions& opt = {});

/// I_alpha of equal weights on the given cells of one level.
double alpha_energy(int nu, double alpha, const sampler::Lattice& L, const std::vector<std::uint64_t>& cells,
                    double weight, double length_unit = 1.0);

}  // namespace steepfield::fractal
