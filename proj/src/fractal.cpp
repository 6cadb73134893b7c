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


#include "steepfield/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "steepfield/errors.hpp"
#include "steepfield/specfun.hpp"
#include "steepfield/stats.hpp"

namespace steepfield::fractal {

std::vector<double> box_count(const steep::SetMask& m) {
  std::vector<double> out;
  for (const auto& lv : m.levels) out.push_back(static_cast<double>(std::count(lv.begin(), lv.end(), 1)));
  return out;
}

DimensionEstimate fit_dimension(const std::vector<double>& counts, const sampler::ScaleSchedule& s, int min_level) {
  if (static_cast<int>(counts.size()) > s.depth() + 1) throw StructuralError("more counts than schedule levels");
  DimensionEstimate d;
  std::vector<double> x, y;
  for (int n = std::max(0, min_level); n < static_cast<int>(counts.size()); ++n) {
    if (counts[n] < 0.0) throw StructuralError("negative count");
    if (counts[n] <= 0.0) continue;
    d.levels.push_back(n);
    d.scales.push_back(s.t[n]);
    d.counts.push_back(counts[n]);
    x.push_back(-std::log(s.t[n]));
    y.push_back(std::log(counts[n]));
  }
  if (x.size() < 4) throw InsufficientDataError("fit_dimension needs at least 4 levels with nonzero counts");
  const auto fit = stats::linear_fit(x, y);
  d.slope = fit.slope;
  d.intercept = fit.intercept;
  d.r2 = fit.r2;
  d.slope_se = fit.slope_se;
  return d;
}

nlohmann::json to_json(const DimensionEstimate& d) {
  return {{"slope", d.slope},
          {"slope_se", d.slope_se},
          {"ci95", {d.slope - 1.96 * d.slope_se, d.slope + 1.96 * d.slope_se}},
          {"intercept", d.intercept},
          {"r2", d.r2},
          {"levels", d.levels},
          {"scales", d.scales},
          {"counts", d.counts},
          {"predicted", {{"lower", d.predicted_lower}, {"upper", d.predicted_upper}, {"empty", d.predicted_empty}}},
          {"band_a", d.band_a},
          {"band_formula", d.band_formula}};
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Equal certificates make the two ends agree up to rounding.
DimensionInterval interval(double lo, double hi, std::string formula) {
  return {std::min(lo, hi), hi, false, std::move(formula)};
}

DimensionInterval empty_set(std::string why) { return {0.0, 0.0, true, std::move(why)}; }

}  // namespace

DimensionInterval predicted_dimension(const testfn::TestFunction& f, const steep::Criterion& c) {
  const int nu = f.nu();
  const double v = nu;
  using steep::Kind;
  switch (c.kind) {
    case Kind::steep:
    case Kind::sub_steep:
    case Kind::super_steep:
    case Kind::sequential: {
      if (!f.ratios()) throw DomainError("predicted_dimension needs ratio certificates on f");
      const double cu = f.ratios()->upper, cl = f.ratios()->lower;
      const double lo = v * (1.0 - 2.0 * cu + cl);
      if (c.kind == Kind::steep || c.kind == Kind::sub_steep) {
        if (cu > 1.0) return empty_set("c_upper > 1");
        return interval(lo, v * (1.0 - cu), "[nu(1 - 2 c_upper + c_lower), nu(1 - c_upper)]");
      }
      if (cl > 1.0) return empty_set("c_lower > 1");
      return interval(lo, v * (1.0 - cl), "[nu(1 - 2 c_upper + c_lower), nu(1 - c_lower)]");
    }
    case Kind::thick2D: {
      const double g2 = c.gamma * c.gamma;
      if (g2 > 2.0 * std::numbers::pi) return empty_set("gamma > sqrt(2 pi)");
      return interval(2.0 - g2 / std::numbers::pi, 2.0 - g2 / std::numbers::pi, "2 - gamma^2 / pi");
    }
    case Kind::thickPoly:
    case Kind::seq_thick: {
      const double g2 = c.gamma * c.gamma;
      if (g2 > 1.0) return empty_set("gamma > 1");
      return interval(v * (1.0 - g2), v * (1.0 - g2), "nu(1 - gamma^2)");
    }
    case Kind::lasting: {
      const double g2 = c.gamma * c.gamma;
      if (g2 > 1.0) return empty_set("gamma > 1");
      return interval(v * (1.0 - 2.0 * g2), v * (1.0 - g2), "[nu(1 - 2 gamma^2), nu(1 - gamma^2)]");
    }
    case Kind::oscillatory: {
      const double g2 = std::max(c.gamma * c.gamma, c.gamma2 * c.gamma2);
      if (nu == 2) {
        if (g2 > 2.0 * std::numbers::pi) return empty_set("max(gamma1, gamma2) > sqrt(2 pi)");
        return interval(2.0 - g2 / std::numbers::pi, 2.0 - g2 / std::numbers::pi, "2 - max(gamma1^2, gamma2^2) / pi");
      }
      if (g2 > 1.0) return empty_set("max(gamma1, gamma2) > 1");
      return interval(v * (1.0 - 2.0 * g2), v * (1.0 - g2), "[nu(1 - 2 g^2), nu(1 - g^2)], g = max(gamma1, gamma2)");
    }
  }
  throw DomainError("unknown criterion kind");
}

DimensionInterval band_adjusted_dimension(const testfn::TestFunction& f, double a) {
  if (!f.ratios()) throw DomainError("band_adjusted_dimension needs ratio certificates on f");
  const double c = f.ratios()->upper;
  const double d = f.nu() * (1.0 - c * (1.0 - a) * (1.0 - a));
  return {d, d, c > 1.0, "nu (1 - c (1 - a)^2) with c = " + fmt(c) + ", a = " + fmt(a)};
}

CellKernel::CellKernel(int nu, double alpha) : nu_(nu), alpha_(alpha) {
  if (nu < 1) throw DomainError("dimension must be >= 1");
  if (!(alpha >= 0.0 && alpha < nu)) throw DomainError("alpha must lie in [0, nu)");
  // Gauss-Legendre rule mapped from [-1, 1] to [0, 1].
  using Rule = boost::math::quadrature::gauss<double, kOrder>;
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
    const double a = Rule::abscissa()[i], w = Rule::weights()[i];
    x_.push_back(0.5 * (1.0 + a));
    w_.push_back(0.5 * w);
    if (a != 0.0) {
      x_.push_back(0.5 * (1.0 - a));
      w_.push_back(0.5 * w);
    }
  }
  order_ = static_cast<int>(x_.size());
}

double CellKernel::operator()(std::vector<long long> delta) {
  for (auto& d : delta) d = d < 0 ? -d : d;
  std::sort(delta.begin(), delta.end());
  auto it = memo_.find(delta);
  if (it != memo_.end()) return it->second;
  const double v = compute(delta);
  memo_.emplace(delta, v);
  return v;
}

double CellKernel::compute(const std::vector<long long>& delta) const {
  const int nu = nu_;
  if (static_cast<int>(delta.size()) != nu) throw StructuralError("offset dimension differs from nu");
  const int m = order_;
  double total = 0.0;
  std::vector<int> idx(nu);
  for (int pattern = 0; pattern < (1 << nu); ++pattern) {
    // e_i = +1: z_i in [0, 1]; e_i = -1: z_i in [-1, 0].
    std::vector<int> e(nu);
    bool singular = true;
    for (int i = 0; i < nu; ++i) {
      e[i] = (pattern >> i) & 1 ? -1 : 1;
      const long long d = delta[i];
      singular = singular && (d == 0 || (e[i] == -1 && d == 1));
    }
    if (!singular) {
      std::fill(idx.begin(), idx.end(), 0);
      std::size_t count = 1;
      for (int i = 0; i < nu; ++i) count *= m;
      for (std::size_t c = 0; c < count; ++c) {
        std::size_t rem = c;
        double r2 = 0.0, wt = 1.0;
        for (int i = 0; i < nu; ++i) {
          const int q = static_cast<int>(rem % m);
          rem /= m;
          const double z = e[i] * x_[q];
          const double w = static_cast<double>(delta[i]) + z;
          r2 += w * w;
          wt *= w_[q] * (1.0 - std::fabs(z));
        }
        total += wt * std::pow(r2, -0.5 * alpha_);
      }
      continue;
    }
    // Corner singularity at w = 0. With w_i = sigma_i u_i, u in [0, 1]^nu,
    // split by the largest coordinate u_k = s, u_i = s v_i. The tent weight is
    // a polynomial in s, so the radial integral is exact.
    std::vector<double> sigma(nu), A(nu);
    for (int i = 0; i < nu; ++i) {
      sigma[i] = delta[i] == 0 ? e[i] : 1.0;  // delta_i = 1 only with z_i in [-1, 0], so w_i in [0, 1]
      A[i] = 1.0 + e[i] * static_cast<double>(delta[i]);
    }
    std::size_t count = 1;
    for (int i = 0; i < nu - 1; ++i) count *= m;
    for (int k = 0; k < nu; ++k) {
      for (std::size_t c = 0; c < count; ++c) {
        std::size_t rem = c;
        std::vector<double> vv(nu, 1.0);
        double wt = 1.0, r2 = 1.0;
        for (int i = 0; i < nu; ++i) {
          if (i == k) continue;
          const int q = static_cast<int>(rem % m);
          rem /= m;
          vv[i] = x_[q];
          wt *= w_[q];
          r2 += x_[q] * x_[q];
        }
        // prod_i (A_i + B_i s), B_i = -e_i sigma_i v_i.
        std::vector<double> poly{1.0};
        for (int i = 0; i < nu; ++i) {
          const double B = -e[i] * sigma[i] * vv[i];
          std::vector<double> next(poly.size() + 1, 0.0);
          for (std::size_t p = 0; p < poly.size(); ++p) {
            next[p] += poly[p] * A[i];
            next[p + 1] += poly[p] * B;
          }
          poly.swap(next);
        }
        double radial = 0.0;
        for (std::size_t p = 0; p < poly.size(); ++p) radial += poly[p] / (nu - alpha_ + static_cast<double>(p));
        total += wt * std::pow(r2, -0.5 * alpha_) * radial;
      }
    }
  }
  return total;
}

double alpha_energy(int nu, double alpha, const sampler::Lattice& L, const std::vector<std::uint64_t>& cells,
                    double weight, double length_unit) {
  CellKernel K(nu, alpha);
  std::vector<std::vector<long long>> ix(cells.size(), std::vector<long long>(nu));
  for (std::size_t a = 0; a < cells.size(); ++a) {
    std::uint64_t j = cells[a];
    for (int k = 0; k < nu; ++k) {
      ix[a][k] = static_cast<long long>(j % L.per_axis);
      j /= L.per_axis;
    }
  }
  double sum = 0.0;
  std::vector<long long> d(nu);
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = a; b < cells.size(); ++b) {
      for (int k = 0; k < nu; ++k) d[k] = ix[a][k] - ix[b][k];
      sum += (a == b ? 1.0 : 2.0) * K(d);
    }
  }
  return weight * weight * std::pow(2.0 * L.half_width / length_unit, -alpha) * sum;
}

const char* weight_mode_name(WeightMode m) {
  switch (m) {
    case WeightMode::exact_series: return "exact_series";
    case WeightMode::sandwich_midpoint: return "sandwich_midpoint";
    case WeightMode::supplied: return "supplied";
  }
  return "?";
}

WeightMode weight_mode_from_name(const std::string& name) {
  for (WeightMode m : {WeightMode::exact_series, WeightMode::sandwich_midpoint, WeightMode::supplied})
    if (name == weight_mode_name(m)) return m;
  throw StructuralError("unknown weight mode '" + name + "'");
}

double phi_probability(const testfn::TestFunction& f, const sampler::ScaleSchedule& s, int n, WeightMode mode,
                       double p) {
  if (n < 1 || n > s.depth()) throw DomainError("Phi level must be in 1..depth");
  if (mode == WeightMode::sandwich_midpoint) {
    return std::pow(p, n) * std::exp(-f.nu() * f.sigma_between(s.t[n], 1.0));
  }
  if (mode != WeightMode::exact_series) throw DomainError("phi_probability: supplied mode has no formula");
  double prob = 1.0;
  for (int i = 1; i <= n; ++i) prob *= steep::tube_probability(f.nu(), f.sigma_between(s.t[i], s.t[i - 1]));
  return prob;
}

FrostmanMeasure frostman_measure(const sampler::FieldReplica& r, const testfn::TestFunction& f, int n, double alpha,
                                 const FrostmanOptions& opt) {
  if (f.nu() != r.nu) throw DomainError("test function and replica dimensions differ");
  FrostmanMeasure mu;
  mu.level = n;
  mu.alpha = alpha;
  mu.phi_probability = opt.mode == WeightMode::supplied
                           ? opt.supplied_probability
                           : phi_probability(f, r.schedule, n, opt.mode, steep::confinement_probability());
  if (!(mu.phi_probability > 0.0)) throw DomainError("Phi probability must be positive");
  const auto flags = steep::detect_phi(r, f, n, opt.events, opt.jobs);
  for (std::uint64_t j = 0; j < flags.size(); ++j)
    if (flags[j]) mu.cells.push_back(j);
  const double J = static_cast<double>(flags.size());
  mu.weight = 1.0 / (J * mu.phi_probability);
  mu.total_mass = mu.weight * static_cast<double>(mu.cells.size());
  mu.zero = mu.cells.empty();
  if (opt.energy && !mu.zero && mu.cells.size() <= opt.max_energy_cells) {
    mu.energy = alpha_energy(r.nu, alpha, sampler::lattice(r.nu, r.schedule, n), mu.cells, mu.weight, opt.length_unit);
    mu.energy_computed = true;
  }
  return mu;
}

}  // namespace steepfield::fractal
