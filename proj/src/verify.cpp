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

#include "steepfield/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "steepfield/errors.hpp"
#include "steepfield/parallel.hpp"
#include "steepfield/rng.hpp"
#include "steepfield/specfun.hpp"
#include "steepfield/stats.hpp"

namespace steepfield::verify {

namespace {

// Suite tags keep the verify streams of different suites apart.
enum Tag : std::uint64_t {
  kCov = 1,
  kConfine = 2,
  kSandwich = 3,
  kIndep = 4,
  kNormal = 5,
  kLil = 6,
  kModulus = 7,
  kExceed = 8,
  kFrostman = 9,
  kNesting = 10,
  kVariance = 11,
};

std::uint64_t tag(std::uint64_t t, std::uint64_t sub = 0) { return rng::mix(t, sub); }

Entry within_se(std::string name, double est, double se, double target, double k) {
  Entry e;
  e.name = std::move(name);
  e.estimate = est;
  e.se = se;
  e.lower = target - k * se;
  e.upper = target + k * se;
  e.tolerance = k;
  e.pass = std::fabs(est - target) <= k * se;
  return e;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Decreasing grid starting at 1 holding `radii` and every jump of f down to the
// smallest radius.
std::vector<double> merged_grid(const testfn::TestFunction& f, std::vector<double> radii) {
  if (radii.empty()) throw DomainError("no radii given");
  const double lo = *std::min_element(radii.begin(), radii.end());
  radii.push_back(1.0);
  for (double J : f.jumps())
    if (J >= lo && J < 1.0) radii.push_back(J);
  for (double r : radii)
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("radius outside (0, 1]: " + fmt(r));
  std::sort(radii.begin(), radii.end(), std::greater<>());
  std::vector<double> out;
  for (double r : radii)
    if (out.empty() || r < out.back() * (1.0 - 1e-12)) out.push_back(r);
  return out;
}

std::size_t index_of(const std::vector<double>& grid, double r) {
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (std::fabs(grid[k] - r) <= 1e-12 * r) return k;
  throw StructuralError("radius missing from grid");
}

// Brownian path in Sigma-time through consecutive levels of length ds[i], each
// resolved into `sub` steps, and the tube flags of every level.
std::vector<bool> tube_levels(int nu, const std::vector<double>& ds, int sub, rng::Stream& st, std::uint64_t seed,
                              std::uint64_t key) {
  const double c = std::sqrt(2.0 * nu);
  std::vector<bool> out;
  std::vector<double> s(sub + 1), y(sub + 1);
  for (std::size_t n = 0; n < ds.size(); ++n) {
    const double h = ds[n] / sub, sd = std::sqrt(h);
    double x = 0.0;
    s[0] = 0.0;
    y[0] = 0.0;
    for (int k = 1; k <= sub; ++k) {
      x += sd * st.normal();
      s[k] = k * h;
      y[k] = x - c * s[k];
    }
    out.push_back(steep::tube_event(s, y, std::sqrt(ds[n]), true, seed, key, n + 1));
  }
  return out;
}

}  // namespace

bool VerifyReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const Entry& e) { return !e.gating || e.pass; });
}

Entry& VerifyReport::add(Entry e) {
  entries.push_back(std::move(e));
  return entries.back();
}

nlohmann::json to_json(const VerifyReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name},
                       {"estimate", e.estimate},
                       {"se", e.se},
                       {"lower", e.lower},
                       {"upper", e.upper},
                       {"tolerance", e.tolerance},
                       {"pass", e.pass},
                       {"gating", e.gating},
                       {"note", e.note}});
  }
  return {{"suite", r.suite}, {"seed", r.seed}, {"replicas", r.replicas}, {"pass", r.pass()},
          {"entries", entries}, {"data", r.data}};
}

std::vector<PointPair> default_covariance_pairs(int nu) {
  auto at = [nu](double x0, double t) {
    covariance::AvgPoint p;
    p.x.assign(nu, 0.0);
    p.x[0] = x0;
    p.t = t;
    return p;
  };
  return {
      {at(0.0, 0.2), at(0.0, 0.5)},     // concentric
      {at(0.0, 0.1), at(0.5, 0.15)},    // disjoint
      {at(0.0, 0.5), at(0.2, 0.1)},     // inclusion
      {at(0.0, 0.3), at(0.0, 0.3)},     // coincident
      {at(-0.1, 0.3), at(0.15, 0.2)},   // overlapping, neither regime
  };
}

VerifyReport verify_covariance(int nu, const std::vector<PointPair>& pairs, std::size_t replicas,
                               std::uint64_t seed, int jobs) {
  VerifyReport rep;
  rep.suite = "covariance";
  rep.seed = seed;
  rep.replicas = replicas;
  if (replicas < 2) throw DomainError("covariance suite needs at least 2 replicas");
  std::vector<covariance::AvgPoint> pts;
  for (const auto& [a, b] : pairs) {
    pts.push_back(a);
    pts.push_back(b);
  }
  const sampler::ExactSampler es(nu, pts);
  const std::size_t P = pts.size();
  std::vector<double> draws(replicas * P);
  parallel_for(replicas, jobs, [&](std::size_t i) {
    rng::Stream st(seed, rng::kVerify, tag(kCov, nu), i);
    es.draw(st, draws.data() + i * P);
  });
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    std::vector<double> a(replicas), b(replicas);
    for (std::size_t i = 0; i < replicas; ++i) {
      a[i] = draws[i * P + 2 * k];
      b[i] = draws[i * P + 2 * k + 1];
    }
    const auto kv = covariance::cov(pairs[k].first, pairs[k].second);
    const double est = stats::covariance(a, b), se = stats::covariance_se(a, b);
    Entry& e = rep.add(within_se("pair " + std::to_string(k) + " (" + covariance::regime_name(kv.regime) + ")", est,
                                 se, kv.value, 4.0));
    e.note = "analytic " + fmt(kv.value);
    rows.push_back({{"pair", k}, {"regime", covariance::regime_name(kv.regime)}, {"analytic", kv.value},
                    {"empirical", est}, {"se", se}});
  }
  rep.data = {{"nu", nu}, {"jitter", es.jitter()}, {"pairs", rows}};
  return rep;
}

VerifyReport verify_regimes(int cases) {
  VerifyReport rep;
  rep.suite = "regimes";
  constexpr double kTol = 1e-6;
  const std::pair<double, double> disj[] = {{0.05, 0.05}, {0.1, 0.3}, {0.2, 0.2}, {0.4, 0.1}, {0.5, 0.5}};
  const std::pair<double, double> incl[] = {{0.3, 0.05}, {0.5, 0.2}, {0.8, 0.1}, {1.0, 0.5}, {0.6, 0.3}};
  nlohmann::json rows = nlohmann::json::array();
  int done = 0;
  for (int nu = 2; nu <= 6 && done < cases; ++nu) {
    for (int side = 0; side < 2 && done < cases; ++side) {
      for (int i = 0; i < 5 && done < cases; ++i, ++done) {
        const auto [t, s] = side == 0 ? disj[i] : incl[i];
        const double r = side == 0 ? t + s : t - s;
        const double general = covariance::cov_general(nu, t, s, r);
        const double closed = side == 0 ? covariance::c_disj(nu, r) : covariance::c_incl(nu, t, r);
        Entry e;
        e.name = std::string(side == 0 ? "disjoint" : "inclusion") + " nu=" + std::to_string(nu) + " t=" + fmt(t) +
                 " s=" + fmt(s);
        e.estimate = general - closed;
        e.lower = -kTol;
        e.upper = kTol;
        e.tolerance = kTol;
        e.pass = std::fabs(general - closed) <= kTol;
        e.note = "closed form " + fmt(closed);
        rows.push_back({{"nu", nu}, {"t", t}, {"s", s}, {"r", r}, {"general", general}, {"closed", closed}});
        rep.add(std::move(e));
      }
    }
  }
  rep.replicas = static_cast<std::size_t>(done);
  rep.data = {{"cases", rows}};
  return rep;
}

Confinement estimate_confinement_p(std::size_t steps, std::size_t replicas, std::uint64_t seed,
                                   bool bridge_correction, int jobs) {
  if (steps == 0 || replicas < 2) throw DomainError("confinement needs steps >= 1 and replicas >= 2");
  const double dt = 1.0 / static_cast<double>(steps), sd = std::sqrt(dt);
  std::vector<double> hit(replicas);
  parallel_for(replicas, jobs, [&](std::size_t i) {
    rng::Stream st(seed, rng::kVerify, tag(kConfine, steps), i);
    double x = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double y = x + sd * st.normal();
      if (std::fabs(y) >= 1.0) return;
      if (bridge_correction) {
        const double pr = steep::bridge_stay_probability(x + 1.0, y + 1.0, 2.0, dt);
        if (pr < 1.0 && st.uniform() > pr) return;
      }
      x = y;
    }
    hit[i] = 1.0;
  });
  const auto m = stats::mean_se(hit);
  return {m.mean, m.se, steps, replicas};
}

VerifyReport verify_confinement(std::size_t steps, std::size_t replicas, std::uint64_t seed, int jobs) {
  VerifyReport rep;
  rep.suite = "confinement";
  rep.seed = seed;
  rep.replicas = replicas;
  const Confinement a = estimate_confinement_p(steps, replicas, seed, true, jobs);
  const Confinement b = estimate_confinement_p(2 * steps, replicas, rng::mix(seed, 1), true, jobs);
  const double joint = std::sqrt(a.se * a.se + b.se * b.se);
  Entry e = within_se("step halving", a.p - b.p, joint, 0.0, 3.0);
  e.note = "p(" + std::to_string(steps) + ")=" + fmt(a.p) + " p(" + std::to_string(2 * steps) + ")=" + fmt(b.p);
  rep.add(std::move(e));

  // The event is symmetric under B -> -B; the reflected walk is a fresh
  // sample of the same law.
  const double dt = 1.0 / static_cast<double>(steps), sd = std::sqrt(dt);
  std::vector<double> hit(replicas);
  parallel_for(replicas, jobs, [&](std::size_t i) {
    rng::Stream st(rng::mix(seed, 2), rng::kVerify, tag(kConfine, steps), i);
    double x = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double y = x - sd * st.normal();
      if (std::fabs(y) >= 1.0) return;
      const double pr = steep::bridge_stay_probability(1.0 - x, 1.0 - y, 2.0, dt);
      if (pr < 1.0 && st.uniform() > pr) return;
      x = y;
    }
    hit[i] = 1.0;
  });
  const auto m = stats::mean_se(hit);
  rep.add(within_se("mirror", m.mean - a.p, std::sqrt(m.se * m.se + a.se * a.se), 0.0, 3.0));

  Entry range;
  range.name = "p in (0, 1)";
  range.estimate = a.p;
  range.se = a.se;
  range.lower = 0.0;
  range.upper = 1.0;
  range.pass = a.p > 0.0 && a.p < 1.0;
  rep.add(std::move(range));

  const double series = steep::confinement_probability();
  Entry s = within_se("series value", a.p, a.se, series, 4.0);
  s.note = "theta-series " + fmt(series);
  rep.add(std::move(s));
  rep.data = {{"p", a.p}, {"se", a.se}, {"steps", steps}, {"p_half_step", b.p}, {"se_half_step", b.se},
              {"p_mirror", m.mean}, {"series", series}};
  return rep;
}

double level_dsigma(const testfn::TestFunction& f, const sampler::ScaleSchedule& s, int n) {
  if (n < 1 || n > s.depth()) throw DomainError("level outside the schedule");
  return f.sigma_between(s.t[n], s.t[n - 1]);
}

VerifyReport verify_sandwich(int nu, const std::vector<double>& dsigma, std::size_t replicas, std::uint64_t seed,
                             const Confinement& p, int substeps, int jobs) {
  VerifyReport rep;
  rep.suite = "sandwich";
  rep.seed = seed;
  rep.replicas = replicas;
  if (substeps < 1 || replicas < 2) throw DomainError("sandwich needs substeps >= 1 and replicas >= 2");
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < dsigma.size(); ++c) {
    const double ds = dsigma[c];
    std::vector<double> hit(replicas);
    const std::uint64_t sub_seed = rng::mix(seed, tag(kSandwich, c));
    parallel_for(replicas, jobs, [&](std::size_t i) {
      rng::Stream st(seed, rng::kVerify, tag(kSandwich, c), i);
      hit[i] = tube_levels(nu, {ds}, substeps, st, sub_seed, i)[0] ? 1.0 : 0.0;
    });
    const auto m = stats::mean_se(hit);
    const auto [lo, hi] = steep::tube_sandwich(nu, ds, p.p);
    // Bounds inherit the uncertainty of p through their factor.
    const double se_lo = p.p > 0.0 ? lo * p.se / p.p : 0.0, se_hi = p.p > 0.0 ? hi * p.se / p.p : 0.0;
    const double hits = m.mean * static_cast<double>(replicas);
    Entry e;
    e.name = "dSigma=" + fmt(ds);
    e.estimate = m.mean;
    e.se = m.se;
    e.lower = lo - 3.0 * std::sqrt(m.se * m.se + se_lo * se_lo);
    e.upper = hi + 3.0 * std::sqrt(m.se * m.se + se_hi * se_hi);
    e.tolerance = 3.0;
    e.pass = m.mean >= e.lower && m.mean <= e.upper && hits >= 10.0;
    if (hits < 10.0) e.note = "inconclusive: fewer than 10 hits";
    rep.add(std::move(e));
    const double exact = steep::tube_probability(nu, ds);
    Entry x = within_se("exact law dSigma=" + fmt(ds), m.mean, m.se, exact, 4.0);
    x.gating = false;
    x.note = "series probability " + fmt(exact);
    rep.add(std::move(x));
    rows.push_back({{"dsigma", ds}, {"freq", m.mean}, {"se", m.se}, {"lower", lo}, {"upper", hi}, {"exact", exact}});
  }
  rep.data = {{"nu", nu}, {"p", p.p}, {"p_se", p.se}, {"substeps", substeps}, {"cases", rows}};
  return rep;
}

VerifyReport verify_independence(int nu, double dsigma1, double dsigma2, std::size_t replicas, std::uint64_t seed,
                                 int substeps, int jobs) {
  VerifyReport rep;
  rep.suite = "independence";
  rep.seed = seed;
  rep.replicas = replicas;
  if (replicas < 2) throw DomainError("independence needs at least 2 replicas");
  std::vector<double> a(replicas), b(replicas);
  const std::uint64_t sub_seed = rng::mix(seed, tag(kIndep));
  parallel_for(replicas, jobs, [&](std::size_t i) {
    rng::Stream st(seed, rng::kVerify, tag(kIndep), i);
    const auto fl = tube_levels(nu, {dsigma1, dsigma2}, substeps, st, sub_seed, i);
    a[i] = fl[0] ? 1.0 : 0.0;
    b[i] = fl[1] ? 1.0 : 0.0;
  });
  const double R = static_cast<double>(replicas);
  const auto m1 = stats::mean_se(a), m2 = stats::mean_se(b);
  std::vector<double> psi(replicas);
  double both = 0.0;
  for (std::size_t i = 0; i < replicas; ++i) {
    both += a[i] * b[i];
    psi[i] = a[i] * b[i] - m2.mean * a[i] - m1.mean * b[i];
  }
  both /= R;
  const double se = stats::mean_se(psi).se;
  Entry e = within_se("Phi - P1 P2", both - m1.mean * m2.mean, se, 0.0, 3.0);
  e.note = "Phi=" + fmt(both) + " P1=" + fmt(m1.mean) + " P2=" + fmt(m2.mean);
  if (both * R < 10.0) {
    e.pass = false;
    e.note += "; inconclusive: fewer than 10 joint hits";
  }
  rep.add(std::move(e));
  rep.data = {{"nu", nu}, {"dsigma", {dsigma1, dsigma2}}, {"P1", m1.mean}, {"P2", m2.mean}, {"Phi", both},
              {"se", se}};
  return rep;
}

VerifyReport verify_normality_and_lil(const testfn::TestFunction& f, const std::vector<double>& radii,
                                      std::size_t replicas, std::uint64_t seed, int jobs) {
  VerifyReport rep;
  rep.suite = "normality";
  rep.seed = seed;
  rep.replicas = replicas;
  if (replicas < 8) throw DomainError("normality needs at least 8 replicas");
  const int nu = f.nu();
  const auto grid = merged_grid(f, radii);
  const steep::Plan plan = steep::make_plan(grid, f);
  const sampler::PointPath pp(nu, grid);
  std::vector<std::size_t> at;
  for (double r : radii) at.push_back(index_of(grid, r));
  std::vector<double> z(replicas * radii.size());
  parallel_for(replicas, jobs, [&](std::size_t i) {
    rng::Stream st(seed, rng::kVerify, tag(kNormal), i);
    std::vector<double> theta(grid.size());
    pp.draw(st, theta.data());
    const auto path = steep::compute_X(plan, theta);
    for (std::size_t k = 0; k < at.size(); ++k)
      z[i * at.size() + k] = path.sigma[at[k]] > 0.0 ? path.X[at[k]] / std::sqrt(path.sigma[at[k]]) : 0.0;
  });
  nlohmann::json ks = nlohmann::json::array();
  for (std::size_t k = 0; k < radii.size(); ++k) {
    std::vector<double> col(replicas);
    for (std::size_t i = 0; i < replicas; ++i) col[i] = z[i * radii.size() + k];
    const auto res = stats::ks_normal(col);
    Entry e;
    e.name = "KS t=" + fmt(radii[k]);
    e.estimate = res.p_value;
    e.lower = 0.01;
    e.upper = 1.0;
    e.tolerance = 0.01;
    e.pass = res.p_value >= 0.01;
    e.note = "D=" + fmt(res.d);
    rep.add(std::move(e));
    ks.push_back({{"t", radii[k]}, {"D", res.d}, {"p", res.p_value}});
  }

  // Law of the iterated logarithm for Brownian motion in Sigma-time.
  constexpr double kStep = 0.05, kFrom = 10.0, kTo = 1000.0;
  const std::size_t lil_reps = std::min<std::size_t>(replicas, 4000);
  const auto steps = static_cast<std::size_t>(std::llround(kTo / kStep));
  std::vector<double> peak(lil_reps);
  parallel_for(lil_reps, jobs, [&](std::size_t i) {
    rng::Stream st(seed, rng::kVerify, tag(kLil), i);
    const double sd = std::sqrt(kStep);
    double x = 0.0, best = -1e300;
    for (std::size_t k = 1; k <= steps; ++k) {
      x += sd * st.normal();
      const double S = k * kStep;
      if (S >= kFrom) best = std::max(best, x / std::sqrt(2.0 * S * std::log(std::log(S))));
    }
    peak[i] = best;
  });
  const double med = stats::median(peak);
  const double inside =
      static_cast<double>(std::count_if(peak.begin(), peak.end(), [](double v) { return v >= 0.5 && v <= 1.3; })) /
      static_cast<double>(lil_reps);
  Entry m;
  m.name = "LIL median";
  m.estimate = med;
  m.lower = 0.6;
  m.upper = 1.1;
  m.pass = med >= 0.6 && med <= 1.1;
  rep.add(std::move(m));
  Entry fr;
  fr.name = "LIL fraction in [0.5, 1.3]";
  fr.estimate = inside;
  fr.lower = 0.95;
  fr.upper = 1.0;
  fr.pass = inside >= 0.95;
  fr.gating = false;
  fr.note = "finite horizon: the limit is not reached at S = 1e3";
  rep.add(std::move(fr));
  rep.data = {{"nu", nu}, {"ks", ks}, {"lil_median", med}, {"lil_fraction", inside}, {"lil_replicas", lil_reps}};
  return rep;
}

VerifyReport verify_modulus(const testfn::TestFunction& f, const std::vector<int>& levels, std::size_t replicas,
                            std::uint64_t seed, int base_points, int radii_per_level, int jobs, double separation) {
  VerifyReport rep;
  rep.suite = "modulus";
  rep.seed = seed;
  rep.replicas = replicas;
  if (base_points < 1 || radii_per_level < 2 || replicas < 2) throw DomainError("modulus: bad sizes");
  if (!(separation >= 0.0 && separation < 1.0)) throw DomainError("modulus: separation must lie in [0, 1)");
  const int nu = f.nu();
  constexpr double kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  if (nu > 10) throw DomainError("modulus: dimension above 10");
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> means;
  for (int n : levels) {
    if (n < 1) throw DomainError("modulus levels start at 1");
    const double t_min = std::exp2(-static_cast<double>(n) * n);
    const double t_top = std::min(std::exp2(-static_cast<double>(n - 1) * (n - 1)), 0.75);
    const double sep = separation * std::exp2(-static_cast<double>(n + 1) * (n + 1)) * 2.0 * std::sqrt(nu);
    std::vector<double> sup_r;
    for (int k = 0; k < radii_per_level; ++k)
      sup_r.push_back(t_top * std::pow(t_min / t_top, static_cast<double>(k) / (radii_per_level - 1)));
    std::vector<double> all = sup_r;
    for (int k = 1; k <= 3; ++k) all.push_back(std::pow(t_top, k / 4.0));
    const auto grid = merged_grid(f, all);
    const steep::Plan plan = steep::make_plan(grid, f);
    const std::size_t L = grid.size();
    std::vector<std::size_t> sup_idx;
    for (std::size_t k = 0; k < L; ++k)
      if (grid[k] <= t_top * (1 + 1e-12) && grid[k] >= t_min * (1 - 1e-12)) sup_idx.push_back(k);

    // Base points on a Kronecker sequence inside [-0.8, 0.8]^nu, partners
    // displaced along the diagonal. Coincident partners reuse the base values.
    const bool twin = sep > 0.0;
    const std::size_t stride = twin ? 2 * L : L;
    std::vector<covariance::AvgPoint> pts;
    for (int b = 0; b < base_points; ++b) {
      std::vector<double> x(nu), y(nu);
      for (int d = 0; d < nu; ++d) {
        const double alpha = std::sqrt(kPrimes[d]) - std::floor(std::sqrt(kPrimes[d]));
        const double u = 0.5 + (b + 1) * alpha;
        x[d] = -0.8 + 1.6 * (u - std::floor(u));
        y[d] = x[d] + sep / std::sqrt(nu);
      }
      for (double t : grid) pts.push_back({x, t});
      if (twin)
        for (double t : grid) pts.push_back({y, t});
    }
    if (pts.size() > sampler::kExactMaxPoints) throw BudgetExceededError("modulus: too many points");
    const sampler::ExactSampler es(nu, pts);
    std::vector<double> stat(replicas), omega(replicas);
    parallel_for(replicas, jobs, [&](std::size_t i) {
      rng::Stream st(seed, rng::kVerify, tag(kModulus, n), i);
      std::vector<double> v(pts.size());
      es.draw(st, v.data());
      double best = 0.0, om = 0.0;
      for (int b = 0; b < base_points; ++b) {
        const double* tx = v.data() + b * stride;
        const double* ty = twin ? tx + L : tx;
        const auto px = steep::compute_X(plan, std::vector<double>(tx, tx + L));
        const auto py = steep::compute_X(plan, std::vector<double>(ty, ty + L));
        for (std::size_t k : sup_idx)
          if (px.sigma[k] > 0.0) best = std::max(best, std::fabs(py.X[k] - px.X[k]) / px.sigma[k]);
        om = std::max(om, std::fabs(ty[L - 1] - tx[L - 1]));
      }
      stat[i] = best;
      omega[i] = om;
    });
    const auto m = stats::mean_se(stat);
    means.push_back(m.mean);
    const double bound = std::exp2(-n / 4.0);
    Entry e;
    e.name = "n=" + std::to_string(n) + " E sup / 2^{-n/4}";
    e.estimate = m.mean;
    e.se = m.se;
    e.upper = bound;
    e.pass = m.mean <= bound;
    e.gating = false;
    e.note = "asymptotic bound; ratio " + fmt(m.mean / bound);
    rep.add(std::move(e));

    // Entropy-integral scale at the finest radius, report only.
    double dmax = 0.0, scale = 0.0;
    for (int b = 0; b < base_points; ++b) {
      const auto& px = pts[b * stride + L - 1];
      const auto& py = pts[b * stride + stride - 1];
      const double d = covariance::intrinsic_metric(px, py);
      dmax = std::max(dmax, d);
      if (d <= 0.0) continue;
      const double lg = std::log(std::pow(t_min, (3.0 - 2.0 * nu) / 4.0) / d);
      scale = std::max(scale, d * std::sqrt(std::max(1.0, lg)));
    }
    const auto om = stats::mean_se(omega);
    Entry r;
    r.name = "n=" + std::to_string(n) + " entropy ratio";
    r.estimate = scale > 0.0 ? om.mean / scale : 0.0;
    r.se = scale > 0.0 ? om.se / scale : 0.0;
    r.gating = false;
    r.pass = true;
    r.note = "E max |dtheta| over d sqrt(log); report only";
    rep.add(std::move(r));
    rows.push_back({{"n", n}, {"t_min", t_min}, {"t_top", t_top}, {"separation", sep}, {"points", pts.size()},
                    {"jitter", es.jitter()}, {"mean", m.mean}, {"se", m.se}, {"bound", bound},
                    {"omega", om.mean}, {"intrinsic_max", dmax}});
  }
  // First level from which the bound holds at every tested level.
  int n_star = -1;
  for (std::size_t k = means.size(); k-- > 0;) {
    if (means[k] > std::exp2(-levels[k] / 4.0)) break;
    n_star = levels[k];
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < means.size(); ++k) decreasing = decreasing && means[k] < means[k - 1];
  Entry d;
  d.name = "decreasing in n";
  d.estimate = means.empty() ? 0.0 : means.back();
  d.pass = decreasing && means.size() >= 2;
  rep.add(std::move(d));
  rep.data = {{"nu", nu}, {"levels", rows}, {"separation", separation},
              {"n_star", n_star < 0 ? nlohmann::json(nullptr) : nlohmann::json(n_star)}};
  return rep;
}

VerifyReport verify_exceedance_slope(const testfn::TestFunction& f, const std::vector<double>& neg_log_t,
                                     std::size_t replicas, std::uint64_t seed, double a, double tolerance,
                                     int jobs) {
  VerifyReport rep;
  rep.suite = "exceedance";
  rep.seed = seed;
  rep.replicas = replicas;
  if (neg_log_t.size() < 2 || replicas < 2) throw DomainError("exceedance needs two scales and two replicas");
  if (!f.ratios()) throw DomainError("exceedance needs certified limit ratios");
  const int nu = f.nu();
  std::vector<double> radii;
  for (double k : neg_log_t) radii.push_back(std::exp(-k));
  const auto grid = merged_grid(f, radii);
  const steep::Plan plan = steep::make_plan(grid, f);
  const sampler::PointPath pp(nu, grid);
  std::vector<std::size_t> at;
  for (double r : radii) at.push_back(index_of(grid, r));
  const double tau = std::sqrt(2.0 * nu) * (1.0 - a);
  const std::size_t K = at.size();
  std::vector<double> w(replicas * K);
  parallel_for(replicas, jobs, [&](std::size_t i) {
    rng::Stream st(seed, rng::kVerify, tag(kExceed), i);
    std::vector<double> theta(grid.size());
    pp.draw(st, theta.data());
    const auto path = steep::compute_X(plan, theta);
    for (std::size_t k = 0; k < K; ++k) {
      // Tilted path X' = X + tau Sigma; likelihood ratio exp(-tau X' + tau^2 Sigma / 2).
      const double S = path.sigma[at[k]];
      const double xp = path.X[at[k]] + tau * S;
      w[i * K + k] = xp >= tau * S ? std::exp(-tau * xp + 0.5 * tau * tau * S) : 0.0;
    }
  });
  std::vector<double> x, y, ym;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> col(replicas);
    for (std::size_t i = 0; i < replicas; ++i) col[i] = w[i * K + k];
    const auto m = stats::mean_se(col);
    if (!(m.mean > 0.0)) throw InsufficientDataError("exceedance: zero estimate at t = " + fmt(radii[k]));
    const double S = plan.sigma[at[k]];
    const double z = tau * std::sqrt(S);
    x.push_back(std::log(radii[k]));
    y.push_back(std::log(m.mean));
    ym.push_back(z > 0.0 ? std::log(m.mean * z * std::sqrt(2.0 * std::numbers::pi)) : std::log(m.mean));
    rows.push_back({{"t", radii[k]}, {"sigma", S}, {"P", m.mean}, {"se", m.se}, {"rel_se", m.se / m.mean}});
  }
  const auto fit = stats::linear_fit(x, y);
  const auto fit_m = stats::linear_fit(x, ym);
  const double target = nu * f.ratios()->upper * (1.0 - a) * (1.0 - a);
  const double band = target > 0.0 ? tolerance * target : tolerance;
  Entry e;
  e.name = "slope";
  e.estimate = fit.slope;
  e.se = fit.slope_se;
  e.lower = target - band;
  e.upper = target + band;
  e.tolerance = tolerance;
  e.pass = std::fabs(fit.slope - target) <= band;
  e.note = "target " + fmt(target);
  if (f.ratios()->upper != f.ratios()->lower) e.note += "; upper ratio used, limit does not exist";
  rep.add(std::move(e));
  Entry d;
  d.name = "Mills-corrected slope";
  d.estimate = fit_m.slope;
  d.se = fit_m.slope_se;
  d.lower = target - band;
  d.upper = target + band;
  d.tolerance = tolerance;
  d.pass = std::fabs(fit_m.slope - target) <= band;
  d.gating = false;
  d.note = "removes the polynomial prefactor of the Gaussian tail";
  rep.add(std::move(d));
  rep.data = {{"nu", nu}, {"a", a}, {"tau", tau}, {"target", target}, {"raw_slope", fit.slope},
              {"mills_slope", fit_m.slope}, {"scales", rows}};
  return rep;
}

VerifyReport verify_frostman_mass(const testfn::TestFunction& f, const sampler::ScaleSchedule& s,
                                  const std::vector<int>& levels, std::size_t replicas, std::uint64_t seed,
                                  int jobs) {
  VerifyReport rep;
  rep.suite = "frostman";
  rep.seed = seed;
  rep.replicas = replicas;
  if (replicas < 2) throw DomainError("frostman needs at least 2 replicas");
  const int nu = f.nu();
  for (int n : levels)
    if (n < 1 || n > s.depth()) throw DomainError("frostman level outside the schedule");
  std::vector<double> mass(replicas * levels.size());
  parallel_for(replicas, jobs, [&](std::size_t i) {
    const std::uint64_t rs = rng::mix(seed, tag(kFrostman, i));
    const auto r = sampler::sample_lattice_hierarchical(nu, s, rs, 1);
    fractal::FrostmanOptions opt;
    opt.energy = false;
    opt.events.seed = rs;
    for (std::size_t k = 0; k < levels.size(); ++k)
      mass[i * levels.size() + k] = fractal::frostman_measure(r, f, levels[k], 0.0, opt).total_mass;
  });
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    std::vector<double> col(replicas), sq(replicas);
    for (std::size_t i = 0; i < replicas; ++i) {
      col[i] = mass[i * levels.size() + k];
      sq[i] = col[i] * col[i];
    }
    const auto m = stats::mean_se(col);
    const auto m2 = stats::mean_se(sq);
    const double W = fractal::phi_probability(f, s, levels[k], fractal::WeightMode::exact_series, 0.0);
    Entry e = within_se("E mass n=" + std::to_string(levels[k]), m.mean, m.se, 1.0, 4.0);
    e.note = "W(Phi)=" + fmt(W) + " E mass^2=" + fmt(m2.mean);
    rep.add(std::move(e));
    rows.push_back({{"n", levels[k]}, {"mean", m.mean}, {"se", m.se}, {"second_moment", m2.mean},
                    {"second_moment_se", m2.se}, {"phi_probability", W}});
  }
  rep.data = {{"nu", nu}, {"schedule", sampler::to_json(s)}, {"levels", rows}};
  return rep;
}

VerifyReport verify_nesting(const testfn::TestFunction& f, const sampler::ScaleSchedule& s, double a, int window,
                            double gamma_thick, std::size_t replicas, std::uint64_t seed, int jobs) {
  VerifyReport rep;
  rep.suite = "nesting";
  rep.seed = seed;
  rep.replicas = replicas;
  const int nu = f.nu();
  auto crit = [&](steep::Kind k) {
    steep::Criterion c;
    c.kind = k;
    c.a = a;
    c.window = window;
    c.gamma = gamma_thick;
    return c;
  };
  struct Pair {
    std::string name;
    steep::Kind inner, outer;
  };
  std::vector<Pair> pairs = {{"steep in sub", steep::Kind::steep, steep::Kind::sub_steep},
                             {"sub in super", steep::Kind::sub_steep, steep::Kind::super_steep},
                             {"steep in sequential", steep::Kind::steep, steep::Kind::sequential},
                             {"sequential in super", steep::Kind::sequential, steep::Kind::super_steep}};
  if (nu >= 3 && gamma_thick > 0.0) pairs.push_back({"lasting in thick", steep::Kind::lasting, steep::Kind::thickPoly});
  std::vector<steep::Kind> kinds;
  for (const auto& p : pairs)
    for (auto k : {p.inner, p.outer})
      if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);

  std::vector<std::vector<std::size_t>> bad(replicas, std::vector<std::size_t>(pairs.size()));
  std::vector<std::vector<std::size_t>> flagged(replicas, std::vector<std::size_t>(kinds.size()));
  parallel_for(replicas, jobs, [&](std::size_t i) {
    const std::uint64_t rs = rng::mix(seed, tag(kNesting, i));
    const auto r = sampler::sample_lattice_hierarchical(nu, s, rs, 1);
    std::vector<steep::SetMask> masks;
    for (auto k : kinds) masks.push_back(steep::detect_mask(r, f, crit(k), 1));
    auto idx = [&](steep::Kind k) { return std::find(kinds.begin(), kinds.end(), k) - kinds.begin(); };
    for (std::size_t q = 0; q < kinds.size(); ++q)
      for (const auto& lv : masks[q].levels) flagged[i][q] += std::count(lv.begin(), lv.end(), 1);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& in = masks[idx(pairs[p].inner)];
      const auto& out = masks[idx(pairs[p].outer)];
      for (std::size_t n = 0; n < in.levels.size(); ++n)
        for (std::size_t j = 0; j < in.levels[n].size(); ++j)
          if (in.levels[n][j] && !out.levels[n][j]) ++bad[i][p];
    }
  });
  nlohmann::json viol = nlohmann::json::object(), counts = nlohmann::json::object();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < replicas; ++i) total += bad[i][p];
    Entry e;
    e.name = pairs[p].name;
    e.estimate = static_cast<double>(total);
    e.pass = total == 0;
    e.note = "violating cells over all replicas and levels";
    rep.add(std::move(e));
    viol[pairs[p].name] = total;
  }
  for (std::size_t q = 0; q < kinds.size(); ++q) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < replicas; ++i) total += flagged[i][q];
    counts[steep::kind_name(kinds[q])] = total;
  }
  rep.data = {{"nu", nu}, {"a", a}, {"window", window}, {"gamma", gamma_thick}, {"violations", viol},
              {"flagged_cells", counts}};
  return rep;
}

VerifyReport verify_variance(const testfn::TestFunction& f, const sampler::ScaleSchedule& s, std::size_t replicas,
                             std::uint64_t seed, int jobs) {
  VerifyReport rep;
  rep.suite = "variance";
  rep.seed = seed;
  rep.replicas = replicas;
  if (replicas < 2 || s.depth() < 1) throw DomainError("variance needs two replicas and one level");
  const int nu = f.nu();
  std::vector<double> radii(s.t.begin() + 1, s.t.end());
  const auto grid = merged_grid(f, radii);
  const steep::Plan plan = steep::make_plan(grid, f);
  const sampler::PointPath pp(nu, grid);
  std::vector<std::size_t> at;
  for (double r : radii) at.push_back(index_of(grid, r));
  std::vector<double> sq(replicas * at.size());
  parallel_for(replicas, jobs, [&](std::size_t i) {
    rng::Stream st(seed, rng::kVerify, tag(kVariance), i);
    std::vector<double> theta(grid.size());
    pp.draw(st, theta.data());
    const auto path = steep::compute_X(plan, theta);
    for (std::size_t k = 0; k < at.size(); ++k) sq[i * at.size() + k] = path.X[at[k]] * path.X[at[k]];
  });
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < at.size(); ++k) {
    std::vector<double> col(replicas);
    for (std::size_t i = 0; i < replicas; ++i) col[i] = sq[i * at.size() + k];
    const auto m = stats::mean_se(col);
    const double S = plan.sigma[at[k]];
    rep.add(within_se("n=" + std::to_string(k + 1), m.mean, m.se, S, 4.0)).note = "Sigma=" + fmt(S);
    rows.push_back({{"n", k + 1}, {"t", radii[k]}, {"var", m.mean}, {"se", m.se}, {"sigma", S}});
  }
  rep.data = {{"nu", nu}, {"levels", rows}};
  return rep;
}

std::vector<std::string> suite_names() {
  return {"covariance", "regimes",  "confinement", "sandwich", "independence", "normality",
          "modulus",    "exceedance", "frostman",  "nesting",  "variance"};
}

}  // namespace steepfield::verify
