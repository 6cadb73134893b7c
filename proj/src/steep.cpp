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


#include "steepfield/steep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "steepfield/errors.hpp"
#include "steepfield/parallel.hpp"
#include "steepfield/rng.hpp"
#include "steepfield/specfun.hpp"
#include "steepfield/stats.hpp"

namespace steepfield::steep {

namespace {

bool same_radius(double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(a, b); }

std::size_t find_radius(const std::vector<double>& t, double r, std::size_t from) {
  for (std::size_t k = from; k < t.size(); ++k)
    if (same_radius(t[k], r)) return k;
  std::ostringstream os;
  os << "path grid does not contain level radius " << r;
  throw StructuralError(os.str());
}

}  // namespace

Plan make_plan(const std::vector<double>& grid, const testfn::TestFunction& f) {
  if (!f.validated()) throw StructuralError("test function has not been certified");
  if (grid.empty() || grid[0] != 1.0) throw StructuralError("X grid must start at t = 1");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] < grid[k - 1] && grid[k] > 0.0)) throw StructuralError("X grid must be strictly decreasing in (0, 1]");
  for (double J : f.jumps()) {
    if (J < grid.back() || J >= 1.0) continue;
    if (!std::any_of(grid.begin(), grid.end(), [J](double t) { return same_radius(t, J); })) {
      std::ostringstream os;
      os << "X grid misses the jump of f at t = " << J;
      throw StructuralError(os.str());
    }
  }
  const int nu = f.nu();
  Plan p;
  p.t = grid;
  p.weight.assign(grid.size(), 0.0);
  p.sigma.assign(grid.size(), 0.0);
  double g_prev = specfun::green(nu, grid[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double lo = grid[k], hi = grid[k - 1];
    const double g = specfun::green(nu, lo);
    const double ds = f.sigma_between(lo, hi);
    const double mid = std::sqrt(lo * hi);
    const testfn::Segment& seg = f.segments()[f.segment_index(mid)];
    const bool constant = seg.kind == testfn::SegmentKind::affine_inv_sqrt_g && seg.params.size() > 1 &&
                          seg.params[1] == 0.0 && seg.left <= lo * (1 + 1e-12) && seg.right >= hi * (1 - 1e-12);
    if (constant) {
      p.weight[k] = seg.params[0];
    } else {
      const double dg = g - g_prev;
      const double fm = f(mid);
      p.weight[k] = dg > 0.0 ? std::copysign(std::sqrt(ds / dg), fm) : 0.0;
    }
    p.sigma[k] = p.sigma[k - 1] + ds;
    g_prev = g;
  }
  return p;
}

SteepPath compute_X(const Plan& plan, const std::vector<double>& theta, std::uint64_t point) {
  if (theta.size() != plan.t.size()) throw StructuralError("theta and grid lengths differ");
  SteepPath p{point, plan.t, std::vector<double>(theta.size(), 0.0), plan.sigma};
  for (std::size_t k = 1; k < theta.size(); ++k) p.X[k] = p.X[k - 1] + plan.weight[k] * (theta[k] - theta[k - 1]);
  return p;
}

SteepPath compute_X(const std::vector<double>& grid, const std::vector<double>& theta, const testfn::TestFunction& f,
                    std::uint64_t point) {
  return compute_X(make_plan(grid, f), theta, point);
}

double ratio_at(const SteepPath& p, std::size_t k) {
  if (k >= p.t.size()) throw DomainError("ratio: index outside the path");
  if (!(p.sigma[k] > 0.0)) throw DomainError("ratio undefined where Sigma_t = 0 (t = 1)");
  return p.X[k] / p.sigma[k];
}

double ratio(const SteepPath& p, double t) { return ratio_at(p, find_radius(p.t, t, 0)); }

double bridge_stay_probability(double x, double y, double w, double T) {
  if (!(x > 0.0 && x < w && y > 0.0 && y < w)) return 0.0;
  if (!(T > 0.0)) return 1.0;
  // Both barriers far in units of the bridge spread: the loss is below e^-40.
  if (2.0 * x * y / T > 40.0 && 2.0 * (w - x) * (w - y) / T > 40.0) return 1.0;
  double sum = 1.0 - std::exp(-2.0 * x * y / T);
  for (int k = 1; k < 1000; ++k) {
    double add = 0.0;
    for (int sgn : {1, -1}) {
      const double kw = sgn * k * w;
      add += std::exp(-2.0 * kw * (kw + y - x) / T) - std::exp(-2.0 * (x + kw) * (y + kw) / T);
    }
    sum += add;
    if (2.0 * (k - 1.0) * (k - 1.0) * w * w / T > 80.0) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

bool tube_event(const std::vector<double>& s, const std::vector<double>& y, double width, bool bridge_correction,
                std::uint64_t seed, std::uint64_t key, std::uint64_t level) {
  if (!(width > 0.0)) {
    return std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
  }
  for (double v : y)
    if (std::fabs(v) > width) return false;
  if (!bridge_correction) return true;
  rng::Stream st(seed, rng::kTube, level, key);
  for (std::size_t k = 1; k < y.size(); ++k) {
    const double pr = bridge_stay_probability(y[k - 1] + width, y[k] + width, 2.0 * width, s[k] - s[k - 1]);
    if (pr < 1.0 && st.uniform() > pr) return false;
  }
  return true;
}

EventFlags detect_events(const SteepPath& path, int nu, const std::vector<double>& level_t, const EventOptions& opt) {
  if (level_t.size() < 2) throw StructuralError("detect_events needs at least one level");
  const double c = std::sqrt(2.0 * nu);
  EventFlags ev;
  ev.min_substeps_seen = 1 << 30;
  std::size_t i0 = find_radius(path.t, level_t[0], 0);
  bool phi = true;
  for (std::size_t n = 1; n < level_t.size(); ++n) {
    const std::size_t i1 = find_radius(path.t, level_t[n], i0 + 1);
    std::vector<double> s, y;
    for (std::size_t k = i0; k <= i1; ++k) {
      const double ds = path.sigma[k] - path.sigma[i0];
      s.push_back(ds);
      y.push_back(path.X[k] - path.X[i0] - c * ds);
    }
    const int sub = static_cast<int>(i1 - i0);
    ev.min_substeps_seen = std::min(ev.min_substeps_seen, sub);
    const bool p = tube_event(s, y, std::sqrt(s.back()), opt.bridge_correction, opt.seed, opt.key, n);
    phi = phi && p;
    ev.P.push_back(p);
    ev.Phi.push_back(phi);
    i0 = i1;
  }
  ev.coarse_warning = ev.min_substeps_seen < opt.min_substeps;
  return ev;
}

double tube_probability(int nu, double dsigma) {
  if (nu < 2) throw DomainError("dimension must be >= 2");
  if (!(dsigma > 0.0)) return 1.0;
  const double beta = std::sqrt(2.0 * nu * dsigma);
  // Killed-BM density on (0, 2) started at 1, integrated against the
  // Girsanov weight exp(-beta (v - 1) - beta^2 / 2). Completing the square in
  // each image term absorbs the beta^2 / 2.
  auto piece = [beta](double m) {
    const double lo = beta - m, hi = 2.0 - m + beta;
    double diff;
    if (lo > 0.0) {
      diff = stats::normal_sf(lo) - stats::normal_sf(hi);
    } else {
      diff = stats::normal_cdf(hi) - stats::normal_cdf(lo);
    }
    if (diff <= 0.0) return 0.0;
    return std::exp(beta * (1.0 - m) + std::log(diff));
  };
  double sum = 0.0;
  for (int k = -30; k <= 30; ++k) sum += piece(1.0 - 4.0 * k) - piece(-1.0 - 4.0 * k);
  return sum;
}

std::pair<double, double> tube_sandwich(int nu, double dsigma, double p) {
  const double a = nu * dsigma, b = std::sqrt(2.0 * nu * dsigma);
  return {p * std::exp(-a - b), p * std::exp(-a + b)};
}

double confinement_probability() {
  double s = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double m = 2.0 * k + 1.0;
    s += (k % 2 == 0 ? 1.0 : -1.0) / m * std::exp(-m * m * std::numbers::pi * std::numbers::pi / 8.0);
  }
  return 4.0 / std::numbers::pi * s;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::steep: return "steep";
    case Kind::super_steep: return "super_steep";
    case Kind::sub_steep: return "sub_steep";
    case Kind::sequential: return "sequential";
    case Kind::thick2D: return "thick2D";
    case Kind::thickPoly: return "thickPoly";
    case Kind::seq_thick: return "seq_thick";
    case Kind::oscillatory: return "oscillatory";
    case Kind::lasting: return "lasting";
  }
  return "?";
}

Kind kind_from_name(const std::string& name) {
  for (Kind k : {Kind::steep, Kind::super_steep, Kind::sub_steep, Kind::sequential, Kind::thick2D, Kind::thickPoly,
                 Kind::seq_thick, Kind::oscillatory, Kind::lasting})
    if (name == kind_name(k)) return k;
  throw StructuralError("unknown criterion kind '" + name + "'");
}

double Criterion::target(int nu) const {
  switch (kind) {
    case Kind::steep:
    case Kind::super_steep:
    case Kind::sub_steep:
    case Kind::sequential: return std::sqrt(2.0 * nu);
    case Kind::thick2D: return gamma / std::numbers::pi;
    case Kind::oscillatory: return nu == 2 ? gamma / std::numbers::pi : std::sqrt(2.0 * nu) * gamma;
    case Kind::thickPoly:
    case Kind::seq_thick:
    case Kind::lasting: return std::sqrt(2.0 * nu) * gamma;
  }
  return 0.0;
}

double Criterion::lasting_threshold() const {
  if (lasting_fraction) return *lasting_fraction;
  // gamma' = gamma (1 + a), gamma'' = (gamma + gamma') / 2.
  const double r = (1.0 + 0.5 * a) / (1.0 + a);
  return 1.0 - r * r;
}

void Criterion::validate(int nu) const {
  if (nu < 2) throw DomainError("dimension must be >= 2");
  if (!(a > 0.0 && a < 1.0)) throw DomainError("band a must lie in (0, 1)");
  if (window < 1) throw DomainError("window must be >= 1");
  switch (kind) {
    case Kind::thick2D:
      if (nu != 2) throw DomainError("thick2D requires nu = 2");
      if (!(gamma > 0.0)) throw DomainError("thick2D requires gamma > 0");
      break;
    case Kind::thickPoly:
    case Kind::seq_thick:
    case Kind::lasting:
      if (nu < 3) throw DomainError(std::string(kind_name(kind)) + " requires nu >= 3");
      if (!(gamma > 0.0)) throw DomainError(std::string(kind_name(kind)) + " requires gamma > 0");
      if (kind == Kind::lasting) {
        const double th = lasting_threshold();
        if (!(th > 0.0 && th <= 1.0)) throw DomainError("lasting fraction must lie in (0, 1]");
      }
      break;
    case Kind::oscillatory:
      if (!(gamma >= 0.0 && gamma2 >= 0.0)) throw DomainError("oscillatory levels must be >= 0");
      break;
    default: break;
  }
}

nlohmann::json to_json(const Criterion& c) {
  nlohmann::json j{{"kind", kind_name(c.kind)}, {"a", c.a}, {"window", c.window}};
  if (c.gamma != 0.0) j["gamma"] = c.gamma;
  if (c.kind == Kind::oscillatory) j["gamma2"] = c.gamma2;
  if (c.lasting_fraction) j["lasting_fraction"] = *c.lasting_fraction;
  if (!c.sequence_levels.empty()) j["sequence_levels"] = c.sequence_levels;
  return j;
}

Criterion criterion_from_json(const nlohmann::json& j) {
  Criterion c;
  c.kind = kind_from_name(j.at("kind").get<std::string>());
  c.a = j.value("a", c.a);
  c.window = j.value("window", c.window);
  c.gamma = j.value("gamma", 0.0);
  c.gamma2 = j.value("gamma2", c.gamma);
  if (j.contains("lasting_fraction")) c.lasting_fraction = j["lasting_fraction"].get<double>();
  if (j.contains("sequence_levels")) c.sequence_levels = j["sequence_levels"].get<std::vector<int>>();
  return c;
}

namespace {

// Everything about a level that does not depend on the cell.
struct LevelPlan {
  int n = 0;
  Plan plan;
  std::vector<std::size_t> level_index;              // grid index of t_m, m = 0..n
  std::vector<std::vector<double>> interior;         // jump radii inside (t_m, t_{m-1}), m = 1..n
};

LevelPlan level_plan(const sampler::FieldReplica& r, const testfn::TestFunction& f, int n, int substeps) {
  LevelPlan lp;
  lp.n = n;
  lp.interior.resize(n + 1);
  std::vector<double> grid{r.schedule.t[0]};
  lp.level_index.push_back(0);
  for (int m = 1; m <= n; ++m) {
    if (substeps > 0 || !f.jumps().empty()) lp.interior[m] = sampler::fine_grid(r.nu, r.schedule, m, substeps, f.jumps());
    grid.insert(grid.end(), lp.interior[m].begin(), lp.interior[m].end());
    grid.push_back(r.schedule.t[m]);
    lp.level_index.push_back(grid.size() - 1);
  }
  lp.plan = make_plan(grid, f);
  return lp;
}

std::vector<double> lineage_theta(const sampler::FieldReplica& r, const LevelPlan& lp,
                                  const std::vector<std::uint64_t>& cells) {
  std::vector<double> theta{r.levels[0][cells[0]]};
  theta.reserve(lp.plan.t.size());
  for (int m = 1; m <= lp.n; ++m) {
    if (!lp.interior[m].empty()) {
      const auto b = sampler::bridge_values(r, m, cells[m], lp.interior[m]);
      theta.insert(theta.end(), b.begin(), b.end());
    }
    theta.push_back(r.levels[m][cells[m]]);
  }
  return theta;
}

std::vector<int> sequence_in_window(const Criterion& c, int n, int lo) {
  std::vector<int> out;
  if (c.sequence_levels.empty()) {
    for (int m = n; m >= lo; m -= 2) out.push_back(m);
  } else {
    for (int m : c.sequence_levels)
      if (m >= lo && m <= n) out.push_back(m);
  }
  return out;
}

bool evaluate(const Criterion& c, int nu, int n, const std::vector<double>& R, const std::vector<double>& S,
              const std::vector<double>& dG, double G_n) {
  // R, S, dG indexed by level m = 0..n (index 0 unused).
  const int lo = std::max(1, n - c.window + 1);
  const double T = c.target(nu);
  const double down = T * (1.0 - c.a), up = T * (1.0 + c.a);
  auto in_band = [&](double v) { return v >= down && v <= up; };
  switch (c.kind) {
    case Kind::steep:
    case Kind::thick2D:
      for (int m = lo; m <= n; ++m)
        if (!in_band(c.kind == Kind::steep ? R[m] : S[m])) return false;
      return true;
    case Kind::sub_steep:
      for (int m = lo; m <= n; ++m)
        if (R[m] < down) return false;
      return true;
    case Kind::super_steep:
      for (int m = lo; m <= n; ++m)
        if (R[m] >= down) return true;
      return false;
    case Kind::sequential:
    case Kind::seq_thick: {
      const auto seq = sequence_in_window(c, n, lo);
      if (seq.empty()) return false;
      for (int m : seq)
        if (!in_band(c.kind == Kind::sequential ? R[m] : S[m])) return false;
      return true;
    }
    case Kind::thickPoly:
      for (int m = lo; m <= n; ++m)
        if (S[m] >= down) return true;
      return false;
    case Kind::oscillatory: {
      const double T2 = nu == 2 ? c.gamma2 / std::numbers::pi : std::sqrt(2.0 * nu) * c.gamma2;
      bool hi = false, low = false;
      for (int m = lo; m <= n; ++m) {
        hi = hi || S[m] >= down;
        low = low || S[m] <= -T2 * (1.0 - c.a);
      }
      return hi && low;
    }
    case Kind::lasting: {
      double acc = 0.0;
      for (int m = lo; m <= n; ++m)
        if (S[m] >= down) acc += dG[m];
      return acc / G_n >= c.lasting_threshold();
    }
  }
  return false;
}

}  // namespace

SetMask detect_mask(const sampler::FieldReplica& r, const testfn::TestFunction& f, const Criterion& c, int jobs) {
  c.validate(r.nu);
  const int nu = r.nu, N = r.schedule.depth();
  SetMask mask{c, nu, r.schedule, r.seed, {}};
  mask.levels.resize(N + 1);
  mask.levels[0].assign(r.levels[0].size(), 0);
  std::vector<double> G(N + 1), dG(N + 1, 0.0), norm(N + 1, 0.0);
  for (int m = 0; m <= N; ++m) {
    G[m] = specfun::green(nu, r.schedule.t[m]);
    if (m > 0) {
      dG[m] = G[m] - G[m - 1];
      const double lt = -std::log(r.schedule.t[m]);
      // nu = 2 measures theta against the clock 2 pi (G(t) - G(1)) ~ -ln t,
      // which makes thick2D and steep coincide for constant f.
      norm[m] = nu == 2 ? 2.0 * std::numbers::pi * (G[m] - G[0]) : std::sqrt(G[m] * lt);
    }
  }
  const bool steep_kind = c.kind == Kind::steep || c.kind == Kind::sub_steep || c.kind == Kind::super_steep ||
                          c.kind == Kind::sequential;
  for (int n = 1; n <= N; ++n) {
    const sampler::Lattice L = sampler::lattice(nu, r.schedule, n);
    auto& out = mask.levels[n];
    out.assign(L.size(), 0);
    std::optional<LevelPlan> lp;
    if (steep_kind) lp = level_plan(r, f, n, 0);
    parallel_for(out.size(), jobs, [&](std::size_t j) {
      const auto cells = r.lineage_cells(n, j);
      std::vector<double> R(n + 1, 0.0), S(n + 1, 0.0);
      if (steep_kind) {
        const auto theta = lineage_theta(r, *lp, cells);
        const SteepPath p = compute_X(lp->plan, theta, j);
        for (int m = 1; m <= n; ++m) R[m] = ratio_at(p, lp->level_index[m]);
      } else {
        const double th0 = r.levels[0][cells[0]];
        for (int m = 1; m <= n; ++m) {
          const double th = r.levels[m][cells[m]];
          S[m] = nu == 2 ? (th - th0) / norm[m] : th / norm[m];
        }
      }
      out[j] = evaluate(c, nu, n, R, S, dG, G[n]) ? 1 : 0;
    });
  }
  return mask;
}

std::vector<std::uint8_t> detect_phi(const sampler::FieldReplica& r, const testfn::TestFunction& f, int n,
                                     const EventOptions& opt, int jobs) {
  if (n < 1 || n > r.schedule.depth()) throw DomainError("Phi level must be in 1..depth");
  const LevelPlan lp = level_plan(r, f, n, opt.min_substeps);
  const sampler::Lattice L = sampler::lattice(r.nu, r.schedule, n);
  const double c = std::sqrt(2.0 * r.nu);
  const std::uint64_t seed = rng::mix(r.seed, opt.seed);
  std::vector<std::uint8_t> out(L.size(), 0);
  parallel_for(out.size(), jobs, [&](std::size_t j) {
    const auto cells = r.lineage_cells(n, j);
    const auto theta = lineage_theta(r, lp, cells);
    const SteepPath p = compute_X(lp.plan, theta, j);
    for (int m = 1; m <= n; ++m) {
      const std::size_t i0 = lp.level_index[m - 1], i1 = lp.level_index[m];
      std::vector<double> s, y;
      for (std::size_t k = i0; k <= i1; ++k) {
        const double ds = p.sigma[k] - p.sigma[i0];
        s.push_back(ds);
        y.push_back(p.X[k] - p.X[i0] - c * ds);
      }
      if (!tube_event(s, y, std::sqrt(s.back()), opt.bridge_correction, seed, cells[m], m)) return;
    }
    out[j] = 1;
  });
  return out;
}

nlohmann::json mask_to_json(const SetMask& m) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : m.levels) {
    nlohmann::json runs = nlohmann::json::array();
    std::size_t i = 0;
    while (i < lv.size()) {
      std::size_t k = i;
      while (k < lv.size() && lv[k] == lv[i]) ++k;
      runs.push_back({lv[i], k - i});
      i = k;
    }
    levels.push_back(runs);
  }
  return {{"criterion", to_json(m.criterion)}, {"nu", m.nu}, {"schedule", sampler::to_json(m.schedule)},
          {"seed", m.replica_seed}, {"levels", levels}};
}

SetMask mask_from_json(const nlohmann::json& j) {
  SetMask m;
  m.criterion = criterion_from_json(j.at("criterion"));
  m.nu = j.at("nu").get<int>();
  m.schedule = sampler::schedule_from_json(j.at("schedule"));
  m.replica_seed = j.at("seed").get<std::uint64_t>();
  for (const auto& runs : j.at("levels")) {
    std::vector<std::uint8_t> lv;
    for (const auto& r : runs) lv.insert(lv.end(), r.at(1).get<std::size_t>(), r.at(0).get<std::uint8_t>());
    m.levels.push_back(std::move(lv));
  }
  if (static_cast<int>(m.levels.size()) != m.schedule.depth() + 1) throw StructuralError("mask: level count mismatch");
  return m;
}

void write_mask_csv(std::ostream& os, const SetMask& m) {
  os << "level,cell,flag\n";
  for (std::size_t n = 0; n < m.levels.size(); ++n)
    for (std::size_t j = 0; j < m.levels[n].size(); ++j) os << n << ',' << j << ',' << int(m.levels[n][j]) << '\n';
}

}  // namespace steepfield::steep
