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


#include "steepfield/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "steepfield/errors.hpp"
#include "steepfield/parallel.hpp"
#include "steepfield/specfun.hpp"

namespace steepfield::sampler {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}

std::uint64_t sat_pow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r = sat_mul(r, base);
  return r;
}

void check_grid(const std::vector<double>& grid, const char* who) {
  if (grid.empty()) throw StructuralError(std::string(who) + ": empty grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0 && grid[k] <= 1.0)) throw DomainError(std::string(who) + ": radius outside (0, 1]");
    if (k > 0 && !(grid[k] < grid[k - 1])) throw StructuralError(std::string(who) + ": grid is not strictly decreasing");
  }
}

}  // namespace

const char* schedule_kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::paper: return "paper";
    case ScheduleKind::geometric: return "geometric";
    case ScheduleKind::custom: return "custom";
  }
  return "?";
}

std::uint64_t ScaleSchedule::per_axis(int n) const {
  if (n < 0 || n > depth()) throw DomainError("schedule level out of range");
  if (kind == ScheduleKind::paper) return n * n >= 64 ? kSaturated : (1ULL << (n * n));
  if (kind == ScheduleKind::geometric) return sat_pow(static_cast<std::uint64_t>(base), n);
  const double inv = 1.0 / t[n];
  if (inv >= 1.8e19) return kSaturated;
  const double r = std::round(inv);
  if (std::fabs(inv - r) > 1e-9 * r) throw StructuralError("custom schedule: 1/t_n is not an integer, no lattice");
  return static_cast<std::uint64_t>(r);
}

std::uint64_t ScaleSchedule::cells(int nu, int n) const { return sat_pow(per_axis(n), nu); }

std::uint64_t ScaleSchedule::total_cells(int nu) const {
  std::uint64_t sum = 0;
  for (int n = 0; n <= depth(); ++n) {
    const std::uint64_t c = cells(nu, n);
    sum = c > kSaturated - sum ? kSaturated : sum + c;
  }
  return sum;
}

ScaleSchedule ScaleSchedule::paper(int depth) {
  if (depth < 0) throw DomainError("schedule depth must be >= 0");
  ScaleSchedule s;
  s.kind = ScheduleKind::paper;
  s.t.clear();
  for (int n = 0; n <= depth; ++n) s.t.push_back(std::exp2(-static_cast<double>(n) * n));
  return s;
}

ScaleSchedule ScaleSchedule::geometric(int base, int depth) {
  if (base < 2) throw DomainError("geometric schedule needs an integer base >= 2");
  if (depth < 0) throw DomainError("schedule depth must be >= 0");
  ScaleSchedule s;
  s.kind = ScheduleKind::geometric;
  s.base = base;
  s.t.clear();
  double v = 1.0;
  for (int n = 0; n <= depth; ++n) {
    s.t.push_back(v);
    v /= base;
  }
  return s;
}

ScaleSchedule ScaleSchedule::custom(std::vector<double> t) {
  if (t.empty() || t[0] != 1.0) throw StructuralError("custom schedule must start at t_0 = 1");
  check_grid(t, "custom schedule");
  ScaleSchedule s;
  s.kind = ScheduleKind::custom;
  s.t = std::move(t);
  return s;
}

nlohmann::json to_json(const ScaleSchedule& s) {
  nlohmann::json j{{"kind", schedule_kind_name(s.kind)}, {"depth", s.depth()}};
  if (s.kind == ScheduleKind::geometric) j["base"] = s.base;
  if (s.kind == ScheduleKind::custom) j["values"] = s.t;
  return j;
}

ScaleSchedule schedule_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "paper") return ScaleSchedule::paper(j.at("depth").get<int>());
  if (kind == "geometric") return ScaleSchedule::geometric(j.value("base", 2), j.at("depth").get<int>());
  if (kind == "custom") return ScaleSchedule::custom(j.at("values").get<std::vector<double>>());
  throw StructuralError("unknown schedule kind '" + kind + "'");
}

std::uint64_t Lattice::size() const { return sat_pow(per_axis, nu); }

std::vector<double> Lattice::center(std::uint64_t j) const {
  std::vector<double> x(nu);
  for (int k = 0; k < nu; ++k) {
    const std::uint64_t i = j % per_axis;
    j /= per_axis;
    x[k] = -1.0 + (2.0 * static_cast<double>(i) + 1.0) * half_width;
  }
  return x;
}

std::uint64_t Lattice::ancestor(std::uint64_t j, const Lattice& coarser) const {
  const std::uint64_t ratio = per_axis / coarser.per_axis;
  std::uint64_t out = 0, scale = 1;
  for (int k = 0; k < nu; ++k) {
    const std::uint64_t i = j % per_axis;
    j /= per_axis;
    out += (i / ratio) * scale;
    scale *= coarser.per_axis;
  }
  return out;
}

Lattice lattice(int nu, const ScaleSchedule& s, int level) {
  if (nu < 2) throw DomainError("dimension must be >= 2");
  Lattice L;
  L.nu = nu;
  L.level = level;
  L.per_axis = s.per_axis(level);
  L.half_width = s.t[level];
  if (level > 0 && L.per_axis % s.per_axis(level - 1) != 0)
    throw StructuralError("schedule levels do not nest: 1/t_n must be a multiple of 1/t_{n-1}");
  return L;
}

const char* backend_name(Backend b) { return b == Backend::exact ? "exact" : "hierarchical"; }

Backend backend_from_name(const std::string& name) {
  if (name == "exact") return Backend::exact;
  if (name == "hierarchical") return Backend::hierarchical;
  throw StructuralError("unknown backend '" + name + "'");
}

std::vector<std::uint64_t> FieldReplica::lineage_cells(int n, std::uint64_t j) const {
  std::vector<std::uint64_t> cells(n + 1);
  const Lattice fine = lattice(nu, schedule, n);
  for (int m = 0; m <= n; ++m) cells[m] = fine.ancestor(j, lattice(nu, schedule, m));
  return cells;
}

std::vector<double> FieldReplica::lineage(int n, std::uint64_t j) const {
  const auto cells = lineage_cells(n, j);
  std::vector<double> v(n + 1);
  for (int m = 0; m <= n; ++m) v[m] = levels.at(m).at(cells[m]);
  return v;
}

PointPath::PointPath(int nu, std::vector<double> grid) : grid_(std::move(grid)) {
  check_grid(grid_, "point path");
  var_.resize(grid_.size());
  sd_.resize(grid_.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    var_[k] = specfun::green(nu, grid_[k]);
    sd_[k] = std::sqrt(std::max(0.0, var_[k] - prev));
    prev = var_[k];
  }
}

void PointPath::draw(rng::Stream& s, double* out) const {
  double v = 0.0;
  for (std::size_t k = 0; k < sd_.size(); ++k) {
    v += sd_[k] * s.normal();
    out[k] = v;
  }
}

std::vector<double> sample_point_path(int nu, const std::vector<double>& grid, std::uint64_t seed,
                                      std::uint64_t index) {
  const PointPath p(nu, grid);
  rng::Stream s(seed, rng::kPointPath, index);
  std::vector<double> out(grid.size());
  p.draw(s, out.data());
  return out;
}

Eigen::MatrixXd gram_matrix(int nu, const std::vector<covariance::AvgPoint>& points) {
  const std::size_t n = points.size();
  Eigen::MatrixXd g(n, n);
  std::map<std::tuple<double, double, long long>, double> memo;
  for (std::size_t a = 0; a < n; ++a) {
    if (static_cast<int>(points[a].x.size()) != nu) throw StructuralError("point dimension differs from nu");
    for (std::size_t b = 0; b <= a; ++b) {
      double r2 = 0.0;
      for (int k = 0; k < nu; ++k) {
        const double d = points[a].x[k] - points[b].x[k];
        r2 += d * d;
      }
      const double r = std::sqrt(r2);
      const double t = std::max(points[a].t, points[b].t), s = std::min(points[a].t, points[b].t);
      const auto key = std::make_tuple(t, s, std::llround(r * 1e13));
      auto it = memo.find(key);
      double v;
      if (it != memo.end()) {
        v = it->second;
      } else {
        v = covariance::cov(points[a], points[b]).value;
        memo.emplace(key, v);
      }
      g(a, b) = g(b, a) = v;
    }
  }
  return g;
}

ExactSampler::ExactSampler(int nu, std::vector<covariance::AvgPoint> points) : nu_(nu), points_(std::move(points)) {
  if (points_.empty()) throw StructuralError("exact sampler needs at least one point");
  if (points_.size() > kExactMaxPoints) {
    std::ostringstream os;
    os << "exact backend accepts at most " << kExactMaxPoints << " points, got " << points_.size();
    throw BudgetExceededError(os.str());
  }
  gram_ = gram_matrix(nu_, points_);
  const double maxdiag = gram_.diagonal().maxCoeff();
  for (double rel : {0.0, 1e-15, 1e-13, 1e-11, 1e-9}) {
    Eigen::MatrixXd m = gram_;
    m.diagonal().array() += rel * maxdiag;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
      lower_ = llt.matrixL();
      jitter_ = rel * maxdiag;
      return;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  os << "Gram matrix is indefinite beyond jitter 1e-9 * max diagonal; worst eigenvalue " << es.eigenvalues().minCoeff();
  throw NumericalConsistencyError(os.str());
}

void ExactSampler::draw(rng::Stream& s, double* out) const {
  const Eigen::Index n = lower_.rows();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = s.normal();
  Eigen::Map<Eigen::VectorXd>(out, n) = lower_.triangularView<Eigen::Lower>() * z;
}

std::vector<double> ExactSampler::draw(std::uint64_t seed, std::uint64_t index) const {
  rng::Stream s(seed, rng::kExactLattice, index);
  std::vector<double> out(points_.size());
  draw(s, out.data());
  return out;
}

std::vector<double> sample_lattice_exact(int nu, const std::vector<covariance::AvgPoint>& points,
                                         std::uint64_t seed) {
  return ExactSampler(nu, points).draw(seed, 0);
}

FieldReplica sample_replica_exact(int nu, const ScaleSchedule& s, std::uint64_t seed) {
  const std::uint64_t total = s.total_cells(nu);
  if (total > kExactMaxPoints) {
    std::ostringstream os;
    os << "exact replica needs " << total << " cells, above the " << kExactMaxPoints
       << "-point limit; use a shallower schedule or the hierarchical backend";
    throw BudgetExceededError(os.str());
  }
  std::vector<covariance::AvgPoint> pts;
  for (int n = 0; n <= s.depth(); ++n) {
    const Lattice L = lattice(nu, s, n);
    for (std::uint64_t j = 0; j < L.size(); ++j) pts.push_back({L.center(j), L.half_width});
  }
  const std::vector<double> flat = sample_lattice_exact(nu, pts, seed);
  FieldReplica r{nu, s, Backend::exact, seed, {}};
  std::size_t off = 0;
  for (int n = 0; n <= s.depth(); ++n) {
    const std::size_t c = s.cells(nu, n);
    r.levels.emplace_back(flat.begin() + off, flat.begin() + off + c);
    off += c;
  }
  return r;
}

FieldReplica sample_lattice_hierarchical(int nu, const ScaleSchedule& s, std::uint64_t seed, int jobs) {
  const std::uint64_t total = s.total_cells(nu);
  if (total > kCellBudget) {
    std::ostringstream os;
    os << "schedule needs " << (total == kSaturated ? std::string("more than 2^64") : std::to_string(total))
       << " cells, above the budget of " << kCellBudget << "; use a geometric schedule or reduce the depth";
    throw BudgetExceededError(os.str());
  }
  FieldReplica r{nu, s, Backend::hierarchical, seed, {}};
  r.levels.resize(s.depth() + 1);
  {
    rng::Stream st(seed, rng::kHierarchical, 0, 0);
    r.levels[0] = {std::sqrt(specfun::green(nu, s.t[0])) * st.normal()};
  }
  for (int n = 1; n <= s.depth(); ++n) {
    const Lattice fine = lattice(nu, s, n), coarse = lattice(nu, s, n - 1);
    const double sd = std::sqrt(specfun::green(nu, s.t[n]) - specfun::green(nu, s.t[n - 1]));
    auto& out = r.levels[n];
    const auto& parent = r.levels[n - 1];
    out.resize(fine.size());
    parallel_for(out.size(), jobs, [&](std::size_t j) {
      rng::Stream st(seed, rng::kHierarchical, static_cast<std::uint64_t>(n), j);
      out[j] = parent[fine.ancestor(j, coarse)] + sd * st.normal();
    });
  }
  return r;
}

std::vector<double> fine_grid(int nu, const ScaleSchedule& s, int level, int substeps,
                              const std::vector<double>& extra) {
  if (level < 1 || level > s.depth()) throw DomainError("fine grid level must be in 1..depth");
  const double hi = s.t[level - 1], lo = s.t[level];
  const double ga = specfun::green(nu, hi), gb = specfun::green(nu, lo);
  std::vector<double> pts;
  for (int k = 1; k < substeps; ++k) pts.push_back(specfun::green_inverse(nu, ga + (gb - ga) * k / substeps));
  for (double e : extra)
    if (e < hi && e > lo) pts.push_back(e);
  std::sort(pts.begin(), pts.end(), std::greater<>());
  std::vector<double> out;
  for (double p : pts) {
    if (!(p < hi && p > lo)) continue;
    if (!out.empty() && std::fabs(out.back() - p) <= 1e-14 * p) continue;
    out.push_back(p);
  }
  return out;
}

std::vector<double> bridge_values(const FieldReplica& r, int level, std::uint64_t j,
                                  const std::vector<double>& interior) {
  if (level < 1 || level > r.schedule.depth()) throw DomainError("bridge level must be in 1..depth");
  const Lattice fine = lattice(r.nu, r.schedule, level), coarse = lattice(r.nu, r.schedule, level - 1);
  const double a = r.levels[level - 1][fine.ancestor(j, coarse)];
  const double b = r.levels[level][j];
  const double gb = specfun::green(r.nu, r.schedule.t[level]);
  double g_prev = specfun::green(r.nu, r.schedule.t[level - 1]);
  double v = a;
  rng::Stream st(r.seed, rng::kBridge, static_cast<std::uint64_t>(level), j);
  std::vector<double> out;
  out.reserve(interior.size());
  double last = r.schedule.t[level - 1];
  for (double t : interior) {
    if (!(t < last && t > r.schedule.t[level])) throw StructuralError("bridge grid must lie strictly inside the level interval, decreasing");
    last = t;
    const double g = specfun::green(r.nu, t);
    const double w = (g - g_prev) / (gb - g_prev);
    const double mean = v + (b - v) * w;
    const double var = (g - g_prev) * (gb - g) / (gb - g_prev);
    v = mean + std::sqrt(std::max(0.0, var)) * st.normal();
    out.push_back(v);
    g_prev = g;
  }
  return out;
}

}  // namespace steepfield::sampler
