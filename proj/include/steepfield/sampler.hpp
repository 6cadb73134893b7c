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
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "steepfield/covariance.hpp"
#include "steepfield/rng.hpp"

// Field replicas: exact single-point processes, exact joint draws of small
// point sets, and the approximate hierarchical lattice.

namespace steepfield::sampler {

enum class ScheduleKind { paper, geometric, custom };

const char* schedule_kind_name(ScheduleKind k);

/// Radii t_0 = 1 > t_1 > ... > t_N. Level n tiles [-1, 1]^nu by cubes of
/// half-width t_n, so 1 / t_n must be an integer and each level must refine
/// the previous one.
struct ScaleSchedule {
  ScheduleKind kind = ScheduleKind::geometric;
  int base = 2;  // geometric only
  std::vector<double> t{1.0};

  int depth() const { return static_cast<int>(t.size()) - 1; }
  /// Cells per axis at level n, 1 / t_n.
  std::uint64_t per_axis(int n) const;
  std::uint64_t cells(int nu, int n) const;
  /// Sum of cells over levels 0..N; saturates instead of overflowing.
  std::uint64_t total_cells(int nu) const;

  static ScaleSchedule paper(int depth);
  static ScaleSchedule geometric(int base, int depth);
  static ScaleSchedule custom(std::vector<double> t);
};

nlohmann::json to_json(const ScaleSchedule& s);
ScaleSchedule schedule_from_json(const nlohmann::json& j);

/// Cell geometry of one level.
struct Lattice {
  int nu = 2;
  int level = 0;
  std::uint64_t per_axis = 1;
  double half_width = 1.0;

  std::uint64_t size() const;
  std::vector<double> center(std::uint64_t j) const;
  /// Index of the cell of `coarser` containing cell j.
  std::uint64_t ancestor(std::uint64_t j, const Lattice& coarser) const;
};

Lattice lattice(int nu, const ScaleSchedule& s, int level);

enum class Backend { exact, hierarchical };

const char* backend_name(Backend b);
Backend backend_from_name(const std::string& name);

struct FieldReplica {
  int nu = 2;
  ScaleSchedule schedule;
  Backend backend = Backend::hierarchical;
  std::uint64_t seed = 0;
  /// levels[n][j] = theta at radius t_n averaged around center j of level n.
  std::vector<std::vector<double>> levels;

  /// Values along the ancestry of cell j at level n: entry m is the level-m
  /// ancestor, m = 0..n.
  std::vector<double> lineage(int n, std::uint64_t j) const;
  std::vector<std::uint64_t> lineage_cells(int n, std::uint64_t j) const;
};

/// Refusal threshold for hierarchical replicas, in cells over all levels.
inline constexpr std::uint64_t kCellBudget = 100000000ULL;
/// Largest point set accepted by the exact backend.
inline constexpr std::size_t kExactMaxPoints = 4096;

/// Exact law of theta along a decreasing radius grid at one center.
class PointPath {
 public:
  PointPath(int nu, std::vector<double> grid);
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& variances() const { return var_; }  // G(grid[k])
  /// Writes grid().size() values.
  void draw(rng::Stream& s, double* out) const;

 private:
  std::vector<double> grid_;
  std::vector<double> var_;
  std::vector<double> sd_;  // increment standard deviations
};

std::vector<double> sample_point_path(int nu, const std::vector<double>& grid, std::uint64_t seed,
                                      std::uint64_t index = 0);

/// Cholesky factor of the Gram matrix of a point set; draws are indexed so
/// replica k is reproducible on its own.
class ExactSampler {
 public:
  ExactSampler(int nu, std::vector<covariance::AvgPoint> points);
  std::size_t size() const { return points_.size(); }
  const Eigen::MatrixXd& gram() const { return gram_; }
  double jitter() const { return jitter_; }
  std::vector<double> draw(std::uint64_t seed, std::uint64_t index) const;
  void draw(rng::Stream& s, double* out) const;

 private:
  int nu_;
  std::vector<covariance::AvgPoint> points_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd lower_;
  double jitter_ = 0.0;
};

/// Gram matrix with memoized kernel values (lattices repeat distances).
Eigen::MatrixXd gram_matrix(int nu, const std::vector<covariance::AvgPoint>& points);

std::vector<double> sample_lattice_exact(int nu, const std::vector<covariance::AvgPoint>& points,
                                         std::uint64_t seed);

/// Every cell of every level drawn jointly with the exact kernel.
FieldReplica sample_replica_exact(int nu, const ScaleSchedule& s, std::uint64_t seed);
/// Parent value plus an independent N(0, G(t_n) - G(t_{n-1})) per cell.
FieldReplica sample_lattice_hierarchical(int nu, const ScaleSchedule& s, std::uint64_t seed, int jobs = 1);

/// Radii strictly inside (t_n, t_{n-1}): `substeps - 1` points equally spaced
/// in G, merged with any `extra` radii falling inside. Decreasing.
std::vector<double> fine_grid(int nu, const ScaleSchedule& s, int level, int substeps,
                              const std::vector<double>& extra = {});

/// Brownian bridge in G-time between the level-(n-1) ancestor value and the
/// level-n value of cell j, evaluated on `interior` (from fine_grid).
/// Keyed by (seed, level, cell).
std::vector<double> bridge_values(const FieldReplica& r, int level, std::uint64_t j,
                                  const std::vector<double>& interior);

}  // namespace steepfield::sampler
