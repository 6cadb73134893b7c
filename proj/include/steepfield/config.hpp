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
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "steepfield/sampler.hpp"
#include "steepfield/steep.hpp"
#include "steepfield/testfn.hpp"
#include "steepfield/verify.hpp"

// Experiment configuration, run manifests and the on-disk constant cache.

namespace steepfield::config {

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  int nu = 2;
  nlohmann::json test_function = {{"builtin", {{"name", "constant"}, {"gamma", 1.0}}}};
  nlohmann::json schedule = {{"kind", "geometric"}, {"base", 2}, {"depth", 6}};
  std::string backend = "hierarchical";
  std::optional<int> depth;  // overrides the schedule depth
  std::size_t replicas = 1;
  double a = 0.1;
  nlohmann::json criterion = {{"kind", "steep"}};
  std::uint64_t seed = 0;
  std::string out = "out";
  int substeps = 64;
  int jobs = 1;
  nlohmann::json energy = {{"alpha", 1.0}, {"level", 3}, {"length_unit", 1.0}, {"weight", "exact_series"}};
  nlohmann::json suite = nlohmann::json::object();  // knobs of the verify suites

  testfn::TestFunction function() const;
  sampler::ScaleSchedule scale_schedule() const;
  sampler::Backend backend_kind() const;
  steep::Criterion band_criterion() const;
  /// Resolves every field against the module preconditions; throws the
  /// module's error type on the first violation.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& p);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

struct Manifest {
  std::string command;
  ExperimentConfig config;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
};

nlohmann::json to_json(const Manifest& m);

/// Constants worth keeping between runs, in $STEEPFIELD_CACHE/constants.json.
/// Without the variable every lookup misses and nothing is written.
class ConstantCache {
 public:
  ConstantCache();
  explicit ConstantCache(std::optional<std::filesystem::path> dir);
  bool enabled() const { return dir_.has_value(); }
  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& value);

 private:
  std::optional<std::filesystem::path> dir_;
  nlohmann::json data_ = nlohmann::json::object();
};

/// Confinement estimate, read from the cache when the same (steps, replicas,
/// seed) was run before.
verify::Confinement confinement(ConstantCache& cache, std::size_t steps, std::size_t replicas, std::uint64_t seed,
                                int jobs);

}  // namespace steepfield::config
