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


#include "steepfield/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "steepfield/errors.hpp"
#include "steepfield/fractal.hpp"

namespace steepfield::config {

namespace {

const std::set<std::string> kKeys = {"schema_version", "nu",   "test_function", "schedule", "backend",
                                     "depth",          "replicas", "a",         "criterion", "seed",
                                     "out",            "substeps", "jobs",      "energy",    "suite"};

}  // namespace

testfn::TestFunction ExperimentConfig::function() const {
  nlohmann::json j = test_function;
  if (!j.is_object()) throw StructuralError("test_function must be an object");
  if (j.contains("nu") && j["nu"].get<int>() != nu) throw DomainError("test_function nu differs from config nu");
  j["nu"] = nu;
  return testfn::from_json(j);
}

sampler::ScaleSchedule ExperimentConfig::scale_schedule() const {
  nlohmann::json j = schedule;
  if (depth) {
    if (j.value("kind", "") == "custom") throw StructuralError("depth cannot override a custom schedule");
    j["depth"] = *depth;
  }
  return sampler::schedule_from_json(j);
}

sampler::Backend ExperimentConfig::backend_kind() const { return sampler::backend_from_name(backend); }

steep::Criterion ExperimentConfig::band_criterion() const {
  nlohmann::json j = criterion;
  if (!j.contains("a")) j["a"] = a;
  return steep::criterion_from_json(j);
}

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion)
    throw StructuralError("config schema_version " + std::to_string(schema_version) + " is not supported");
  if (nu < 2) throw DomainError("nu must be >= 2");
  if (replicas < 1) throw DomainError("replicas must be >= 1");
  if (jobs < 1) throw DomainError("jobs must be >= 1");
  if (substeps < 1) throw DomainError("substeps must be >= 1");
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("band a must lie in (0, 1]");
  (void)function();
  const auto s = scale_schedule();
  band_criterion().validate(nu);
  const auto b = backend_kind();
  if (b == sampler::Backend::hierarchical && s.total_cells(nu) > sampler::kCellBudget) {
    throw BudgetExceededError("schedule needs " + std::to_string(s.total_cells(nu)) + " cells, budget is " +
                              std::to_string(sampler::kCellBudget));
  }
  if (b == sampler::Backend::exact && s.total_cells(nu) > sampler::kExactMaxPoints) {
    throw BudgetExceededError("exact backend limited to " + std::to_string(sampler::kExactMaxPoints) +
                              " points, schedule has " + std::to_string(s.total_cells(nu)));
  }
  if (!energy.is_object() || !suite.is_object()) throw StructuralError("energy and suite must be objects");
  const double alpha = energy.value("alpha", 1.0);
  if (!(alpha >= 0.0 && alpha < nu)) throw DomainError("energy alpha must lie in [0, nu)");
  (void)fractal::weight_mode_from_name(energy.value("weight", std::string("exact_series")));
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw StructuralError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw StructuralError("unknown config key '" + k + "'");
  ExperimentConfig c;
  c.schema_version = j.value("schema_version", c.schema_version);
  c.nu = j.value("nu", c.nu);
  if (j.contains("test_function")) c.test_function = j["test_function"];
  if (j.contains("schedule")) c.schedule = j["schedule"];
  c.backend = j.value("backend", c.backend);
  if (j.contains("depth") && !j["depth"].is_null()) c.depth = j["depth"].get<int>();
  c.replicas = j.value("replicas", c.replicas);
  c.a = j.value("a", c.a);
  if (j.contains("criterion")) c.criterion = j["criterion"];
  c.seed = j.value("seed", c.seed);
  c.out = j.value("out", c.out);
  c.substeps = j.value("substeps", c.substeps);
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("energy")) {
    for (const auto& [k, v] : j["energy"].items()) c.energy[k] = v;
  }
  if (j.contains("suite")) c.suite = j["suite"];
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"schema_version", c.schema_version},
                      {"nu", c.nu},
                      {"test_function", c.test_function},
                      {"schedule", c.schedule},
                      {"backend", c.backend},
                      {"replicas", c.replicas},
                      {"a", c.a},
                      {"criterion", c.criterion},
                      {"seed", c.seed},
                      {"out", c.out},
                      {"substeps", c.substeps},
                      {"jobs", c.jobs},
                      {"energy", c.energy},
                      {"suite", c.suite}};
  j["depth"] = c.depth ? nlohmann::json(*c.depth) : nlohmann::json(nullptr);
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw StructuralError("cannot open config " + p.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw StructuralError("config " + p.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& c) {
  // jobs and out do not change results.
  nlohmann::json j = to_json(c);
  j.erase("jobs");
  j.erase("out");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

nlohmann::json to_json(const Manifest& m) {
  return {{"tool", "steepfield"},
          {"version", STEEPFIELD_VERSION},
          {"command", m.command},
          {"config", to_json(m.config)},
          {"config_hash", config_hash(m.config)},
          {"seed", m.config.seed},
          {"wall_seconds", m.wall_seconds},
          {"outputs", m.outputs}};
}

ConstantCache::ConstantCache() {
  if (const char* env = std::getenv("STEEPFIELD_CACHE"); env != nullptr && *env != '\0') {
    *this = ConstantCache(std::filesystem::path(env));
  }
}

ConstantCache::ConstantCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (!dir_) return;
  std::ifstream in(*dir_ / "constants.json");
  if (!in) return;
  try {
    in >> data_;
  } catch (const nlohmann::json::parse_error&) {
    data_ = nlohmann::json::object();  // a damaged cache is rebuilt
  }
  if (!data_.is_object()) data_ = nlohmann::json::object();
}

std::optional<nlohmann::json> ConstantCache::get(const std::string& key) const {
  if (!dir_ || !data_.contains(key)) return std::nullopt;
  return data_.at(key);
}

void ConstantCache::put(const std::string& key, const nlohmann::json& value) {
  if (!dir_) return;
  data_[key] = value;
  std::filesystem::create_directories(*dir_);
  const auto tmp = *dir_ / "constants.json.tmp";
  {
    std::ofstream out(tmp);
    out << data_.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write cache " + tmp.string());
  }
  std::filesystem::rename(tmp, *dir_ / "constants.json");
}

verify::Confinement confinement(ConstantCache& cache, std::size_t steps, std::size_t replicas, std::uint64_t seed,
                                int jobs) {
  const std::string key =
      "confinement/" + std::to_string(steps) + "/" + std::to_string(replicas) + "/" + std::to_string(seed);
  if (auto v = cache.get(key)) {
    return {v->at("p").get<double>(), v->at("se").get<double>(), steps, replicas};
  }
  const auto c = verify::estimate_confinement_p(steps, replicas, seed, true, jobs);
  cache.put(key, {{"p", c.p}, {"se", c.se}});
  return c;
}

}  // namespace steepfield::config
