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


#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "steepfield/config.hpp"
#include "steepfield/errors.hpp"

using namespace steepfield;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("steepfield_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults validate and round trip") {
  config::ExperimentConfig c;
  c.validate();
  const auto j = config::to_json(c);
  const auto back = config::config_from_json(j);
  CHECK(config::to_json(back).dump() == j.dump());
  CHECK(config::config_hash(back) == config::config_hash(c));
  CHECK(back.function().nu() == 2);
  CHECK(back.scale_schedule().depth() == 6);
  CHECK(back.band_criterion().a == doctest::Approx(0.1));
}

TEST_CASE("strict parsing") {
  CHECK_THROWS_AS(config::config_from_json({{"nu", 2}, {"colour", "red"}}), StructuralError);
  CHECK_THROWS_AS(config::config_from_json(nlohmann::json::array()), StructuralError);
  auto c = config::config_from_json({{"schema_version", 7}});
  CHECK_THROWS_AS(c.validate(), StructuralError);
  c = config::config_from_json({{"a", 0.0}});
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = config::config_from_json({{"nu", 3}});
  // The default constant function is a nu = 2 builtin.
  CHECK_THROWS(c.validate());
}

TEST_CASE("budgets are checked before any work") {
  auto c = config::config_from_json({{"schedule", {{"kind", "paper"}, {"depth", 4}}}});
  CHECK_THROWS_AS(c.validate(), BudgetExceededError);
  c = config::config_from_json({{"backend", "exact"}, {"depth", 6}});
  CHECK_THROWS_AS(c.validate(), BudgetExceededError);
  c = config::config_from_json({{"backend", "exact"}, {"depth", 5}});
  c.validate();
  CHECK(c.scale_schedule().depth() == 5);
}

TEST_CASE("hash ignores jobs and output directory") {
  config::ExperimentConfig a, b;
  b.jobs = 4;
  b.out = "elsewhere";
  CHECK(config::config_hash(a) == config::config_hash(b));
  b.seed = 1;
  CHECK(config::config_hash(a) != config::config_hash(b));
  CHECK(config::config_hash(a).size() == 16);
}

TEST_CASE("load from disk") {
  const auto dir = scratch("load");
  std::ofstream(dir / "c.json") << R"({"nu": 2, "seed": 9, "replicas": 3})";
  const auto c = config::load_config(dir / "c.json");
  CHECK(c.seed == 9);
  CHECK(c.replicas == 3);
  std::ofstream(dir / "bad.json") << "{nu: 2";
  CHECK_THROWS_AS(config::load_config(dir / "bad.json"), StructuralError);
  CHECK_THROWS_AS(config::load_config(dir / "missing.json"), StructuralError);
  fs::remove_all(dir);
}

TEST_CASE("constant cache") {
  const auto dir = scratch("cache");
  {
    config::ConstantCache off(std::nullopt);
    CHECK_FALSE(off.enabled());
    off.put("x", 1.0);
    CHECK_FALSE(off.get("x").has_value());
  }
  {
    config::ConstantCache c(dir);
    CHECK(c.enabled());
    CHECK_FALSE(c.get("x").has_value());
    c.put("x", {{"p", 0.25}});
  }
  config::ConstantCache again(dir);
  REQUIRE(again.get("x").has_value());
  CHECK(again.get("x")->at("p") == 0.25);

  const auto first = config::confinement(again, 50, 2000, 4, 1);
  config::ConstantCache third(dir);
  const auto second = config::confinement(third, 50, 2000, 4, 1);
  CHECK(first.p == second.p);
  CHECK(third.get("confinement/50/2000/4").has_value());
  fs::remove_all(dir);
}

TEST_CASE("manifest") {
  config::Manifest m{"simulate", config::ExperimentConfig{}, 1.5, {"replicas/replica_00000.bin"}};
  const auto j = config::to_json(m);
  CHECK(j.at("command") == "simulate");
  CHECK(j.at("config_hash") == config::config_hash(m.config));
  CHECK(j.at("outputs").size() == 1);
}

}
