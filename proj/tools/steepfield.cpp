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


// steepfield: batch driver for simulation, detection, dimension fits, energy
// and the verify suites. Exit codes: 0 success, 1 a check failed, 2 budget
// exceeded, 3 any other error.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "steepfield/config.hpp"
#include "steepfield/errors.hpp"
#include "steepfield/fractal.hpp"
#include "steepfield/replica_io.hpp"
#include "steepfield/rng.hpp"
#include "steepfield/sampler.hpp"
#include "steepfield/steep.hpp"
#include "steepfield/testfn.hpp"
#include "steepfield/verify.hpp"

namespace fs = std::filesystem;
using namespace steepfield;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<int> jobs;
  std::optional<std::string> out;
  bool force = false;
};

config::ExperimentConfig resolve(const Globals& g) {
  config::ExperimentConfig c = g.config_path.empty() ? config::ExperimentConfig{} : config::load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (g.replicas) {
    c.replicas = *g.replicas;
    c.suite["replicas"] = *g.replicas;
  }
  if (g.jobs) c.jobs = *g.jobs;
  if (g.out) c.out = *g.out;
  c.validate();
  return c;
}

// Refuses to replace an existing file unless forced.
void claim(const fs::path& p, bool force) {
  if (fs::exists(p) && !force) throw std::runtime_error(p.string() + " exists; pass --force to overwrite");
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
}

void write_text(const fs::path& p, const std::string& s, bool force) {
  claim(p, force);
  std::ofstream os(p, std::ios::binary);
  os << s;
  if (!os) throw std::runtime_error("cannot write " + p.string());
}

std::string replica_name(std::size_t k) {
  std::ostringstream os;
  os << "replica_" << std::setw(5) << std::setfill('0') << k << ".bin";
  return os.str();
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t k) { return rng::mix(seed, k); }

void write_manifest(const config::ExperimentConfig& c, const std::string& command, double secs,
                    const std::vector<std::string>& outputs, bool force) {
  config::Manifest m{command, c, secs, outputs};
  write_text(fs::path(c.out) / ("manifest_" + command + ".json"), config::to_json(m).dump(2) + "\n", force);
}

std::vector<std::string> replica_inputs(const config::ExperimentConfig& c, const std::vector<std::string>& given) {
  if (!given.empty()) return given;
  std::vector<std::string> out;
  const fs::path dir = fs::path(c.out) / "replicas";
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".bin") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no replica files given and none under " + dir.string());
  return out;
}

std::vector<std::string> cmd_simulate(const config::ExperimentConfig& c, bool force, bool csv) {
  const auto s = c.scale_schedule();
  std::vector<std::string> outputs;
  for (std::size_t k = 0; k < c.replicas; ++k) {
    const std::uint64_t rs = replica_seed(c.seed, k);
    const sampler::FieldReplica r = c.backend_kind() == sampler::Backend::exact
                                        ? sampler::sample_replica_exact(c.nu, s, rs)
                                        : sampler::sample_lattice_hierarchical(c.nu, s, rs, c.jobs);
    const fs::path p = fs::path(c.out) / "replicas" / replica_name(k);
    claim(p, force);
    replica_io::save(p.string(), r);
    outputs.push_back(p.string());
    if (csv) {
      fs::path q = p;
      q.replace_extension(".csv");
      claim(q, force);
      std::ofstream os(q);
      replica_io::write_csv(os, r);
      outputs.push_back(q.string());
    }
  }
  return outputs;
}

std::vector<std::string> cmd_detect(const config::ExperimentConfig& c, const std::vector<std::string>& inputs,
                                    bool force) {
  const auto f = c.function();
  const auto crit = c.band_criterion();
  std::vector<std::string> outputs;
  std::ostringstream counts;
  counts << "replica,level,t,count\n";
  counts.precision(17);
  const auto files = replica_inputs(c, inputs);
  for (std::size_t k = 0; k < files.size(); ++k) {
    const auto r = replica_io::load(files[k]);
    if (r.nu != c.nu) throw DomainError(files[k] + ": replica dimension differs from config");
    const auto mask = steep::detect_mask(r, f, crit, c.jobs);
    const auto n = fractal::box_count(mask);
    for (std::size_t lv = 0; lv < n.size(); ++lv)
      counts << k << ',' << lv << ',' << r.schedule.t[lv] << ',' << n[lv] << '\n';
    const fs::path p = fs::path(c.out) / "masks" / (fs::path(files[k]).stem().string() + ".mask.json");
    write_text(p, steep::mask_to_json(mask).dump() + "\n", force);
    outputs.push_back(p.string());
  }
  const fs::path cp = fs::path(c.out) / "counts.csv";
  write_text(cp, counts.str(), force);
  outputs.push_back(cp.string());
  return outputs;
}

std::vector<std::string> cmd_dimension(const config::ExperimentConfig& c, std::vector<std::string> inputs,
                                       int min_level, bool force) {
  if (inputs.empty()) inputs.push_back((fs::path(c.out) / "counts.csv").string());
  std::map<int, std::pair<double, int>> sum;  // level -> (sum of counts, replicas)
  for (const auto& file : inputs) {
    std::ifstream in(file);
    if (!in) throw StructuralError("cannot open counts file " + file);
    std::string line;
    std::getline(in, line);
    if (line != "replica,level,t,count") throw StructuralError(file + ": unexpected header '" + line + "'");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string rep, lv, t, n;
      if (!std::getline(ls, rep, ',') || !std::getline(ls, lv, ',') || !std::getline(ls, t, ',') ||
          !std::getline(ls, n, ','))
        throw StructuralError(file + ": malformed row '" + line + "'");
      auto& [s, k] = sum[std::stoi(lv)];
      s += std::stod(n);
      ++k;
    }
  }
  const auto sched = c.scale_schedule();
  std::vector<double> counts(sched.depth() + 1, 0.0);
  for (const auto& [lv, v] : sum) {
    if (lv < 0 || lv > sched.depth()) throw StructuralError("counts level outside the config schedule");
    counts[lv] = v.first / v.second;
  }
  auto est = fractal::fit_dimension(counts, sched, min_level);
  const auto f = c.function();
  const auto crit = c.band_criterion();
  const auto pred = fractal::predicted_dimension(f, crit);
  est.predicted_lower = pred.lower;
  est.predicted_upper = pred.upper;
  est.predicted_empty = pred.empty;
  est.band_a = crit.a;
  if (f.ratios()) est.band_formula = fractal::band_adjusted_dimension(f, crit.a).formula;
  json j = fractal::to_json(est);
  j["prediction_formula"] = pred.formula;
  if (f.ratios()) j["band_adjusted"] = fractal::band_adjusted_dimension(f, crit.a).lower;

  std::ostringstream tsv;
  tsv.precision(10);
  tsv << "# level\tt\tneg_log_t\tmean_count\tlog_count\tfit\n";
  for (std::size_t k = 0; k < est.levels.size(); ++k) {
    const double x = -std::log(est.scales[k]);
    tsv << est.levels[k] << '\t' << est.scales[k] << '\t' << x << '\t' << est.counts[k] << '\t'
        << std::log(est.counts[k]) << '\t' << est.intercept + est.slope * x << '\n';
  }
  const fs::path pj = fs::path(c.out) / "dimension.json", pt = fs::path(c.out) / "dimension.tsv";
  write_text(pj, j.dump(2) + "\n", force);
  write_text(pt, tsv.str(), force);
  std::cout << "slope " << est.slope << " +- " << est.slope_se << "  predicted [" << pred.lower << ", "
            << pred.upper << "]" << (pred.empty ? " (empty)" : "") << "\n";
  return {pj.string(), pt.string()};
}

template <class T>
T knob(const json& suite, const char* key, T fallback) {
  return suite.contains(key) ? suite.at(key).get<T>() : fallback;
}

verify::VerifyReport run_suite(const std::string& name, const config::ExperimentConfig& c) {
  const json& k = c.suite;
  const std::uint64_t seed = c.seed;
  const int jobs = c.jobs;
  auto reps = [&](std::size_t d) { return knob<std::size_t>(k, "replicas", d); };
  if (name == "covariance")
    return verify::verify_covariance(c.nu, verify::default_covariance_pairs(c.nu), reps(100000), seed, jobs);
  if (name == "regimes") return verify::verify_regimes(knob(k, "cases", 50));
  if (name == "confinement") return verify::verify_confinement(knob<std::size_t>(k, "steps", 1000), reps(20000), seed, jobs);
  if (name == "sandwich" || name == "independence") {
    config::ConstantCache cache;
    const auto p = config::confinement(cache, knob<std::size_t>(k, "confinement_steps", 1000),
                                       knob<std::size_t>(k, "confinement_replicas", 100000), seed, jobs);
    if (name == "independence") {
      const auto ds = knob(k, "dsigma", std::vector<double>{0.5, 1.0});
      if (ds.size() != 2) throw DomainError("independence needs two dSigma values");
      return verify::verify_independence(c.nu, ds[0], ds[1], reps(1000000), seed, c.substeps, jobs);
    }
    return verify::verify_sandwich(c.nu, knob(k, "dsigma", std::vector<double>{0.5, 1.0, 2.0}), reps(1000000), seed,
                                   p, c.substeps, jobs);
  }
  const auto f = c.function();
  auto radii = [&](std::vector<double> d) {
    std::vector<double> out;
    for (double v : knob(k, "neg_log_t", d)) out.push_back(std::exp(-v));
    return out;
  };
  if (name == "normality") return verify::verify_normality_and_lil(f, radii({2, 5, 10}), reps(10000), seed, jobs);
  if (name == "modulus")
    return verify::verify_modulus(f, knob(k, "levels", std::vector<int>{1, 2, 3}), reps(1000), seed,
                                  knob(k, "base_points", 8), knob(k, "radii_per_level", 12), jobs);
  if (name == "exceedance") {
    std::vector<double> d;
    for (int i = 4; i <= 14; ++i) d.push_back(i);
    return verify::verify_exceedance_slope(f, knob(k, "neg_log_t", d), reps(1000000), seed, knob(k, "a", 0.0),
                                           knob(k, "tolerance", 0.05), jobs);
  }
  const auto s = c.scale_schedule();
  if (name == "frostman")
    return verify::verify_frostman_mass(f, s, knob(k, "levels", std::vector<int>{1, 2, 3}), reps(1000), seed, jobs);
  if (name == "nesting") {
    const auto crit = c.band_criterion();
    return verify::verify_nesting(f, s, crit.a, crit.window, knob(k, "gamma", crit.gamma), reps(100), seed, jobs);
  }
  if (name == "variance") return verify::verify_variance(f, s, reps(100000), seed, jobs);
  throw DomainError("unknown verify suite '" + name + "'");
}

std::vector<std::string> cmd_verify(const config::ExperimentConfig& c, const std::string& suite, bool force,
                                    bool& failed) {
  const auto rep = run_suite(suite, c);
  const fs::path p = fs::path(c.out) / ("verify_" + suite + ".json");
  write_text(p, verify::to_json(rep).dump(2) + "\n", force);
  for (const auto& e : rep.entries)
    std::cout << (e.pass ? "PASS " : "FAIL ") << (e.gating ? "" : "(report) ") << e.name << "  " << e.estimate
              << (e.note.empty() ? "" : "  " + e.note) << "\n";
  std::cout << suite << ": " << (rep.pass() ? "pass" : "FAIL") << "\n";
  failed = !rep.pass();
  return {p.string()};
}

std::vector<std::string> cmd_energy(const config::ExperimentConfig& c, const std::vector<std::string>& inputs,
                                    bool force) {
  const auto f = c.function();
  fractal::FrostmanOptions opt;
  opt.mode = fractal::weight_mode_from_name(c.energy.value("weight", std::string("exact_series")));
  opt.supplied_probability = c.energy.value("probability", 0.0);
  opt.length_unit = c.energy.value("length_unit", 1.0);
  opt.events.min_substeps = c.substeps;
  opt.jobs = c.jobs;
  const int level = c.energy.value("level", 3);
  const double alpha = c.energy.value("alpha", 1.0);
  json rows = json::array();
  for (const auto& file : replica_inputs(c, inputs)) {
    const auto r = replica_io::load(file);
    opt.events.seed = r.seed;
    const auto m = fractal::frostman_measure(r, f, level, alpha, opt);
    rows.push_back({{"replica", fs::path(file).filename().string()}, {"level", m.level}, {"alpha", m.alpha},
                    {"phi_probability", m.phi_probability}, {"cells", m.cells.size()}, {"weight", m.weight},
                    {"total_mass", m.total_mass}, {"energy", m.energy_computed ? json(m.energy) : json(nullptr)},
                    {"zero", m.zero}});
  }
  const fs::path p = fs::path(c.out) / "energy.json";
  write_text(p, json({{"weight_mode", fractal::weight_mode_name(opt.mode)}, {"replicas", rows}}).dump(2) + "\n", force);
  return {p.string()};
}

void cmd_funcs() {
  for (const auto& n : testfn::builtin_names()) std::cout << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steepfield: steep points of renormalized sphere averages"};
  app.set_version_flag("--version", std::string(STEEPFIELD_VERSION));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--replicas", g.replicas, "replica count");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--force", g.force, "overwrite existing outputs");

  auto* sim = app.add_subcommand("simulate", "sample field replicas")->fallthrough();
  bool csv = false;
  sim->add_flag("--csv", csv, "also write a CSV per replica");
  auto* det = app.add_subcommand("detect", "steep-set masks and box counts")->fallthrough();
  std::vector<std::string> det_in;
  det->add_option("replicas", det_in, "replica files (default: <out>/replicas/*.bin)");
  auto* dim = app.add_subcommand("dimension", "fit a box-counting dimension")->fallthrough();
  std::vector<std::string> dim_in;
  int min_level = 1;
  dim->add_option("counts", dim_in, "count CSVs (default: <out>/counts.csv)");
  dim->add_option("--min-level", min_level, "first level entering the fit");
  auto* ver = app.add_subcommand("verify", "run a Monte Carlo verification suite")->fallthrough();
  std::string suite;
  ver->add_option("suite", suite, "suite name")->required();
  auto* en = app.add_subcommand("energy", "Frostman measure and alpha-energy")->fallthrough();
  std::vector<std::string> en_in;
  en->add_option("replicas", en_in, "replica files (default: <out>/replicas/*.bin)");
  app.add_subcommand("funcs", "list builtin test functions");

  CLI11_PARSE(app, argc, argv);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (app.got_subcommand("funcs")) {
      cmd_funcs();
      return 0;
    }
    const auto c = resolve(g);
    std::string name;
    std::vector<std::string> outputs;
    bool failed = false;
    if (sim->parsed()) {
      name = "simulate";
      outputs = cmd_simulate(c, g.force, csv);
    } else if (det->parsed()) {
      name = "detect";
      outputs = cmd_detect(c, det_in, g.force);
    } else if (dim->parsed()) {
      name = "dimension";
      outputs = cmd_dimension(c, dim_in, min_level, g.force);
    } else if (ver->parsed()) {
      name = "verify_" + suite;
      const auto known = verify::suite_names();
      if (std::find(known.begin(), known.end(), suite) == known.end())
        throw DomainError("unknown verify suite '" + suite + "'");
      outputs = cmd_verify(c, suite, g.force, failed);
    } else if (en->parsed()) {
      name = "energy";
      outputs = cmd_energy(c, en_in, g.force);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(c, name, secs, outputs, g.force);
    return failed ? 1 : 0;
  } catch (const BudgetExceededError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
