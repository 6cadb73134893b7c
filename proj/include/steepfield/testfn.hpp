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

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

// Piecewise test functions f on (0,1], the clock Sigma_t^f = int_1^t f^2 dG,
// and the class checks (a)-(d).

namespace steepfield::testfn {

/// Evaluator families. On a segment (left, right]:
///   affine_inv_sqrt_g : f = p0 + p1 / sqrt(G(t))      (constants when p1 = 0)
///   power             : f = p0 * t^p1
///   log_sine          : f = p0 * sin(p1 * (-ln t))
enum class SegmentKind { affine_inv_sqrt_g, power, log_sine };

const char* kind_name(SegmentKind k);
SegmentKind kind_from_name(const std::string& name);

struct Segment {
  double left = 0.0;   // exclusive
  double right = 1.0;  // inclusive
  SegmentKind kind = SegmentKind::affine_inv_sqrt_g;
  std::vector<double> params;
};

struct GrowthCert {
  double Cf = 1.0;
  double rho = 1.0;
};

/// Analytic limsup / liminf of Sigma_t / (-ln t). Infinite values allowed.
struct RatioCert {
  double upper = 0.0;
  double lower = 0.0;
};

class TestFunction {
 public:
  TestFunction() = default;
  TestFunction(int nu, std::vector<Segment> segments, std::vector<double> jumps, GrowthCert cert);

  int nu() const { return nu_; }
  const std::vector<Segment>& segments() const { return segments_; }
  /// Decreasing jump points t_1 > t_2 > ... in (0,1).
  const std::vector<double>& jumps() const { return jumps_; }
  const GrowthCert& growth() const { return growth_; }
  const std::optional<RatioCert>& ratios() const { return ratios_; }
  const std::string& builtin() const { return builtin_; }
  const nlohmann::json& builtin_params() const { return builtin_params_; }
  bool validated() const { return validated_; }

  double operator()(double t) const;
  std::size_t segment_index(double t) const;
  /// Sigma_t with no validation gate; used by the class checks themselves.
  double sigma_unchecked(double t) const;
  /// Sigma between two radii lo < hi, int_hi^lo f^2 dG.
  double sigma_between(double lo, double hi) const;

  TestFunction with_ratios(RatioCert r) const;
  TestFunction with_builtin(std::string name, const nlohmann::json& params) const;

 private:
  friend TestFunction certify(TestFunction f, double t_min);
  double segment_sigma(const Segment& s, double lo, double hi) const;

  int nu_ = 2;
  std::vector<Segment> segments_;
  std::vector<double> jumps_;
  GrowthCert growth_;
  std::optional<RatioCert> ratios_;
  std::string builtin_;
  nlohmann::json builtin_params_;
  bool validated_ = false;
};

struct ClassCReport {
  bool growth = false;      // (a)
  bool jumps = false;       // (b)
  bool monotone = false;    // (c)
  bool divergence = false;  // (d)
  std::vector<std::string> witnesses;
  bool all() const { return growth && jumps && monotone && divergence; }
};

/// Checks (a)-(d) on a dyadic grid down to t_min. Throws StructuralError on
/// malformed segments.
ClassCReport validate_class_C(const TestFunction& f, double t_min);
/// Runs the checks and returns a copy marked validated; throws StructuralError
/// naming the failed conditions otherwise.
TestFunction certify(TestFunction f, double t_min = 1e-6);

struct Clock {
  double t = 1.0;
  double sigma = 0.0;
};

/// Refuses functions that have not been certified.
Clock sigma(const TestFunction& f, double t);

struct LimitRatios {
  double upper = 0.0;
  double lower = 0.0;
  double numeric_upper = 0.0;
  double numeric_lower = 0.0;
  bool certified = false;    // analytic values available
  bool agrees = false;       // numeric within tolerance of the certificate
  std::string note;
};

/// Estimates limsup / liminf of Sigma_t / (-ln t) along a decreasing grid
/// reaching t <= 1e-6.
LimitRatios limit_ratios(const TestFunction& f, const std::vector<double>& grid, double tolerance = 0.02);

enum class SequenceCheck { fast_decay, ratio };

struct SequenceReport {
  std::vector<double> values;         // fast decay: n(-ln r_{n-1})/(-ln r_n); ratio: m / Sigma_{r_m}
  std::vector<double> second_values;  // ratio kind only: Sigma_{r_{m+1}} / Sigma_{r_m}
  bool holds = false;
  bool first_holds = false;
  bool second_holds = false;
  std::string detail;
};

/// Sequence given through -ln r_m, m = 1, 2, ... so that fast sequences do not
/// underflow. The ratio kind needs f.
SequenceReport check_sequence(SequenceCheck kind, const std::vector<double>& neg_log_r,
                              const TestFunction* f = nullptr);

// Builtins. Sequences r_1 > r_2 > ... (r_0 = 1 implied) are passed through
// -ln r_m and must satisfy the fast-decay condition on their prefix.
TestFunction constant(int nu, double gamma);
TestFunction inverse_sqrt_G(int nu, double c);
TestFunction oscillating_constant(int nu, double gamma, const std::vector<double>& neg_log_r);
TestFunction g_thick(int nu, double gamma, const std::vector<double>& neg_log_r);
TestFunction g_oscil(int nu, double gamma, const std::vector<double>& neg_log_r);
TestFunction g_eps(int nu, double gamma_prime, double eps, const std::vector<double>& neg_log_r);

/// -ln r_m for r_m = 2^{-(m!)^2}, m = 1..count.
std::vector<double> factorial_square_sequence(int count);

std::vector<std::string> builtin_names();
TestFunction from_json(const nlohmann::json& j);
nlohmann::json to_json(const TestFunction& f);

}  // namespace steepfield::testfn
