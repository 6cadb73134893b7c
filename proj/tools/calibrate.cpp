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


// Prints the constants frozen in include/steepfield/constants.hpp. Rerun only
// when the kernels change; tests never refit them.

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "steepfield/covariance.hpp"
#include "steepfield/specfun.hpp"
#include "steepfield/steep.hpp"

using namespace steepfield;

namespace {

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1)));
  return v;
}

// max d^2 / (t^{2-nu} sqrt(r/t) + |G(t) - G(s)|) over a log grid of (r, t, s).
double intrinsic_constant(int nu) {
  double best = 0.0;
  for (double r : geometric(1e-4, 2.0 * std::sqrt(nu), 24)) {
    for (double t : geometric(1e-3, 1.0, 16)) {
      for (double s : geometric(1e-3, 1.0, 16)) {
        // Opposite corners direction, so every r up to the cube diameter fits.
        covariance::AvgPoint a{std::vector<double>(nu, -1.0), t}, b{std::vector<double>(nu, std::min(1.0, -1.0 + r / std::sqrt(nu))), s};
        const double d2 = covariance::intrinsic_metric_sq(a, b);
        const double bound =
            std::pow(t, 2.0 - nu) * std::sqrt(r / t) + std::fabs(specfun::green(nu, t) - specfun::green(nu, s));
        best = std::max(best, d2 / bound);
      }
    }
  }
  return best;
}

double psi_constant(int nu) {
  double best = 0.0;
  for (double w : geometric(1e-6, 400.0, 20000)) best = std::max(best, std::fabs(covariance::psi(nu, w)) / std::sqrt(w));
  return best;
}

}  // namespace

int main() {
  std::printf("kIntrinsicMetricC = {0, 0");
  for (int nu = 2; nu <= 4; ++nu) std::printf(", %.6f", intrinsic_constant(nu));
  std::printf("}\nkPsiC = {0, 0");
  for (int nu = 2; nu <= 4; ++nu) std::printf(", %.6f", psi_constant(nu));
  std::printf("}\nkConfinementP = %.12f\n", steep::confinement_probability());
  return 0;
}
