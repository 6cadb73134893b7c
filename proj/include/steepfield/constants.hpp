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

// Constants calibrated once by tools/calibrate and frozen here. Tests read
// these values; they are never refitted at test time.

namespace steepfield::constants {

// d^2(x,t;y,s) <= C (t^{2-nu} sqrt(|x-y|/t) + |G(t) - G(s)|), indexed by nu.
// Grid maxima 0.990697, 0.999874, 1.000000 (attained as |x-y| -> 0), with 5%
// headroom for points off the calibration grid.
inline constexpr double kIntrinsicMetricC[5] = {0.0, 0.0, 1.041, 1.050, 1.050};

// |psi(w)| <= C sqrt(w) on [0, inf), indexed by nu.
// Grid maxima 0.740217, 0.595777, 0.520840, rounded up.
inline constexpr double kPsiC[5] = {0.0, 0.0, 0.741, 0.596, 0.521};

// P(sup_{[0,1]} |B| <= 1), the confinement probability of standard Brownian
// motion, from its eigenfunction series.
inline constexpr double kConfinementP = 0.370777429800;

}  // namespace steepfield::constants
