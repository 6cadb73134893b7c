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

#include <array>
#include <cstdint>

// Counter-based random numbers. A stream is addressed by (seed, domain, a, b),
// so any cell of any level can be generated without touching the others and
// results do not depend on the number of worker threads.

namespace steepfield::rng {

/// One step of splitmix64; advances state.
std::uint64_t splitmix64(std::uint64_t& state);
/// Order-sensitive hash of two words.
std::uint64_t mix(std::uint64_t a, std::uint64_t b);

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Counter philox4x32(Counter ctr, Key key);

// Domains keep unrelated uses of one seed apart.
enum Domain : std::uint64_t {
  kPointPath = 1,
  kExactLattice = 2,
  kHierarchical = 3,
  kBridge = 4,
  kTube = 5,
  kVerify = 6,
};

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t a, std::uint64_t b = 0);

  std::uint32_t next_u32();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal by Box-Muller; draws come in cached pairs.
  double normal();

 private:
  void refill();

  Key key_{};
  std::uint64_t b_ = 0;
  std::uint64_t block_ = 0;
  Counter out_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace steepfield::rng
