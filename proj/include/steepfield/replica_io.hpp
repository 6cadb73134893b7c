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

#include <iosfwd>
#include <string>

#include "steepfield/sampler.hpp"

// Replica files.
//
// Binary layout, all integers and floats little-endian:
//   offset 0   char[8]  magic "SFREPLIC"
//          8   u32      format version (1)
//         12   u32      nu
//         16   u32      backend (0 exact, 1 hierarchical)
//         20   u32      schedule kind (0 paper, 1 geometric, 2 custom)
//         24   u32      geometric base (0 otherwise)
//         28   u32      depth N
//         32   u64      seed
//         40   f64[N+1] radii t_0..t_N
//   then for n = 0..N:  u64 count, f64[count] values of level n in cell order.
// Cell j at level n has multi-index i_k = floor(j / m^k) mod m, m = 1/t_n,
// and center -1 + (2 i_k + 1) t_n along axis k.

namespace steepfield::replica_io {

void write_binary(std::ostream& os, const sampler::FieldReplica& r);
sampler::FieldReplica read_binary(std::istream& is);

void save(const std::string& path, const sampler::FieldReplica& r);
sampler::FieldReplica load(const std::string& path);

/// One row per cell: level, cell, t, x_1..x_nu, value. Refuses more than
/// `max_rows` rows.
void write_csv(std::ostream& os, const sampler::FieldReplica& r, std::size_t max_rows = 1000000);

}  // namespace steepfield::replica_io
