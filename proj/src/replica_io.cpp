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


#include "steepfield/replica_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "steepfield/errors.hpp"

namespace steepfield::replica_io {

namespace {

constexpr char kMagic[8] = {'S', 'F', 'R', 'E', 'P', 'L', 'I', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  std::array<unsigned char, sizeof(T)> b;
  std::uint64_t u = 0;
  if constexpr (std::is_same_v<T, double>) {
    u = std::bit_cast<std::uint64_t>(v);
  } else {
    u = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b.data()), b.size());
}

template <typename T>
T get(std::istream& is) {
  std::array<unsigned char, sizeof(T)> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) throw StructuralError("replica file truncated");
  std::uint64_t u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(u);
  } else {
    return static_cast<T>(u);
  }
}

}  // namespace

void write_binary(std::ostream& os, const sampler::FieldReplica& r) {
  os.write(kMagic, 8);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(r.nu));
  put<std::uint32_t>(os, r.backend == sampler::Backend::exact ? 0u : 1u);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(r.schedule.kind));
  put<std::uint32_t>(os, r.schedule.kind == sampler::ScheduleKind::geometric ? r.schedule.base : 0u);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(r.schedule.depth()));
  put<std::uint64_t>(os, r.seed);
  for (double t : r.schedule.t) put<double>(os, t);
  for (const auto& level : r.levels) {
    put<std::uint64_t>(os, level.size());
    for (double v : level) put<double>(os, v);
  }
  if (!os) throw StructuralError("replica write failed");
}

sampler::FieldReplica read_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw StructuralError("not a replica file (bad magic)");
  if (get<std::uint32_t>(is) != kVersion) throw StructuralError("unsupported replica format version");
  sampler::FieldReplica r;
  r.nu = static_cast<int>(get<std::uint32_t>(is));
  const auto backend = get<std::uint32_t>(is);
  if (backend > 1) throw StructuralError("replica file: bad backend code");
  r.backend = backend == 0 ? sampler::Backend::exact : sampler::Backend::hierarchical;
  const auto kind = get<std::uint32_t>(is);
  const auto base = get<std::uint32_t>(is);
  const auto depth = get<std::uint32_t>(is);
  r.seed = get<std::uint64_t>(is);
  if (depth > 64) throw StructuralError("replica file: implausible depth");
  std::vector<double> t(depth + 1);
  for (auto& v : t) v = get<double>(is);
  switch (kind) {
    case 0: r.schedule = sampler::ScaleSchedule::paper(static_cast<int>(depth)); break;
    case 1: r.schedule = sampler::ScaleSchedule::geometric(static_cast<int>(base), static_cast<int>(depth)); break;
    case 2: r.schedule = sampler::ScaleSchedule::custom(t); break;
    default: throw StructuralError("replica file: bad schedule code");
  }
  if (r.schedule.t != t) throw StructuralError("replica file: radii disagree with the schedule kind");
  for (std::uint32_t n = 0; n <= depth; ++n) {
    const auto count = get<std::uint64_t>(is);
    if (count != r.schedule.cells(r.nu, static_cast<int>(n))) throw StructuralError("replica file: level size mismatch");
    std::vector<double> v(count);
    for (auto& x : v) x = get<double>(is);
    r.levels.push_back(std::move(v));
  }
  return r;
}

void save(const std::string& path, const sampler::FieldReplica& r) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw StructuralError("cannot open '" + path + "' for writing");
  write_binary(os, r);
}

sampler::FieldReplica load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw StructuralError("cannot open '" + path + "'");
  return read_binary(is);
}

void write_csv(std::ostream& os, const sampler::FieldReplica& r, std::size_t max_rows) {
  std::size_t rows = 0;
  for (const auto& l : r.levels) rows += l.size();
  if (rows > max_rows) throw BudgetExceededError("replica too large for CSV export");
  os << "level,cell,t";
  for (int k = 0; k < r.nu; ++k) os << ",x" << (k + 1);
  os << ",value\n" << std::setprecision(17);
  for (int n = 0; n <= r.schedule.depth(); ++n) {
    const auto L = sampler::lattice(r.nu, r.schedule, n);
    for (std::uint64_t j = 0; j < r.levels[n].size(); ++j) {
      os << n << ',' << j << ',' << L.half_width;
      for (double x : L.center(j)) os << ',' << x;
      os << ',' << r.levels[n][j] << '\n';
    }
  }
}

}  // namespace steepfield::replica_io
