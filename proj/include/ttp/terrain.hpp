// Copyright 2026 The ttp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TTP_TERRAIN_HPP_
#define TTP_TERRAIN_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttp/io.hpp"
#include "ttp/robot_model.hpp"

namespace ttp {

class TerrainError : public std::runtime_error {
 public:
  explicit TerrainError(const std::string& what) : std::runtime_error(what) {}
};

// Sampled height profile point along the reference path.
struct ProfilePoint {
  double d = 0.0;  // arc-length distance along the path (m)
  double h = 0.0;  // height (m)
};

using Profile = std::vector<ProfilePoint>;

struct SimplifyConfig {
  double d_r = 0.02;      // sampling resolution (m)
  double delta_m = 0.04;  // max tolerable cover deviation above the chord (m)
  double delta_l = 0.02;  // within-segment band half-width (m)
  int n_ign = 3;          // max ignored points between segments
  double max_gap = 0.4;   // max spacing between consecutive within-points (m); l_t/2

  void validate() const {
    if (!(d_r > 0.0)) throw TerrainError("d_r must be positive");
    if (!(delta_l <= delta_m)) throw TerrainError("delta_l must not exceed delta_m");
    if (n_ign < 0) throw TerrainError("n_ign must be nonnegative");
    if (!(max_gap > 0.0)) throw TerrainError("max_gap must be positive");
  }
};

// One simplified terrain plane. h_step is the signed height from this
// segment's end to the next segment's start; the last segment carries 0.
struct TerrainSegment {
  ProfilePoint p_start, p_end;
  double alpha = 0.0;
  double h_step = 0.0;
  double length = 0.0;
  double sparsity = 0.0;
  int start_index = -1, end_index = -1;  // indices into the source profile

  TerrainLine line() const {
    TerrainLine l;
    l.origin = Vec2(p_start.d, p_start.h);
    l.alpha = alpha;
    return l;
  }
  Vec2 start_point() const { return Vec2(p_start.d, p_start.h); }
  Vec2 end_point() const { return Vec2(p_end.d, p_end.h); }
};

using TerrainSequence = std::vector<TerrainSegment>;

inline TerrainSegment make_segment(const ProfilePoint& a, const ProfilePoint& b, int ia = -1,
                                   int ib = -1) {
  if (!(a.d < b.d)) throw TerrainError("segment endpoints must increase in d");
  TerrainSegment s;
  s.p_start = a;
  s.p_end = b;
  s.alpha = std::atan2(b.h - a.h, b.d - a.d);
  s.length = std::hypot(b.d - a.d, b.h - a.h);
  s.start_index = ia;
  s.end_index = ib;
  return s;
}

inline std::string terrain_csv(const TerrainSequence& seq) {
  CsvWriter csv({"d_start", "h_start", "d_end", "h_end", "alpha", "h_step", "length", "sparsity"});
  for (const auto& s : seq)
    csv.add_row({s.p_start.d, s.p_start.h, s.p_end.d, s.p_end.h, s.alpha, s.h_step, s.length,
                 s.sparsity});
  return csv.str();
}

inline void write_terrain_csv(const TerrainSequence& seq, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << terrain_csv(seq);
}

inline Profile read_profile_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int cd = t.column("d");
  const int ch = t.column("h");
  Profile p;
  p.reserve(t.rows.size());
  for (const auto& row : t.rows) p.push_back({row[cd], row[ch]});
  for (size_t i = 1; i < p.size(); ++i)
    if (!(p[i].d > p[i - 1].d)) throw TerrainError("profile d must be strictly increasing");
  return p;
}

inline void write_profile_csv(const Profile& p, const std::string& path) {
  CsvWriter csv({"d", "h"});
  for (const auto& q : p) csv.add_row({q.d, q.h});
  csv.write(path);
}

}  // namespace ttp

#endif  // TTP_TERRAIN_HPP_
