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

#ifndef TTP_HEIGHTMAP_HPP_
#define TTP_HEIGHTMAP_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ttp/terrain.hpp"

namespace ttp {

// Dense 2.5D height grid. File format: a text header line
//   heightmap <origin_x> <origin_y> <resolution> <width> <height>
// followed by height*width row-major floats (row 0 at origin_y). NaN marks
// unknown cells.
struct Heightmap {
  double origin_x = 0.0, origin_y = 0.0;
  double resolution = 0.02;
  int width = 0, height = 0;
  std::vector<double> data;  // row-major, data[row * width + col]

  double at(int col, int row) const { return data[static_cast<size_t>(row) * width + col]; }

  bool sample(double x, double y, double* out) const {
    const int col = static_cast<int>(std::floor((x - origin_x) / resolution + 0.5));
    const int row = static_cast<int>(std::floor((y - origin_y) / resolution + 0.5));
    if (col < 0 || col >= width || row < 0 || row >= height) return false;
    const double v = at(col, row);
    if (std::isnan(v)) return false;
    *out = v;
    return true;
  }

  static Heightmap from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open heightmap: " + path);
    std::string tag;
    Heightmap m;
    in >> tag >> m.origin_x >> m.origin_y >> m.resolution >> m.width >> m.height;
    if (tag != "heightmap" || !in || m.width <= 0 || m.height <= 0)
      throw IoError("malformed heightmap header in " + path);
    m.data.resize(static_cast<size_t>(m.width) * m.height);
    for (auto& v : m.data) {
      std::string cell;
      if (!(in >> cell)) throw IoError("heightmap data truncated in " + path);
      v = (cell == "nan" || cell == "NaN") ? std::numeric_limits<double>::quiet_NaN()
                                           : std::strtod(cell.c_str(), nullptr);
    }
    return m;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "heightmap " << format_double(origin_x) << ' ' << format_double(origin_y) << ' '
        << format_double(resolution) << ' ' << width << ' ' << height << '\n';
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double v = at(c, r);
        out << (std::isnan(v) ? std::string("nan") : format_double(v))
            << (c + 1 < width ? ' ' : '\n');
      }
    }
  }
};

struct SampleConfig {
  double d_r = 0.02;            // waypoint spacing along the path (m)
  double strip_half_width = 0.15;  // normal strip half-width (m)
  double strip_step = 0.02;     // sample spacing along the normal (m)
  double mad_k = 3.0;           // outlier rejection threshold in MADs
};

namespace detail {
inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

// Mean of the strip samples after a median-absolute-deviation outlier
// reject; mitigates map sparsity and random noise on each normal.
inline double filtered_strip_mean(const std::vector<double>& samples, double mad_k) {
  if (samples.empty()) throw TerrainError("empty strip: no valid cells on the normal");
  const double med = detail::median_of(samples);
  std::vector<double> dev;
  dev.reserve(samples.size());
  for (double s : samples) dev.push_back(std::abs(s - med));
  const double mad = detail::median_of(dev);
  double sum = 0.0;
  int n = 0;
  for (double s : samples) {
    if (mad > 1e-12 && std::abs(s - med) > mad_k * 1.4826 * mad) continue;
    sum += s;
    ++n;
  }
  if (n == 0) return med;
  return sum / n;
}

// Samples the heightmap along the normals of a reference path polyline and
// projects the filtered mean heights onto the distance-height plane.
inline Profile sample_profile(const Heightmap& map, const std::vector<Vec2>& path,
                              const SampleConfig& cfg) {
  if (path.size() < 2) throw TerrainError("reference path needs at least 2 waypoints");
  Profile profile;
  double d = 0.0;
  size_t seg = 0;
  double seg_pos = 0.0;
  while (true) {
    const Vec2 a = path[seg], b = path[seg + 1];
    const double seg_len = (b - a).norm();
    if (seg_pos > seg_len) {
      seg_pos -= seg_len;
      if (++seg + 1 >= path.size()) break;
      continue;
    }
    const Vec2 tangent = (b - a) / seg_len;
    const Vec2 normal(-tangent.y(), tangent.x());
    const Vec2 p = a + seg_pos * tangent;
    std::vector<double> samples;
    for (double w = -cfg.strip_half_width; w <= cfg.strip_half_width + 1e-12;
         w += cfg.strip_step) {
      const Vec2 q = p + w * normal;
      double h;
      if (map.sample(q.x(), q.y(), &h)) samples.push_back(h);
    }
    if (samples.empty())
      throw TerrainError("empty strip at d = " + std::to_string(d));
    profile.push_back({d, filtered_strip_mean(samples, cfg.mad_k)});
    d += cfg.d_r;
    seg_pos += cfg.d_r;
  }
  if (profile.size() < 2) throw TerrainError("path too short for sampling");
  return profile;
}

}  // namespace ttp

#endif  // TTP_HEIGHTMAP_HPP_
