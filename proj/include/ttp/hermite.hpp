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

#ifndef TTP_HERMITE_HPP_
#define TTP_HERMITE_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace ttp {

// Cubic Hermite segment matching endpoint values and rates over [0, T].
template <int N>
struct HermiteSegment {
  using Vec = Eigen::Matrix<double, N, 1>;
  Vec q0 = Vec::Zero(), q1 = Vec::Zero();
  Vec v0 = Vec::Zero(), v1 = Vec::Zero();
  double T = 1.0;

  Vec value(double t) const {
    const double u = t / T;
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    return h00 * q0 + (h10 * T) * v0 + h01 * q1 + (h11 * T) * v1;
  }

  Vec rate(double t) const {
    const double u = t / T;
    const double u2 = u * u;
    const double d00 = (6.0 * u2 - 6.0 * u) / T;
    const double d10 = 3.0 * u2 - 4.0 * u + 1.0;
    const double d01 = (-6.0 * u2 + 6.0 * u) / T;
    const double d11 = 3.0 * u2 - 2.0 * u;
    return d00 * q0 + d10 * v0 + d01 * q1 + d11 * v1;
  }
};

// Piecewise cubic curve over contiguous segments; evaluation clamps to the
// covered interval only when `strict` is false.
template <int N>
class PiecewiseHermite {
 public:
  using Segment = HermiteSegment<N>;
  using Vec = typename Segment::Vec;

  void add_segment(const Segment& seg) {
    if (!(seg.T > 0.0)) throw std::invalid_argument("hermite segment duration must be positive");
    segments_.push_back(seg);
  }

  double duration() const {
    double total = 0.0;
    for (const auto& s : segments_) total += s.T;
    return total;
  }

  int segment_index(double t) const {
    if (segments_.empty()) throw std::out_of_range("empty trajectory");
    if (t < -1e-12 || t > duration() + 1e-12)
      throw std::out_of_range("evaluation time outside trajectory");
    double start = 0.0;
    for (size_t i = 0; i < segments_.size(); ++i) {
      if (t <= start + segments_[i].T || i + 1 == segments_.size())
        return static_cast<int>(i);
      start += segments_[i].T;
    }
    return static_cast<int>(segments_.size()) - 1;
  }

  Vec value(double t) const {
    const int i = segment_index(t);
    return segments_[i].value(local_time(t, i));
  }

  Vec rate(double t) const {
    const int i = segment_index(t);
    return segments_[i].rate(local_time(t, i));
  }

  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }

 private:
  double local_time(double t, int i) const {
    double start = 0.0;
    for (int k = 0; k < i; ++k) start += segments_[k].T;
    const double local = std::clamp(t - start, 0.0, segments_[i].T);
    return local;
  }

  std::vector<Segment> segments_;
};

}  // namespace ttp

#endif  // TTP_HERMITE_HPP_
