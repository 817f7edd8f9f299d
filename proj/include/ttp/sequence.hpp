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

#ifndef TTP_SEQUENCE_HPP_
#define TTP_SEQUENCE_HPP_

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ttp/robot_model.hpp"

namespace ttp {

enum class Direction { kAscending, kDescending };

// Hybrid mode tag. Traversing carries the key-node index 1..4 and the
// traversal direction.
struct Mode {
  enum class Tag { kDriving, kTraversing };
  Tag tag = Tag::kDriving;
  int node = 0;
  Direction direction = Direction::kAscending;

  static Mode driving() { return Mode{}; }
  static Mode traversing(int node, Direction dir) {
    return Mode{Tag::kTraversing, node, dir};
  }
  bool is_driving() const { return tag == Tag::kDriving; }
  bool is_traversing() const { return tag == Tag::kTraversing; }
};

// Scalar residual over the node state x = (s, theta_f, theta_r, theta_t)
// with an analytic gradient.
struct Residual {
  std::string name;
  std::function<double(const Eigen::Vector4d&, Eigen::Vector4d*)> eval;

  double operator()(const Eigen::Vector4d& x, Eigen::Vector4d* grad = nullptr) const {
    return eval(x, grad);
  }
};

// Constraint set of one traversal-sequence node: smooth equalities and
// inequalities (g <= 0) plus the admissible s range. Strict range bounds are
// shrunk by eps to stay NLP-friendly.
struct NodeConstraintSet {
  std::vector<Residual> equalities;
  std::vector<Residual> inequalities;
  double s_lower = 0.0, s_upper = 0.0;
  bool s_pinned = false;
  double s_pin = 0.0;

  double max_equality_violation(const Eigen::Vector4d& x) const {
    double m = 0.0;
    for (const auto& r : equalities) m = std::max(m, std::abs(r(x)));
    if (s_pinned) m = std::max(m, std::abs(x[0] - s_pin));
    return m;
  }
  double max_inequality_violation(const Eigen::Vector4d& x) const {
    double m = 0.0;
    for (const auto& r : inequalities) m = std::max(m, r(x));
    if (!s_pinned) {
      m = std::max(m, s_lower - x[0]);
      m = std::max(m, x[0] - s_upper);
    }
    return m;
  }
};

// Geometry and terrain-pair parameters a traversal is described against.
// Lengths are effective model lengths; alpha and h are the relative
// inclination and height between the two terrains (the ascending-description
// values live in the current-terrain frame).
struct TraversalContext {
  double lf = 0.0, lr = 0.0, lt = 0.0;
  double s_com = 0.0;
  double alpha = 0.0, h = 0.0;
  double theta_u = 0.0, theta_l = 0.0;
  double tht_lower = 0.0, tht_upper = 0.0;  // pitch bounds
  double eps = 1e-6;

  double l_sum() const { return lf + lt + lr; }

  TraversalContext dual() const {
    TraversalContext d = *this;
    d.lf = lr;
    d.lr = lf;
    d.s_com = l_sum() - s_com;
    d.h = -h;
    // alpha is mirror invariant; pitch bounds mirror about alpha.
    d.tht_lower = 2.0 * alpha - tht_upper;
    d.tht_upper = 2.0 * alpha - tht_lower;
    return d;
  }
};

namespace residuals {

// (lf - s) sin(theta_f) - h : support point on the front flipper (Q1).
inline Residual q1_contact(const TraversalContext& c) {
  const double lf = c.lf, h = c.h;
  return {"q1_contact", [lf, h](const Eigen::Vector4d& x, Eigen::Vector4d* g) {
            if (g) *g << -std::sin(x[1]), (lf - x[0]) * std::cos(x[1]), 0.0, 0.0;
            return (lf - x[0]) * std::sin(x[1]) - h;
          }};
}

// theta_t: track flush on the current terrain (Q1).
inline Residual pitch_flush() {
  return {"pitch_flush", [](const Eigen::Vector4d& x, Eigen::Vector4d* g) {
            if (g) *g << 0.0, 0.0, 0.0, 1.0;
            return x[3];
          }};
}

// lt sin(theta_t) + lr sin(theta_t - theta_r) - h : rear flipper tip on the
// lower terrain with the joint at the support point (Q2).
inline Residual q2_rear(const TraversalContext& c) {
  const double lt = c.lt, lr = c.lr, h = c.h;
  return {"q2_rear", [lt, lr, h](const Eigen::Vector4d& x, Eigen::Vector4d* g) {
            const double a = x[3] - x[2];
            if (g)
              *g << 0.0, 0.0, -lr * std::cos(a), lt * std::cos(x[3]) + lr * std::cos(a);
            return lt * std::sin(x[3]) + lr * std::sin(a) - h;
          }};
}

// (s - lf) sin(theta_t - alpha) + lf sin(theta_t + theta_f - alpha) : front
// flipper tip on the target terrain while the track rides the support point
// (Q3/Q4).
inline Residual front_contact(const TraversalContext& c) {
  const double lf = c.lf, alpha = c.alpha;
  return {"front_contact", [lf, alpha](const Eigen::Vector4d& x, Eigen::Vector4d* g) {
            const double a = x[3] - alpha;
            const double b = x[3] + x[1] - alpha;
            if (g)
              *g << std::sin(a), lf * std::cos(b), 0.0,
                  (x[0] - lf) * std::cos(a) + lf * std::cos(b);
            return (x[0] - lf) * std::sin(a) + lf * std::sin(b);
          }};
}

// (lt + lf - s) sin(theta_t) + lr sin(theta_t - theta_r) - h : rear flipper
// tip on the lower terrain (Q3 equality; Q4 keeps it as <= 0 so the rear
// flipper may lift once the COM has passed the support point).
inline Residual rear_contact(const TraversalContext& c) {
  const double lf = c.lf, lt = c.lt, lr = c.lr, h = c.h;
  return {"rear_contact", [lf, lt, lr, h](const Eigen::Vector4d& x, Eigen::Vector4d* g) {
            const double a = x[3] - x[2];
            if (g)
              *g << -std::sin(x[3]), 0.0, -lr * std::cos(a),
                  (lt + lf - x[0]) * std::cos(x[3]) + lr * std::cos(a);
            return (lt + lf - x[0]) * std::sin(x[3]) + lr * std::sin(a) - h;
          }};
}

// Affine residual c0 + sum_k coeff_k x_k.
inline Residual affine(std::string name, double c0, const Eigen::Vector4d& coeff) {
  return {std::move(name), [c0, coeff](const Eigen::Vector4d& x, Eigen::Vector4d* g) {
            if (g) *g = coeff;
            return c0 + coeff.dot(x);
          }};
}

}  // namespace residuals

// Constraint set for ascending key node i (1..4), Table-style geometric
// descriptions in the current-terrain frame.
inline NodeConstraintSet ascending_node_constraints(int i, const TraversalContext& c) {
  using Eigen::Vector4d;
  NodeConstraintSet set;
  switch (i) {
    case 1:
      set.equalities = {residuals::q1_contact(c), residuals::pitch_flush()};
      set.inequalities = {
          residuals::affine("theta_r_low", 0.0, Vector4d(0, 0, -1, 0)),
          residuals::affine("theta_r_high", -c.theta_u, Vector4d(0, 0, 1, 0)),
      };
      set.s_lower = c.eps;
      set.s_upper = c.lf - c.eps;
      break;
    case 2:
      set.equalities = {residuals::q2_rear(c)};
      set.s_pinned = true;
      set.s_pin = c.lf;
      set.s_lower = set.s_upper = c.lf;
      set.inequalities = {
          residuals::affine("tht_low", c.tht_lower, Vector4d(0, 0, 0, -1)),
          residuals::affine("tht_high", -c.tht_upper, Vector4d(0, 0, 0, 1)),
          // Front flipper at or above the target terrain plane.
          residuals::affine("theta_f_low", -c.alpha, Vector4d(0, -1, 0, -1)),
          residuals::affine("theta_f_high", -c.theta_u, Vector4d(0, 1, 0, 0)),
          residuals::affine("theta_r_low", c.theta_l, Vector4d(0, 0, -1, 0)),
          residuals::affine("theta_r_below_pitch", 0.0, Vector4d(0, 0, 1, -1)),
      };
      break;
    case 3:
    case 4: {
      set.equalities = {residuals::front_contact(c)};
      if (i == 3) {
        set.equalities.push_back(residuals::rear_contact(c));
        set.s_lower = c.lf + c.eps;
        set.s_upper = c.s_com - c.eps;
      } else {
        set.inequalities.push_back(residuals::rear_contact(c));
        set.s_lower = c.s_com;
        set.s_upper = c.lf + c.lt - c.eps;
      }
      set.inequalities.push_back(
          residuals::affine("tht_low_alpha", c.alpha, Vector4d(0, 0, 0, -1)));
      set.inequalities.push_back(
          residuals::affine("tht_high", -c.tht_upper, Vector4d(0, 0, 0, 1)));
      set.inequalities.push_back(
          residuals::affine("theta_r_low", c.theta_l, Vector4d(0, 0, -1, 0)));
      set.inequalities.push_back(
          residuals::affine("theta_r_below_pitch", 0.0, Vector4d(0, 0, 1, -1)));
      break;
    }
    default:
      throw ModelError("traversal node index must be in 1..4");
  }
  return set;
}

// Dual state map used by the descending description: s -> l_sum - s,
// flippers swapped, pitch mirrored about the relative inclination.
inline Eigen::Vector4d descending_dual_state(const Eigen::Vector4d& x,
                                             const TraversalContext& c) {
  return Eigen::Vector4d(c.l_sum() - x[0], x[2], x[1], c.alpha - x[3]);
}

namespace detail {
inline Residual dualize(const Residual& r, const TraversalContext& c) {
  const double l_sum = c.l_sum();
  const double alpha = c.alpha;
  auto inner = r.eval;
  return {r.name + "_dual",
          [inner, l_sum, alpha](const Eigen::Vector4d& x, Eigen::Vector4d* g) {
            const Eigen::Vector4d xd(l_sum - x[0], x[2], x[1], alpha - x[3]);
            if (!g) return inner(xd, nullptr);
            Eigen::Vector4d gd;
            const double v = inner(xd, &gd);
            *g << -gd[0], gd[2], gd[1], -gd[3];
            return v;
          }};
}
}  // namespace detail

// Descending node i described through the dual configuration: apply the
// ascending description of node 5 - i with dual parameters to the dual
// state. The context carries the descent's own (negative-step) h.
inline NodeConstraintSet descending_node_constraints(int i, const TraversalContext& c) {
  if (i < 1 || i > 4) throw ModelError("traversal node index must be in 1..4");
  const TraversalContext cd = c.dual();
  const NodeConstraintSet asc = ascending_node_constraints(5 - i, cd);
  NodeConstraintSet set;
  for (const auto& r : asc.equalities) set.equalities.push_back(detail::dualize(r, c));
  for (const auto& r : asc.inequalities) set.inequalities.push_back(detail::dualize(r, c));
  const double l_sum = c.l_sum();
  set.s_lower = l_sum - asc.s_upper;
  set.s_upper = l_sum - asc.s_lower;
  set.s_pinned = asc.s_pinned;
  if (asc.s_pinned) {
    set.s_pin = l_sum - asc.s_pin;
    set.s_lower = set.s_upper = set.s_pin;
  }
  return set;
}

inline NodeConstraintSet node_constraints(int i, Direction dir, const TraversalContext& c) {
  return dir == Direction::kAscending ? ascending_node_constraints(i, c)
                                      : descending_node_constraints(i, c);
}

// Driving-mode configuration constraints: flippers above ground, below the
// upper bound. The track-flush condition is embedded in pose reconstruction.
inline NodeConstraintSet driving_constraints(const RobotParams& p) {
  using Eigen::Vector4d;
  NodeConstraintSet set;
  set.inequalities = {
      residuals::affine("theta_f_low", 0.0, Vector4d(0, -1, 0, 0)),
      residuals::affine("theta_f_high", -p.theta_u, Vector4d(0, 1, 0, 0)),
      residuals::affine("theta_r_low", 0.0, Vector4d(0, 0, -1, 0)),
      residuals::affine("theta_r_high", -p.theta_u, Vector4d(0, 0, 1, 0)),
  };
  set.s_lower = -std::numeric_limits<double>::infinity();
  set.s_upper = std::numeric_limits<double>::infinity();
  return set;
}

// Direction decision for one terrain junction, including the h = 0 special
// cases. For h = 0 with positive relative inclination the ascending
// description needs a small substitute height h_delta.
struct TraversalDecision {
  bool traverse = false;
  Direction direction = Direction::kAscending;
  double h_eff = 0.0;
};

inline TraversalDecision classify_traversal(double h_step, double alpha_rel,
                                            double h_delta = 0.01) {
  if (!(h_delta > 0.0)) throw ModelError("h_delta must be positive");
  TraversalDecision d;
  if (h_step > 0.0) {
    d.traverse = true;
    d.direction = Direction::kAscending;
    d.h_eff = h_step;
  } else if (h_step < 0.0) {
    d.traverse = true;
    d.direction = Direction::kDescending;
    d.h_eff = h_step;
  } else if (alpha_rel < 0.0) {
    d.traverse = true;
    d.direction = Direction::kDescending;
    d.h_eff = 0.0;
  } else if (alpha_rel > 0.0) {
    d.traverse = true;
    d.direction = Direction::kAscending;
    d.h_eff = h_delta;
  }
  return d;
}

}  // namespace ttp

#endif  // TTP_SEQUENCE_HPP_
