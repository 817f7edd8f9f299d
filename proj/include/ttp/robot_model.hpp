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

#ifndef TTP_ROBOT_MODEL_HPP_
#define TTP_ROBOT_MODEL_HPP_

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ttp/io.hpp"

namespace ttp {

using Vec2 = Eigen::Vector2d;

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Physical geometry and motion limits of an articulated tracked robot with
// front and rear flipper pairs. Flipper angle bounds and all planner-side
// angles refer to model angles (physical angle plus the gear offset delta).
struct RobotParams {
  double l0 = 0.4;       // flipper physical length (m)
  double l_t = 0.8;      // main track length (m)
  double gear_R = 0.12;  // large gear radius (m)
  double gear_r = 0.06;  // small gear radius (m)
  double d_com = 0.4;    // COM offset from track front end along the bottom (m)
  double theta_u = 1.3962634015954636;   // flipper angle upper bound (rad, 80 deg)
  double theta_l = -1.3962634015954636;  // flipper angle lower bound (rad)
  double v_u = 0.5;      // nominal velocity upper bound (m/s)
  double omega_l = -1.0; // flipper rate lower bound (rad/s)
  double omega_u = 1.0;  // flipper rate upper bound (rad/s)

  void validate() const {
    if (!(l0 > 0.0)) throw ModelError("l0 must be positive");
    if (!(l_t > 0.0)) throw ModelError("l_t must be positive");
    if (!(gear_R >= gear_r && gear_r > 0.0)) throw ModelError("need R >= r > 0");
    if (!(gear_R - gear_r < l0)) throw ModelError("need R - r < l0");
    if (!(d_com >= 0.0 && d_com <= l_t)) throw ModelError("d_com outside track");
    if (!(theta_l <= 0.0 && 0.0 <= theta_u)) throw ModelError("flipper bounds must bracket 0");
    if (!(v_u > 0.0)) throw ModelError("v_u must be positive");
    if (!(omega_l < 0.0 && 0.0 < omega_u)) throw ModelError("omega bounds must bracket 0");
  }

  static RobotParams from_config(const KeyValueConfig& cfg) {
    RobotParams p;
    p.l0 = cfg.get_double("l0");
    p.l_t = cfg.get_double("l_t");
    p.gear_R = cfg.get_double("R");
    p.gear_r = cfg.get_double("r");
    p.d_com = cfg.get_double("d_com");
    p.theta_u = cfg.get_double("theta_u");
    p.theta_l = cfg.get_double("theta_l");
    p.v_u = cfg.get_double("v_u");
    p.omega_l = cfg.get_double("omega_l");
    p.omega_u = cfg.get_double("omega_u");
    p.validate();
    return p;
  }

  static RobotParams from_file(const std::string& path) {
    return from_config(KeyValueConfig::from_file(path));
  }
};

// Angle caused by the gear diameter difference: delta = arcsin((R - r) / l0).
inline double gear_offset_angle(const RobotParams& p) {
  const double ratio = (p.gear_R - p.gear_r) / p.l0;
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw ModelError("gear offset out of domain: (R - r)/l0 = " + std::to_string(ratio));
  return std::asin(ratio);
}

// Effective (model) rod lengths of the three-rod bottom polyline. The model
// flipper rods absorb the gear fold (l^i) and the outer contact extension
// (l^o); the model track absorbs both inner extensions.
struct EffectiveGeometry {
  double lf = 0.0, lr = 0.0, lt = 0.0;  // effective rod lengths (m)
  double li_f = 0.0, li_r = 0.0;        // inner extensions R tan(th/2)
  double lo_f = 0.0, lo_r = 0.0;        // clamped outer extensions
  double thf = 0.0, thr = 0.0;          // effective flipper angles (rad)
  double delta = 0.0;                   // gear offset angle (rad)

  double total() const { return lf + lt + lr; }
};

namespace detail {
inline double guarded_tan(double angle, double margin, const char* what) {
  const double kHalfPi = 1.5707963267948966;
  if (std::abs(angle) > kHalfPi - margin)
    throw ModelError(std::string("tan singularity in ") + what + " at " + std::to_string(angle));
  return std::tan(angle);
}
}  // namespace detail

// Evaluates the time-varying model geometry. theta_f/theta_r are physical
// flipper angles; theta_t the pitch; alpha_f/alpha_r the inclinations of the
// terrain under the front/rear flipper, all in the same frame as theta_t.
// Configurations within `singularity_margin` of a tan pole are rejected.
inline EffectiveGeometry effective_geometry(const RobotParams& p, double theta_f, double theta_r,
                                            double theta_t, double alpha_f, double alpha_r,
                                            double singularity_margin = 0.0872664625997165) {
  EffectiveGeometry g;
  g.delta = gear_offset_angle(p);
  g.thf = theta_f + g.delta;
  g.thr = theta_r + g.delta;
  const double pi = 3.14159265358979323846;
  if (!(std::abs(g.thf) < pi && std::abs(g.thr) < pi))
    throw ModelError("effective flipper angle outside (-pi, pi)");

  g.li_f = p.gear_R * detail::guarded_tan(0.5 * g.thf, singularity_margin, "l_i front");
  g.li_r = p.gear_R * detail::guarded_tan(0.5 * g.thr, singularity_margin, "l_i rear");
  g.lo_f = std::max(
      p.gear_r * detail::guarded_tan(0.5 * (g.thf - (theta_t + alpha_f)), singularity_margin,
                                     "l_o front"),
      0.0);
  g.lo_r = std::max(
      p.gear_r * detail::guarded_tan(0.5 * (g.thr + (theta_t + alpha_r)), singularity_margin,
                                     "l_o rear"),
      0.0);

  const double c = std::cos(g.delta);
  g.lf = p.l0 * c + g.li_f + g.lo_f;
  g.lr = p.l0 * c + g.li_r + g.lo_r;
  g.lt = p.l_t + g.li_f + g.li_r;
  return g;
}

// Model-angle convenience wrapper: inputs are model flipper angles.
inline EffectiveGeometry effective_geometry_model(const RobotParams& p, double thf_model,
                                                  double thr_model, double theta_t, double alpha_f,
                                                  double alpha_r,
                                                  double singularity_margin = 0.0872664625997165) {
  const double delta = gear_offset_angle(p);
  return effective_geometry(p, thf_model - delta, thr_model - delta, theta_t, alpha_f, alpha_r,
                            singularity_margin);
}

// Reduced driving-mode state. s_d is the projection of the support point on
// the current terrain measured from the front end of the effective track
// (positive while the support is ahead; decreases as the robot advances).
struct DrivingState {
  double s_d = 0.0;
  double theta_f = 0.0, theta_r = 0.0;  // model angles (rad)
};

// Reduced traversing-mode state. s_t is the arc length the support point has
// moved over the bottom polyline from the front flipper tip. theta_t is the
// auxiliary pitch relative to the current terrain.
struct TraversingState {
  double s_t = 0.0;
  double theta_f = 0.0, theta_r = 0.0;  // model angles (rad)
  double theta_t = 0.0;                 // relative pitch (rad)
};

struct PlanarPose {
  double x = 0.0, z = 0.0;  // body center, world frame (m)
  double theta_t = 0.0;     // world pitch (rad)
};

// Mirror mapping that turns descent descriptions into ascent ones:
// s_t -> l_sum - s_t, flippers swapped, pitch negated. Involutive.
inline TraversingState dual_traversing(const TraversingState& q, const EffectiveGeometry& g) {
  const double l_sum = g.total();
  if (q.s_t < -1e-9 || q.s_t > l_sum + 1e-9)
    throw ModelError("s_t outside [0, l_sum] in dual_traversing");
  TraversingState d;
  d.s_t = l_sum - q.s_t;
  d.theta_f = q.theta_r;
  d.theta_r = q.theta_f;
  d.theta_t = -q.theta_t;
  return d;
}

// COM position expressed in the s_t coordinate. The effective track extends
// l^i_f beyond the physical front end, so the physical COM offset d_com is
// shifted by that extension.
inline double com_coordinate(const RobotParams& p, const EffectiveGeometry& g) {
  return g.lf + g.li_f + p.d_com;
}

namespace detail {
// Arc coordinate of the physical track center on the model polyline.
inline double body_center_arc(const EffectiveGeometry& g, const RobotParams& p) {
  return g.lf + g.li_f + 0.5 * p.l_t;
}

// Point at arc length s from the front flipper tip on the bottom polyline,
// expressed relative to the front flipper/track joint with pitch theta
// (world) and model flipper angles thf/thr.
inline Vec2 polyline_point_from_joint(double s, const EffectiveGeometry& g, double theta,
                                      double thf, double thr) {
  if (s <= g.lf) {
    const Vec2 dir(std::cos(theta + thf), std::sin(theta + thf));
    return (g.lf - s) * dir;
  }
  const Vec2 t(std::cos(theta), std::sin(theta));
  if (s <= g.lf + g.lt) return -(s - g.lf) * t;
  const Vec2 rear_joint = -g.lt * t;
  const Vec2 dir(std::cos(theta - thr), std::sin(theta - thr));
  return rear_joint - (s - g.lf - g.lt) * dir;
}
}  // namespace detail

// A planar terrain line through `origin` with inclination alpha; forward is
// +d. Height of a point above the line, measured vertically.
struct TerrainLine {
  Vec2 origin{0.0, 0.0};
  double alpha = 0.0;

  Vec2 tangent() const { return Vec2(std::cos(alpha), std::sin(alpha)); }
  // Perpendicular (signed) height of a point above this line.
  double height_above(const Vec2& p) const {
    const Vec2 d = p - origin;
    return -std::sin(alpha) * d.x() + std::cos(alpha) * d.y();
  }
  Vec2 point_at(double arc) const { return origin + arc * tangent(); }
  double project(const Vec2& p) const { return (p - origin).dot(tangent()); }
};

// Pose of a robot driving flush on a terrain line. support_proj is the arc
// coordinate (from line origin) of the support-point projection that s_d is
// measured against.
inline PlanarPose pose_from_driving(const DrivingState& q, const TerrainLine& line,
                                    const EffectiveGeometry& g, const RobotParams& p,
                                    double support_proj, double max_overrun = -1.0) {
  if (max_overrun < 0.0) max_overrun = g.lt;
  const double front_arc = support_proj - q.s_d;
  if (front_arc < -max_overrun - g.lt || front_arc > support_proj + max_overrun + g.lt)
    throw ModelError("driving state outside segment span");
  const double center_arc = front_arc - (g.li_f + 0.5 * p.l_t);
  const Vec2 c = line.point_at(center_arc);
  return PlanarPose{c.x(), c.y(), line.alpha};
}

// Pose of a traversing robot pinned to a support point. `current` is the
// terrain the traversal leaves, `next` the one it enters; q.theta_t is
// relative to `current`. Verifies that a trailing contact (rear flipper tip,
// front flipper tip or track flush) is realized within `tol`.
inline PlanarPose pose_from_traversing(const TraversingState& q, const TerrainLine& current,
                                       const TerrainLine& next, const Vec2& support,
                                       const EffectiveGeometry& g, const RobotParams& p,
                                       double tol = 1e-6) {
  const double l_sum = g.total();
  if (q.s_t < -tol || q.s_t > l_sum + tol)
    throw ModelError("s_t outside polyline in pose_from_traversing");
  const double theta = current.alpha + q.theta_t;  // world pitch

  // Place the polyline so the point at arc s_t lands on the support point.
  const Vec2 contact_from_joint =
      detail::polyline_point_from_joint(q.s_t, g, theta, q.theta_f, q.theta_r);
  const Vec2 joint = support - contact_from_joint;

  // Trailing-contact check: the configuration must realize a second contact.
  const Vec2 t(std::cos(theta), std::sin(theta));
  const Vec2 rear_joint = joint - g.lt * t;
  const Vec2 rear_tip =
      rear_joint - g.lr * Vec2(std::cos(theta - q.theta_r), std::sin(theta - q.theta_r));
  const Vec2 front_tip =
      joint + g.lf * Vec2(std::cos(theta + q.theta_f), std::sin(theta + q.theta_f));
  const double rear_on_current = current.height_above(rear_tip);
  const double front_on_next = next.height_above(front_tip);
  const double track_on_current = current.height_above(rear_joint);
  const double track_on_next = next.height_above(rear_joint);
  const double best = std::min({std::abs(rear_on_current), std::abs(front_on_next),
                                std::abs(track_on_current), std::abs(track_on_next)});
  if (best > tol)
    throw ModelError("infeasible traversing configuration: no trailing contact (residual " +
                     std::to_string(best) + ")");

  const Vec2 center = joint - (g.li_f + 0.5 * p.l_t) * t;
  return PlanarPose{center.x(), center.y(), theta};
}

// Recovers (s_t, theta_t) from a pose pinned to `support`; inverse of
// pose_from_traversing for feasible states.
inline TraversingState traversing_from_pose(const PlanarPose& pose, const TerrainLine& current,
                                            const Vec2& support, double theta_f, double theta_r,
                                            const EffectiveGeometry& g, const RobotParams& p) {
  TraversingState q;
  q.theta_f = theta_f;
  q.theta_r = theta_r;
  q.theta_t = pose.theta_t - current.alpha;
  const double theta = pose.theta_t;
  const Vec2 t(std::cos(theta), std::sin(theta));
  const Vec2 center(pose.x, pose.z);
  const Vec2 joint = center + (g.li_f + 0.5 * p.l_t) * t;

  // Project the support point onto the three rods; pick the containing rod.
  const Vec2 fdir(std::cos(theta + theta_f), std::sin(theta + theta_f));
  const Vec2 tip = joint + g.lf * fdir;
  double u = (tip - support).dot(fdir);
  if (u >= -1e-9 && u <= g.lf + 1e-9) {
    q.s_t = u;
    return q;
  }
  u = (joint - support).dot(t);
  if (u >= -1e-9 && u <= g.lt + 1e-9) {
    q.s_t = g.lf + u;
    return q;
  }
  const Vec2 rear_joint = joint - g.lt * t;
  const Vec2 rdir(std::cos(theta - theta_r), std::sin(theta - theta_r));
  u = (rear_joint - support).dot(rdir);
  if (u >= -1e-9 && u <= g.lr + 1e-9) {
    q.s_t = g.lf + g.lt + u;
    return q;
  }
  throw ModelError("support point not on the bottom polyline");
}

}  // namespace ttp

#endif  // TTP_ROBOT_MODEL_HPP_
