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

#ifndef TTP_SIM_HPP_
#define TTP_SIM_HPP_

#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ttp/control.hpp"
#include "ttp/hto.hpp"
#include "ttp/robot_model.hpp"
#include "ttp/terrain.hpp"

namespace ttp {

class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// Bisection root of an increasing scalar function on [lo, hi]; expects
// f(lo) <= 0 <= f(hi).
inline double bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                                double tol = 1e-12, int iters = 80) {
  double flo = f(lo), fhi = f(hi);
  if (flo > 0.0) return lo;
  if (fhi < 0.0) return hi;
  for (int i = 0; i < iters && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Quasi-static contact resolution for a traversing robot pinned to a support
// point: polyline vertices behind the support clear the current terrain
// line, vertices ahead clear the next one, and the attitude settles on the
// side selected by the COM rule.
class TraversingContact {
 public:
  TraversingContact(const RobotParams& params, TerrainLine current, TerrainLine next,
                    Vec2 support)
      : params_(params), current_(current), next_(next), support_(support) {}

  struct Clearances {
    double rear = 0.0;   // min clearance of vertices behind the support
    double front = 0.0;  // min clearance of vertices ahead of the support
    double rear_tip = 0.0;
    double front_tip = 0.0;
  };

  // Vertex clearances at world pitch `theta` for contact arc s_t.
  Clearances clearances(double s_t, double thf, double thr, double theta,
                        const EffectiveGeometry& g) const {
    const Vec2 contact_from_joint = detail::polyline_point_from_joint(s_t, g, theta, thf, thr);
    const Vec2 joint = support_ - contact_from_joint;
    const Vec2 t(std::cos(theta), std::sin(theta));
    const Vec2 front_tip = joint + g.lf * Vec2(std::cos(theta + thf), std::sin(theta + thf));
    const Vec2 rear_joint = joint - g.lt * t;
    const Vec2 rear_tip =
        rear_joint - g.lr * Vec2(std::cos(theta - thr), std::sin(theta - thr));
    const std::pair<Vec2, double> pts[4] = {
        {front_tip, 0.0}, {joint, g.lf}, {rear_joint, g.lf + g.lt}, {rear_tip, g.total()}};
    Clearances c;
    c.rear = c.front = std::numeric_limits<double>::infinity();
    for (const auto& [p, arc] : pts) {
      if (arc > s_t + 1e-12) {
        c.rear = std::min(c.rear, current_.height_above(p));
      } else {
        c.front = std::min(c.front, next_.height_above(p));
      }
    }
    c.rear_tip = current_.height_above(rear_tip);
    c.front_tip = next_.height_above(front_tip);
    return c;
  }

  // Settled world pitch. com_behind selects the gravity side: the robot
  // pitches onto the rear support while the COM is behind the support point.
  double resolve_pitch(double s_t, double thf, double thr, const EffectiveGeometry& g,
                       bool com_behind, double theta_hint) const {
    const double margin = 0.26;  // stay away from vertical
    const double lo = -1.5707963267948966 + margin;
    const double hi = 1.5707963267948966 - margin;
    (void)theta_hint;
    // Rear clearance decreases with pitch, front clearance increases.
    const auto rear_neg = [&](double th) { return -clearances(s_t, thf, thr, th, g).rear; };
    const auto front_cl = [&](double th) { return clearances(s_t, thf, thr, th, g).front; };
    const double theta_rear = detail::bisect_increasing(rear_neg, lo, hi);
    const double theta_front = detail::bisect_increasing(front_cl, lo, hi);
    if (theta_rear < theta_front - 1e-6)
      throw SimError("contact infeasible: support interval empty (stuck)");
    return com_behind ? theta_rear : theta_front;
  }

  const Vec2& support() const { return support_; }
  const TerrainLine& current() const { return current_; }
  const TerrainLine& next() const { return next_; }

 private:
  RobotParams params_;
  TerrainLine current_, next_;
  Vec2 support_;
};

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

struct SimState {
  Mode mode;
  int segment = 0;    // driving: terrain segment; traversing: junction index
  double s = 0.0;     // s_d in the canonical frame / s_t
  double theta_f = 0.0, theta_r = 0.0;  // real flipper angles (rad)
  double theta_t_rel = 0.0;             // traversing: pitch relative to current segment
  PlanarPose pose;
  double time = 0.0;
  double zdd = 0.0;
  double coord_rate = 0.0, omega_f = 0.0, omega_r = 0.0;  // applied rates
};

struct RearLiftEvent {
  double s_t = 0.0;
  double s_com = 0.0;
  int junction = -1;
};

class Simulator {
 public:
  Simulator(RobotParams params, TerrainSequence terrain, double goal_d,
            const HorizonConfig& cfg = {})
      : params_(params), terrain_(std::move(terrain)), goal_d_(goal_d), cfg_(cfg) {
    params_.validate();
    delta_ = gear_offset_angle(params_);
    for (int i = 0; i + 1 < static_cast<int>(terrain_.size()); ++i)
      junctions_.push_back(make_junction(terrain_, i));
  }

  // Places the robot flush on the segment containing start_d.
  void reset(double start_d) {
    state_ = SimState{};
    state_.segment = segment_at(start_d);
    const TerrainSegment& seg = terrain_[state_.segment];
    const DrivingFrame f = driving_frame(terrain_, junctions_, state_.segment, goal_d_);
    const EffectiveGeometry g = geometry_driving();
    // front end of the effective track at the arc of start_d
    const double front_arc = detail::goal_arc_on(seg, start_d) + g.li_f + 0.5 * params_.l_t;
    state_.s = f.ref_arc - front_arc;
    state_.mode = Mode::driving();
    update_driving_pose(g);
    prev_z_ = {state_.pose.z, state_.pose.z, state_.pose.z};
  }

  const SimState& state() const { return state_; }
  SimState& mutable_state() { return state_; }
  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<RearLiftEvent>& rear_lift_events() const { return rear_lift_events_; }
  double gear_offset() const { return delta_; }
  bool mode_changed_flag() const { return mode_changed_; }

  double body_x() const { return state_.pose.x; }

  // Model-angle view of the state for the planner.
  PlannerInput planner_input() const {
    PlannerInput in;
    in.mode = state_.mode;
    in.segment = state_.segment;
    in.s = state_.s;
    in.theta_f = state_.theta_f + delta_;
    in.theta_r = state_.theta_r + delta_;
    in.theta_t = state_.theta_t_rel;
    in.sdot = state_.coord_rate;
    in.omega_f = state_.omega_f;
    in.omega_r = state_.omega_r;
    return in;
  }

  // One explicit-Euler step at the given command (already clamped).
  void step(const Command& cmd_in, double dt) {
    if (!(dt > 0.0)) throw SimError("dt must be positive");
    mode_changed_ = false;
    const Command cmd = cmd_in.clamped(params_);
    state_.omega_f = cmd.omega_f;
    state_.omega_r = cmd.omega_r;
    state_.theta_f += cmd.omega_f * dt;
    state_.theta_r += cmd.omega_r * dt;
    state_.theta_f = std::clamp(state_.theta_f, params_.theta_l - delta_,
                                params_.theta_u - delta_);
    state_.theta_r = std::clamp(state_.theta_r, params_.theta_l - delta_,
                                params_.theta_u - delta_);

    if (state_.mode.is_driving()) {
      step_driving(cmd, dt);
    } else {
      step_traversing(cmd, dt);
    }
    state_.time += dt;

    // z-acceleration estimate by double finite difference.
    prev_z_.push_back(state_.pose.z);
    if (prev_z_.size() > 3) prev_z_.pop_front();
    if (prev_z_.size() == 3)
      state_.zdd = (prev_z_[2] - 2.0 * prev_z_[1] + prev_z_[0]) / (dt * dt);
  }

 private:
  int segment_at(double d) const {
    for (size_t i = 0; i < terrain_.size(); ++i)
      if (d <= terrain_[i].p_end.d + 1e-9) return static_cast<int>(i);
    return static_cast<int>(terrain_.size()) - 1;
  }

  EffectiveGeometry geometry_driving() const {
    return effective_geometry(params_, state_.theta_f, state_.theta_r, 0.0, 0.0, 0.0,
                              cfg_.singularity_margin);
  }

  EffectiveGeometry geometry_traversing(const Junction& j) const {
    return effective_geometry(params_, state_.theta_f, state_.theta_r, state_.theta_t_rel,
                              j.alpha_rel, 0.0, cfg_.singularity_margin);
  }

  void update_driving_pose(const EffectiveGeometry& g) {
    const TerrainSegment& seg = terrain_[state_.segment];
    const DrivingFrame f = driving_frame(terrain_, junctions_, state_.segment, goal_d_);
    DrivingState q{state_.s, state_.theta_f + delta_, state_.theta_r + delta_};
    state_.pose = pose_from_driving(q, seg.line(), g, params_, f.ref_arc, 1e6);
    state_.theta_t_rel = 0.0;
  }

  // --- driving ------------------------------------------------------------

  void step_driving(const Command& cmd, double dt) {
    state_.coord_rate = -cmd.v;
    state_.s += state_.coord_rate * dt;
    EffectiveGeometry g = geometry_driving();
    apply_driving_clamps(g);
    g = geometry_driving();
    update_driving_pose(g);

    // Segment handoff for junctions without a traversal.
    const DrivingFrame f = driving_frame(terrain_, junctions_, state_.segment, goal_d_);
    if (f.junction >= 0) {
      const Junction& j = junctions_[f.junction];
      if (!j.decision.traverse && state_.s <= 0.0) {
        advance_driving_segment(g);
        return;
      }
      if (j.decision.traverse) maybe_enter_traversal(j, g);
    } else if (state_.segment + 1 < static_cast<int>(terrain_.size()) && state_.s <= 0.0) {
      // Frame points at the goal but the goal is beyond this segment.
    }
  }

  void advance_driving_segment(const EffectiveGeometry& g) {
    const int next = state_.segment + 1;
    const DrivingFrame f_new = driving_frame(terrain_, junctions_, next, goal_d_);
    const TerrainSegment& seg_new = terrain_[next];
    // Re-anchor s_d in the next segment's frame from the world pose.
    const Vec2 center(state_.pose.x, state_.pose.z);
    const double center_arc = seg_new.line().project(center);
    const double front_arc = center_arc + g.li_f + 0.5 * params_.l_t;
    state_.segment = next;
    state_.s = f_new.ref_arc - front_arc;
    update_driving_pose(g);
  }

  // Flippers must clear the terrain while driving: above the current plane
  // over the segment, above the next plane past a descending edge, and on or
  // above an upcoming ascent corner.
  void apply_driving_clamps(const EffectiveGeometry& g) {
    const TerrainSegment& seg = terrain_[state_.segment];
    const DrivingFrame f = driving_frame(terrain_, junctions_, state_.segment, goal_d_);
    double thf = state_.theta_f + delta_;
    double thr = state_.theta_r + delta_;

    // Front flipper against the upcoming junction.
    if (f.junction >= 0 && junctions_[f.junction].decision.traverse) {
      const Junction& j = junctions_[f.junction];
      const double h = terrain_[state_.segment].h_step;
      if (h > 0.0) {
        // Corner at (s_d, h) in the current-line frame of the front joint.
        if (state_.s > 1e-6 && std::hypot(state_.s, h) <= g.lf) {
          const double contact = std::atan2(h, state_.s);
          thf = std::max(thf, contact);
        }
      } else if (h < 0.0) {
        // Tip beyond the edge must stay above the next plane.
        const double tip_ahead = g.lf * std::cos(thf) - state_.s;
        if (tip_ahead > 0.0) {
          const double tip_height = g.lf * std::sin(thf);
          const TerrainLine next_line = terrain_[state_.segment + 1].line();
          const Vec2 corner = j.support;
          const Vec2 joint_world = front_joint_world(g);
          const Vec2 tip = joint_world + g.lf * Vec2(std::cos(seg.alpha + thf),
                                                     std::sin(seg.alpha + thf));
          if (next_line.height_above(tip) < 0.0) {
            const auto fcl = [&](double a) {
              const Vec2 t2 = joint_world +
                              g.lf * Vec2(std::cos(seg.alpha + a), std::sin(seg.alpha + a));
              return next_line.height_above(t2);
            };
            thf = detail::bisect_increasing(fcl, thf, 1.4);
          }
          (void)tip_height;
          (void)corner;
        }
      }
    }
    // Front flipper above the current plane while fully over the segment.
    if (f.junction < 0 || state_.s > g.lf) thf = std::max(thf, 0.0);

    // Rear flipper above the current plane over the segment; above the
    // previous upper corner after a descent.
    const double rear_tip_behind = g.lr * std::cos(thr);
    (void)rear_tip_behind;
    bool rear_over_segment = true;
    if (state_.segment > 0) {
      const Junction& jprev = junctions_[state_.segment - 1];
      if (jprev.decision.traverse) {
        const Vec2 rj = rear_joint_world(g);
        const double rj_arc = seg.line().project(rj);
        const double corner_arc = seg.line().project(jprev.support);
        const double reach_back = rj_arc - corner_arc;
        if (reach_back < g.lr) {
          rear_over_segment = false;
          if (jprev.decision.direction == Direction::kDescending && reach_back > 1e-6) {
            const double h_above = seg.line().height_above(jprev.support);
            if (std::hypot(reach_back, h_above) <= g.lr && h_above > 0.0)
              thr = std::max(thr, std::atan2(h_above, reach_back));
          }
        }
      }
    }
    if (rear_over_segment) thr = std::max(thr, 0.0);

    state_.theta_f = thf - delta_;
    state_.theta_r = thr - delta_;
  }

  Vec2 front_joint_world(const EffectiveGeometry& g) const {
    const TerrainSegment& seg = terrain_[state_.segment];
    const DrivingFrame f = driving_frame(terrain_, junctions_, state_.segment, goal_d_);
    return seg.line().point_at(f.ref_arc - state_.s);
  }

  Vec2 rear_joint_world(const EffectiveGeometry& g) const {
    const TerrainSegment& seg = terrain_[state_.segment];
    return front_joint_world(g) - g.lt * seg.line().tangent();
  }

  void maybe_enter_traversal(const Junction& j, const EffectiveGeometry& g) {
    const double h = terrain_[state_.segment].h_step;
    const double thf = state_.theta_f + delta_;
    if (j.decision.direction == Direction::kAscending) {
      // Contact when the front flipper rests on the corner: Eq. 4 crossing.
      const double reach = std::hypot(state_.s, h);
      if (state_.s <= 0.0) {
        enter_traversal(j, g.lf - std::max(reach, 0.0));
        return;
      }
      if (reach <= g.lf && thf <= std::atan2(h, state_.s) + 1e-9) {
        enter_traversal(j, g.lf - reach);
      }
    } else {
      if (state_.s <= 0.0) enter_traversal(j, g.lf);
    }
  }

  void enter_traversal(const Junction& j, double s_t) {
    state_.mode = Mode::traversing(1, j.decision.direction);
    state_.segment = j.index;
    state_.s = std::max(s_t, 1e-6);
    state_.theta_t_rel = 0.0;
    traversal_rear_contact_ = true;
    mode_changed_ = true;
  }

  // --- traversing -----------------------------------------------------------

  TraversingContact contact_for(const Junction& j) const {
    return TraversingContact(params_, terrain_[j.index].line(),
                             terrain_[j.index + 1].line(), j.support);
  }

  void step_traversing(const Command& cmd, double dt) {
    const Junction& j = junctions_[state_.segment];
    state_.coord_rate = cmd.v;
    state_.s += cmd.v * dt;

    EffectiveGeometry g = geometry_traversing(j);
    const TraversingContact contact = contact_for(j);
    const TerrainLine cur_line = terrain_[j.index].line();
    const double alpha_cur = terrain_[j.index].alpha;
    const double s_com = com_coordinate(params_, g);
    const bool ascending = j.decision.direction == Direction::kAscending;
    double thf = state_.theta_f + delta_;
    double thr = state_.theta_r + delta_;

    double theta_rel;
    if (ascending && state_.s < g.lf) {
      // Support on the front flipper: track flush until the commanded
      // flipper angle dips below the corner ray, then the corner lifts the
      // front while the rear stays supported (bridge into Q2).
      thr = std::max(thr, 0.0);
      const double h_sup = cur_line.height_above(j.support);
      const double s_t = state_.s;
      const auto bridge = [&](double th) {
        const double rear_drop = std::max(g.lr * std::sin(th - thr), 0.0);
        return g.lt * std::sin(th) + rear_drop + (g.lf - s_t) * std::sin(th + thf) - h_sup;
      };
      theta_rel = std::max(0.0, detail::bisect_increasing(bridge, 0.0, 1.2));
    } else {
      const bool com_behind = state_.s < s_com;
      theta_rel = contact.resolve_pitch(state_.s, thf, thr, g, com_behind,
                                        alpha_cur + state_.theta_t_rel) - alpha_cur;
      // Non-penetration clamps on the flipper tips at the settled attitude.
      auto cl = contact.clearances(state_.s, thf, thr, alpha_cur + theta_rel, g);
      bool clamped = false;
      if (cl.front_tip < -1e-9 && state_.s > g.lf) {
        const auto fcl = [&](double a) {
          return contact.clearances(state_.s, a, thr, alpha_cur + theta_rel, g).front_tip;
        };
        thf = detail::bisect_increasing(fcl, thf, params_.theta_u + delta_);
        clamped = true;
      }
      if (cl.rear_tip < -1e-9) {
        const auto rcl = [&](double a) {
          return contact.clearances(state_.s, thf, a, alpha_cur + theta_rel, g).rear_tip;
        };
        thr = detail::bisect_increasing(rcl, thr, params_.theta_u + delta_);
        clamped = true;
      }
      if (clamped) {
        state_.theta_f = thf - delta_;
        state_.theta_r = thr - delta_;
        theta_rel = contact.resolve_pitch(state_.s, thf, thr, g, com_behind,
                                          alpha_cur + state_.theta_t_rel) - alpha_cur;
      }
    }

    // Quasi-static pitch-rate cap; genuine falls show up as ddz spikes but
    // stay integrable.
    const double max_step = pitch_rate_cap_ * dt;
    theta_rel = std::clamp(theta_rel, state_.theta_t_rel - max_step,
                           state_.theta_t_rel + max_step);
    state_.theta_t_rel = theta_rel;

    update_traversing_pose(j, g);

    // Rear-flipper lift event (ascent COM-safety check).
    if (ascending && state_.s >= g.lf) {
      const auto cl =
          contact.clearances(state_.s, thf, thr, alpha_cur + state_.theta_t_rel, g);
      const bool contact_now = cl.rear_tip < 1e-3;
      if (traversal_rear_contact_ && !contact_now) {
        rear_lift_events_.push_back({state_.s, s_com, j.index});
        traversal_rear_contact_ = false;
      }
    }

    // Node progression (latched).
    const int node = traversal_node(state_.s, g, s_com);
    if (node > state_.mode.node) {
      state_.mode.node = node;
      mode_changed_ = true;
    }

    // Exit conditions: support past the rear joint (pitch recovered for
    // descent), or dual overrun.
    bool exited = false;
    if (ascending) {
      exited = state_.s >= g.lf + g.lt - 1e-9;
    } else {
      exited = (state_.s >= g.lf + g.lt - 1e-9 &&
                state_.theta_t_rel >= j.alpha_rel - 2e-3) ||
               state_.s >= g.total() - 1e-6;
    }
    if (exited) exit_traversal(j, g);
  }

  void update_traversing_pose(const Junction& j, const EffectiveGeometry& g) {
    const double thf = state_.theta_f + delta_;
    const double thr = state_.theta_r + delta_;
    const TerrainLine cur = terrain_[j.index].line();
    if (j.decision.direction == Direction::kAscending && state_.s < g.lf &&
        state_.theta_t_rel < 1e-9) {
      // Flush with the corner riding the front flipper.
      const DrivingFrame f = driving_frame(terrain_, junctions_, j.index, goal_d_);
      const double s_d = (g.lf - state_.s) * std::cos(thf);
      const double sup_arc = cur.project(j.support);
      const double center_arc = sup_arc - s_d - (g.li_f + 0.5 * params_.l_t);
      const Vec2 c = cur.point_at(center_arc);
      state_.pose = PlanarPose{c.x(), c.y(), cur.alpha};
      (void)f;
      return;
    }
    TraversingState q{state_.s, thf, thr, state_.theta_t_rel};
    state_.pose = pose_from_traversing(q, cur, terrain_[j.index + 1].line(), j.support, g,
                                       params_, 5e-2);
  }

  int traversal_node(double s_t, const EffectiveGeometry& g, double s_com) const {
    const bool asc = state_.mode.direction == Direction::kAscending;
    const double tol = 5e-4;
    if (asc) {
      if (s_t < g.lf - tol) return 1;
      if (s_t <= g.lf + tol) return 2;
      if (s_t < s_com) return 3;
      return 4;
    }
    if (s_t < s_com) return 1;
    if (s_t < g.lf + g.lt - tol) return 2;
    if (s_t <= g.lf + g.lt + tol) return 3;
    return 4;
  }

  void exit_traversal(const Junction& j, const EffectiveGeometry& g) {
    const int next_seg = j.index + 1;
    const DrivingFrame f = driving_frame(terrain_, junctions_, next_seg, goal_d_);
    const TerrainLine line = terrain_[next_seg].line();
    const double old_arc = line.project(j.support);
    const double D = f.ref_arc - old_arc;
    const double pivot = state_.mode.direction == Direction::kAscending
                             ? state_.theta_t_rel - j.alpha_rel
                             : state_.theta_r + delta_;
    const double s_d = D - g.lt - (state_.s - g.lf - g.lt) * std::cos(pivot);
    state_.mode = Mode::driving();
    state_.segment = next_seg;
    state_.s = s_d;
    state_.theta_t_rel = 0.0;
    traversal_rear_contact_ = true;
    mode_changed_ = true;
    update_driving_pose(geometry_driving());
  }

  RobotParams params_;
  TerrainSequence terrain_;
  std::vector<Junction> junctions_;
  double goal_d_ = 0.0;
  HorizonConfig cfg_;
  double delta_ = 0.0;
  SimState state_;
  std::deque<double> prev_z_;
  double pitch_rate_cap_ = 3.0;  // rad/s
  bool traversal_rear_contact_ = true;
  bool mode_changed_ = false;
  std::vector<RearLiftEvent> rear_lift_events_;
};

// ---------------------------------------------------------------------------
// Raw-profile contact overlay
// ---------------------------------------------------------------------------

// Rigid settle of the bottom polyline on the raw sampled profile (stairs as
// steps) at a fixed horizontal body position. Used to render poses against
// the actual terrain while the planner sees the simplified segments.
class RawContactOverlay {
 public:
  RawContactOverlay(Profile profile, const RobotParams& params)
      : profile_(std::move(profile)), params_(params) {
    if (profile_.size() < 2) throw SimError("raw profile too short");
    delta_ = gear_offset_angle(params_);
  }

  double height_at(double d) const {
    if (d <= profile_.front().d) return profile_.front().h;
    if (d >= profile_.back().d) return profile_.back().h;
    size_t lo = 0, hi = profile_.size() - 1;
    while (hi - lo > 1) {
      const size_t mid = (lo + hi) / 2;
      (profile_[mid].d <= d ? lo : hi) = mid;
    }
    const double u = (d - profile_[lo].d) / (profile_[hi].d - profile_[lo].d);
    return (1.0 - u) * profile_[lo].h + u * profile_[hi].h;
  }

  // Settles (z, pitch) at body-center x with real flipper angles; theta_hint
  // warm-starts the attitude search.
  PlanarPose settle(double x_center, double theta_f_real, double theta_r_real,
                    double theta_hint) const {
    const EffectiveGeometry g = effective_geometry(params_, theta_f_real, theta_r_real, 0.0,
                                                   0.0, 0.0, 0.3);
    const double thf = theta_f_real + delta_, thr = theta_r_real + delta_;
    // Bottom polyline samples relative to the body center, pitch 0.
    std::vector<Vec2> shape;
    const double step = 0.02;
    const double arc_center = g.lf + g.li_f + 0.5 * params_.l_t;
    for (double a = 0.0; a <= g.total() + 1e-9; a += step) {
      const Vec2 p = detail::polyline_point_from_joint(a, g, 0.0, thf, thr);
      shape.push_back(p + Vec2(0, 0) -
                      detail::polyline_point_from_joint(arc_center, g, 0.0, thf, thr));
    }
    const double com_off = (params_.d_com - 0.5 * params_.l_t);

    // Support x after dropping the rotated shape onto the terrain.
    const auto support_x = [&](double th) {
      const double c = std::cos(th), sn = std::sin(th);
      double best_pen = -std::numeric_limits<double>::infinity();
      double sx = x_center;
      for (const auto& p : shape) {
        const double px = x_center + c * p.x() - sn * p.y();
        const double pz = sn * p.x() + c * p.y();
        const double pen = height_at(px) - pz;
        if (pen > best_pen) {
          best_pen = pen;
          sx = px;
        }
      }
      return std::pair<double, double>(sx, best_pen);
    };

    // Balanced attitude: the support point sits under the COM. The support
    // moves rearward as pitch rises, so x_com - x_support increases.
    double lo = theta_hint - 0.7, hi = theta_hint + 0.7;
    for (int i = 0; i < 48; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double x_com = x_center + com_off * std::cos(mid);
      const auto [sx, pen] = support_x(mid);
      (void)pen;
      if (x_com - sx > 0.0)
        hi = mid;
      else
        lo = mid;
    }
    const double th = 0.5 * (lo + hi);
    const auto [sx, pen] = support_x(th);
    (void)sx;
    return PlanarPose{x_center, pen, th};
  }

 private:
  Profile profile_;
  RobotParams params_;
  double delta_ = 0.0;
};

}  // namespace ttp

#endif  // TTP_SIM_HPP_
