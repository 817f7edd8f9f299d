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

#ifndef TTP_HTO_HPP_
#define TTP_HTO_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ttp/hermite.hpp"
#include "ttp/nlp.hpp"
#include "ttp/robot_model.hpp"
#include "ttp/sequence.hpp"
#include "ttp/simplify.hpp"
#include "ttp/terrain.hpp"

namespace ttp {

class PlanError : public std::runtime_error {
 public:
  explicit PlanError(const std::string& what) : std::runtime_error(what) {}
};

struct CostWeights {
  double lambda_time = 1.0;
  double lambda_stab = 0.5;
  double lambda_smo = 0.5;
  Eigen::Matrix3d Qs = Eigen::Vector3d(1.0, 0.2, 0.2).asDiagonal();
};

struct HorizonConfig {
  int n_t = 5;                      // traversing nodes per full traversal
  double driving_node_spacing = 0.5;  // m between driving nodes
  int n_d_max = 6;
  double T_min = 0.05;              // duration floor (s)
  double T_max = 1000.0;            // duration cap; keeps the problem bounded
  double tht_halfrange = 0.7853981633974483;  // pitch bound half-range (45 deg)
  double h_delta = 0.01;            // substitute height for h = 0 ascents
  double node_eps = 1e-6;           // strict-range shrink
  double singularity_margin = 0.0872664625997165;  // 5 deg tan-pole guard
};

// ---------------------------------------------------------------------------
// Cost terms (Eq. level, exposed for tests and gradient checks)
// ---------------------------------------------------------------------------

// Sum of squared durations.
inline double cost_time(const Eigen::VectorXd& durations, Eigen::VectorXd* grad = nullptr) {
  if (grad) *grad = 2.0 * durations;
  return durations.squaredNorm();
}

struct StabilityTerm {
  double w_f = 0.0, w_r = 0.0, alpha_f = 0.0;
};

// Weighted squared flipper angles relative to the terrain each flipper lies
// on: w_f (tht + thf - alpha_f)^2 + w_r (tht - thr)^2 per node.
inline double cost_stability_node(const StabilityTerm& w, double thf, double thr, double tht,
                                  double* d_thf = nullptr, double* d_thr = nullptr,
                                  double* d_tht = nullptr) {
  const double ef = tht + thf - w.alpha_f;
  const double er = tht - thr;
  if (d_thf) *d_thf = 2.0 * w.w_f * ef;
  if (d_thr) *d_thr = -2.0 * w.w_r * er;
  if (d_tht) *d_tht = 2.0 * w.w_f * ef + 2.0 * w.w_r * er;
  return w.w_f * ef * ef + w.w_r * er * er;
}

// Smoothness term of one node pair: || qbar - v0 ||^2_Q + || qbar - v1 ||^2_Q
// with qbar = (q1 - q0) / T.
inline double cost_smoothness_pair(const Eigen::Vector3d& q0, const Eigen::Vector3d& q1,
                                   const Eigen::Vector3d& v0, const Eigen::Vector3d& v1, double T,
                                   const Eigen::Matrix3d& Qs, Eigen::Vector3d* d_q0 = nullptr,
                                   Eigen::Vector3d* d_q1 = nullptr, Eigen::Vector3d* d_v0 = nullptr,
                                   Eigen::Vector3d* d_v1 = nullptr, double* d_T = nullptr) {
  if (!(T > 0.0)) throw PlanError("zero duration in smoothness cost");
  const Eigen::Vector3d qbar = (q1 - q0) / T;
  const Eigen::Vector3d e0 = qbar - v0;
  const Eigen::Vector3d e1 = qbar - v1;
  const Eigen::Vector3d Qe0 = Qs * e0;
  const Eigen::Vector3d Qe1 = Qs * e1;
  if (d_v0) *d_v0 = -2.0 * Qe0;
  if (d_v1) *d_v1 = -2.0 * Qe1;
  if (d_q1) *d_q1 = (2.0 / T) * (Qe0 + Qe1);
  if (d_q0) *d_q0 = -(2.0 / T) * (Qe0 + Qe1);
  if (d_T) *d_T = -(2.0 / T) * qbar.dot(Qe0 + Qe1);
  return e0.dot(Qe0) + e1.dot(Qe1);
}

// ---------------------------------------------------------------------------
// Switching residuals (Eq. 4 / Eq. 5 and their traversing-to-driving duals)
// ---------------------------------------------------------------------------

// Driving -> traversing configuration residual. For ascent the support point
// rides the front flipper ((l_f - s_t) cos theta_f - s_d); for descent it
// passes under the track front ((l_f - s_t) cos theta_t - s_d).
inline double switching_config_entry(Direction dir, double s_d, double s_t, double theta_f_or_t,
                                     double lf) {
  return (lf - s_t) * std::cos(theta_f_or_t) - s_d;
}

// Driving -> traversing motion residual (must be <= 0): post-switch progress
// rate minus the projected pre-switch rate. s_d decreases while driving, so
// sdot_d is negative at the switch.
inline double switching_motion_entry(double sdot_d, double sdot_t, double theta_f_or_t) {
  return sdot_t + sdot_d * std::cos(theta_f_or_t);
}

// Traversing -> driving residuals, obtained by applying the entry forms to
// the dual configuration with the sign of sdot_d flipped. s_d_old is the
// post-switch driving coordinate measured against the support point that was
// just traversed.
inline double switching_config_exit(Direction dir, double s_t, double pivot_angle, double s_d_old,
                                    double lf, double lt) {
  return (s_t - lf - lt) * std::cos(pivot_angle) + lt + s_d_old;
}

inline double switching_motion_exit(double sdot_t, double sdot_d, double pivot_angle) {
  return -sdot_t - sdot_d * std::cos(pivot_angle);
}

// ---------------------------------------------------------------------------
// Horizon specification
// ---------------------------------------------------------------------------

enum class NodeRole { kDrivingBoundary, kDrivingInterior, kTraversal };

struct HorizonNode {
  Mode mode;
  NodeRole role = NodeRole::kDrivingInterior;
  int key = 0;  // traversal key node 1..4; 0 = insertion/plain
  NodeConstraintSet cset;
  StabilityTerm stab;
  // Box bounds; pins are collapsed boxes.
  double s_lo = 0.0, s_hi = 0.0;
  double thf_lo = 0.0, thf_hi = 0.0;
  double thr_lo = 0.0, thr_hi = 0.0;
  double tht_lo = 0.0, tht_hi = 0.0;  // traversing only
  double sdot_lo = 0.0, sdot_hi = 0.0;
  double wf_lo = 0.0, wf_hi = 0.0;
  double wr_lo = 0.0, wr_hi = 0.0;
  // Initial guess.
  double s0 = 0.0, thf0 = 0.0, thr0 = 0.0, tht0 = 0.0;
  double sdot0 = 0.0, wf0 = 0.0, wr0 = 0.0;
  // Assembly offsets.
  int offset = -1;
  bool traversing() const { return mode.is_traversing(); }
  int state_dim() const { return traversing() ? 4 : 3; }
  int var_count() const { return state_dim() + 3; }
};

struct SwitchSpec {
  int pre = 0, post = 0;  // node indices
  Direction direction = Direction::kAscending;
  bool entry = true;      // driving->traversing
  double d_offset = 0.0;  // exit only: ref-frame shift on the new terrain
  double lf = 0.0, lt = 0.0, alpha = 0.0;
};

struct HorizonSpec {
  std::vector<HorizonNode> nodes;
  std::vector<SwitchSpec> switches;
  std::vector<std::pair<int, int>> duration_pairs;
  int n_d = 0, n_t = 0;
  // Frame bookkeeping used to anchor the resulting trajectory.
  int driving_segment_pre = -1;   // terrain segment of the leading driving phase
  int driving_segment_post = -1;  // terrain segment of the trailing driving phase
  int junction = -1;              // junction index traversed in this horizon (-1 = none)
  double ref_d_pre = 0.0;         // world d of the s_d reference projection (leading phase)
  double ref_d_post = 0.0;        // trailing phase reference
  Direction direction = Direction::kAscending;
  TraversalContext ctx;           // junction context (valid if junction >= 0)
};

// ---------------------------------------------------------------------------
// Junction context derived from the terrain sequence
// ---------------------------------------------------------------------------

struct Junction {
  int index = -1;  // between segment index and index+1
  TraversalDecision decision;
  Vec2 support{0.0, 0.0};
  double support_proj_cur = 0.0;   // arc of support projection on current line (from seg start)
  double support_proj_next = 0.0;  // arc on the next segment line
  double alpha_rel = 0.0;
  double c1 = 0.0, c2 = 0.0;  // sparsities of current and target terrain
};

inline Junction make_junction(const TerrainSequence& terrain, int index) {
  if (index < 0 || index + 1 >= static_cast<int>(terrain.size()))
    throw PlanError("junction index out of range");
  const TerrainSegment& cur = terrain[index];
  const TerrainSegment& next = terrain[index + 1];
  Junction j;
  j.index = index;
  j.alpha_rel = next.alpha - cur.alpha;
  j.decision = classify_traversal(cur.h_step, j.alpha_rel);
  j.support = j.decision.direction == Direction::kAscending && j.decision.traverse
                  ? next.start_point()
                  : cur.end_point();
  if (!j.decision.traverse) j.support = cur.end_point();
  j.support_proj_cur = cur.line().project(j.support);
  j.support_proj_next = next.line().project(j.support);
  j.c1 = cur.sparsity;
  j.c2 = next.sparsity;
  return j;
}

// Effective-geometry context for a junction, frozen at the given flipper
// state (receding-horizon replans refresh it).
inline TraversalContext junction_context(const RobotParams& p, const Junction& j, double thf_model,
                                         double thr_model, double tht_rel,
                                         const HorizonConfig& cfg) {
  const EffectiveGeometry g =
      effective_geometry_model(p, thf_model, thr_model, tht_rel,
                               j.decision.traverse ? j.alpha_rel : 0.0, 0.0,
                               cfg.singularity_margin);
  TraversalContext c;
  c.lf = g.lf;
  c.lr = g.lr;
  c.lt = g.lt;
  c.s_com = com_coordinate(p, g);
  c.alpha = j.alpha_rel;
  c.h = j.decision.h_eff;
  c.theta_u = p.theta_u;
  c.theta_l = p.theta_l;
  c.tht_lower = j.alpha_rel - cfg.tht_halfrange;
  c.tht_upper = j.alpha_rel + cfg.tht_halfrange;
  c.eps = cfg.node_eps;
  return c;
}

// ---------------------------------------------------------------------------
// Traversal node templates (key nodes plus one insertion node, n_t = 5)
// ---------------------------------------------------------------------------

struct TraversalNodeTemplate {
  int key = 0;
  NodeConstraintSet cset;
  bool s_pinned = false;
  double s_pin = 0.0, s_lo = 0.0, s_hi = 0.0;
  bool tht_pinned = false;
  double tht_pin = 0.0;
  double tht_lo = 0.0, tht_hi = 0.0;
};

inline std::vector<TraversalNodeTemplate> traversal_node_templates(Direction dir,
                                                                   const TraversalContext& c) {
  std::vector<TraversalNodeTemplate> out;
  const double eps = c.eps;
  if (dir == Direction::kAscending) {
    const double tht_lo = c.tht_lower, tht_hi = c.tht_upper;
    {  // Q1: contact on the front flipper, track still flush.
      TraversalNodeTemplate t;
      t.key = 1;
      t.cset = ascending_node_constraints(1, c);
      t.s_lo = eps;
      t.s_hi = c.lf - eps;
      t.tht_pinned = true;
      t.tht_pin = 0.0;
      t.tht_lo = tht_lo;
      t.tht_hi = tht_hi;
      out.push_back(std::move(t));
    }
    {  // Q2: front joint on the support point.
      TraversalNodeTemplate t;
      t.key = 2;
      t.cset = ascending_node_constraints(2, c);
      t.s_pinned = true;
      t.s_pin = c.lf;
      t.tht_lo = tht_lo;
      t.tht_hi = tht_hi;
      out.push_back(std::move(t));
    }
    {  // Q3: support under the track, COM still behind it.
      TraversalNodeTemplate t;
      t.key = 3;
      t.cset = ascending_node_constraints(3, c);
      t.s_lo = c.lf + eps;
      t.s_hi = c.s_com - eps;
      t.tht_lo = tht_lo;
      t.tht_hi = tht_hi;
      out.push_back(std::move(t));
    }
    {  // Insertion node at the COM crossing: last instant rear contact is required.
      TraversalNodeTemplate t;
      t.key = 0;
      t.cset = ascending_node_constraints(3, c);
      t.s_pinned = true;
      t.s_pin = c.s_com;
      t.tht_lo = tht_lo;
      t.tht_hi = tht_hi;
      out.push_back(std::move(t));
    }
    {  // Q4 at the exit: rear joint on the support point, track flush on the
       // target terrain; the rear flipper may have lifted.
      TraversalNodeTemplate t;
      t.key = 4;
      t.cset = ascending_node_constraints(4, c);
      t.s_pinned = true;
      t.s_pin = c.lf + c.lt;
      t.tht_pinned = true;
      t.tht_pin = c.alpha;
      t.tht_lo = tht_lo;
      t.tht_hi = tht_hi;
      out.push_back(std::move(t));
    }
  } else {
    // Descending templates are the duals of the ascending ones in reverse
    // order; pitch here is still relative to the current (upper) terrain.
    const double lo = c.alpha - c.tht_upper;
    const double hi = c.alpha - c.tht_lower;
    {  // Entry: support at the track front, still flush on the upper terrain.
      TraversalNodeTemplate t;
      t.key = 1;
      t.cset = descending_node_constraints(1, c);
      t.s_pinned = true;
      t.s_pin = c.lf;
      t.tht_pinned = true;
      t.tht_pin = 0.0;
      t.tht_lo = lo;
      t.tht_hi = hi;
      out.push_back(std::move(t));
    }
    {  // Insertion at the COM crossing.
      TraversalNodeTemplate t;
      t.key = 0;
      t.cset = descending_node_constraints(2, c);  // dual of Q3 (both contacts)
      t.s_pinned = true;
      t.s_pin = c.s_com;
      t.tht_lo = lo;
      t.tht_hi = hi;
      out.push_back(std::move(t));
    }
    {  // Controlled pivot: rear flipper on the upper, front on the lower terrain.
      TraversalNodeTemplate t;
      t.key = 2;
      t.cset = descending_node_constraints(2, c);
      t.s_lo = c.s_com + eps;
      t.s_hi = c.lf + c.lt - eps;
      t.tht_lo = lo;
      t.tht_hi = hi;
      out.push_back(std::move(t));
    }
    {  // Rear joint on the support point.
      TraversalNodeTemplate t;
      t.key = 3;
      t.cset = descending_node_constraints(3, c);
      t.s_pinned = true;
      t.s_pin = c.lf + c.lt;
      t.tht_lo = lo;
      t.tht_hi = hi;
      out.push_back(std::move(t));
    }
    {  // Exit: flush on the lower terrain, support riding the rear flipper.
      TraversalNodeTemplate t;
      t.key = 4;
      t.cset = descending_node_constraints(4, c);
      t.s_lo = c.lf + c.lt + eps;
      t.s_hi = c.l_sum() - eps;
      t.tht_pinned = true;
      t.tht_pin = c.alpha;
      t.tht_lo = lo;
      t.tht_hi = hi;
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace ttp

#include "ttp/hto_planner.hpp"

#endif  // TTP_HTO_HPP_
