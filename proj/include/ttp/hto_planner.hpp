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

#ifndef TTP_HTO_PLANNER_HPP_
#define TTP_HTO_PLANNER_HPP_

#include <memory>

#ifndef TTP_HTO_HPP_
#error "include ttp/hto.hpp instead"
#endif

namespace ttp {

// Planner-facing robot state. `s` is s_d (measured against the canonical
// driving reference of the segment) while driving, s_t while traversing;
// angles are model angles, theta_t relative to the current segment.
struct PlannerInput {
  Mode mode;
  int segment = 0;
  double s = 0.0;
  double theta_f = 0.0, theta_r = 0.0;
  double theta_t = 0.0;
  double sdot = 0.0, omega_f = 0.0, omega_r = 0.0;
};

struct PlanPhase {
  Mode mode;
  int terrain_segment = 0;
  int junction = -1;
  double t0 = 0.0;
  double ref_arc = 0.0;  // driving: arc of the s_d reference on the segment line
  PiecewiseHermite<3> curve;  // channels (s, theta_f, theta_r), local time
  std::vector<double> node_time;
  std::vector<double> node_tht;  // traversing only, per node
  std::vector<int> node_key;     // traversing only, key labels

  double t1() const { return t0 + (curve.empty() ? 0.0 : curve.duration()); }
};

struct PlanSample {
  Mode mode;
  int phase = 0;
  Eigen::Vector3d q = Eigen::Vector3d::Zero();
  Eigen::Vector3d qdot = Eigen::Vector3d::Zero();
  double theta_t = 0.0;  // traversing: interpolated relative pitch
};

struct PlanTrajectory {
  std::vector<PlanPhase> phases;
  double t_end = 0.0;
  double t_switch = std::numeric_limits<double>::quiet_NaN();
  int junction = -1;
  Direction direction = Direction::kAscending;
  TraversalContext ctx;  // valid when junction >= 0

  bool empty() const { return phases.empty(); }

  const PlanPhase& phase_at(double t, int* index = nullptr) const {
    if (phases.empty()) throw PlanError("empty trajectory");
    for (size_t i = 0; i + 1 < phases.size(); ++i) {
      if (t < phases[i + 1].t0) {
        if (index) *index = static_cast<int>(i);
        return phases[i];
      }
    }
    if (index) *index = static_cast<int>(phases.size()) - 1;
    return phases.back();
  }

  PlanSample sample(double t) const {
    t = std::clamp(t, 0.0, t_end);
    PlanSample out;
    const PlanPhase& ph = phase_at(t, &out.phase);
    out.mode = ph.mode;
    const double local = std::clamp(t - ph.t0, 0.0, ph.curve.duration());
    out.q = ph.curve.value(local);
    out.qdot = ph.curve.rate(local);
    if (ph.mode.is_traversing() && ph.node_tht.size() >= 2) {
      // theta_t is an auxiliary node variable; interpolate linearly.
      size_t k = 1;
      while (k + 1 < ph.node_time.size() && ph.node_time[k] < local) ++k;
      const double t0 = ph.node_time[k - 1], t1 = ph.node_time[k];
      const double u = t1 > t0 ? std::clamp((local - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
      out.theta_t = (1.0 - u) * ph.node_tht[k - 1] + u * ph.node_tht[k];
    }
    return out;
  }
};

struct PlanCheck {
  double max_eq = 0.0;
  double max_ineq = 0.0;
  double switch_config = 0.0;   // max |Delta_c| over switches
  double switch_motion = 0.0;   // max positive part of Delta_m
  double min_duration = std::numeric_limits<double>::infinity();
  std::vector<std::string> warnings;
};

struct PlanResult {
  bool accepted = false;
  std::string message;
  PlanTrajectory traj;
  Solution solution;
  PlanCheck check;
  std::shared_ptr<const HorizonSpec> spec;
};

namespace detail {

inline double clamp01(double v) { return std::clamp(v, -1.0, 1.0); }

inline double asin_clamped(double v) { return std::asin(clamp01(v)); }

// Goal arc coordinate on a segment line (point with world d = goal_d).
inline double goal_arc_on(const TerrainSegment& seg, double goal_d) {
  const double c = std::cos(seg.alpha);
  return (goal_d - seg.p_start.d) / (std::abs(c) > 1e-9 ? c : 1e-9);
}

}  // namespace detail

// Canonical s_d reference of a driving phase on `segment`: the projection of
// the goal if it lies before the next traversal, otherwise of the next
// junction's support point.
struct DrivingFrame {
  double ref_arc = 0.0;  // arc on the segment line, from p_start
  int junction = -1;     // upcoming junction handled by this frame (-1 = goal)
};

inline DrivingFrame driving_frame(const TerrainSequence& terrain,
                                  const std::vector<Junction>& junctions, int segment,
                                  double goal_d) {
  DrivingFrame f;
  const double goal_arc = detail::goal_arc_on(terrain[segment], goal_d);
  if (segment + 1 >= static_cast<int>(terrain.size())) {
    f.ref_arc = goal_arc;
    return f;
  }
  const Junction& j = junctions[segment];
  if (!j.decision.traverse || goal_arc <= j.support_proj_cur) {
    f.ref_arc = goal_arc;
    return f;
  }
  f.ref_arc = j.support_proj_cur;
  f.junction = segment;
  return f;
}

// ---------------------------------------------------------------------------
// HtoPlanner
// ---------------------------------------------------------------------------

class HtoPlanner {
 public:
  HtoPlanner(RobotParams params, TerrainSequence terrain, CostWeights weights = {},
             HorizonConfig config = {})
      : params_(std::move(params)), terrain_(std::move(terrain)), weights_(weights),
        config_(config) {
    params_.validate();
    if (terrain_.empty()) throw PlanError("empty terrain sequence");
    for (int i = 0; i + 1 < static_cast<int>(terrain_.size()); ++i)
      junctions_.push_back(make_junction(terrain_, i));
    goal_d_ = terrain_.back().p_end.d;
  }

  void set_goal(double goal_d) { goal_d_ = goal_d; }
  double goal_d() const { return goal_d_; }
  const std::vector<Junction>& junctions() const { return junctions_; }
  const TerrainSequence& terrain() const { return terrain_; }
  const RobotParams& robot() const { return params_; }
  const HorizonConfig& config() const { return config_; }
  CostWeights& weights() { return weights_; }

  DrivingFrame frame(int segment) const {
    return driving_frame(terrain_, junctions_, segment, goal_d_);
  }

  TraversalContext context_for(int junction, const PlannerInput& in) const {
    return junction_context(params_, junctions_[junction], in.theta_f, in.theta_r,
                            in.mode.is_traversing() ? in.theta_t : 0.0, config_);
  }

  // -------------------------------------------------------------------------
  // Horizon construction
  // -------------------------------------------------------------------------

  std::shared_ptr<HorizonSpec> build_horizon(const PlannerInput& in) const {
    return in.mode.is_driving() ? build_driving_horizon(in) : build_traversing_horizon(in);
  }

  // -------------------------------------------------------------------------
  // NLP assembly
  // -------------------------------------------------------------------------

  NlpProblem assemble_nlp(const std::shared_ptr<const HorizonSpec>& spec) const {
    const HorizonSpec& hs = *spec;
    const int K = static_cast<int>(hs.nodes.size());
    if (K < 2) throw PlanError("horizon needs at least two nodes");

    int nvars = 0;
    std::vector<int> offs(K);
    for (int k = 0; k < K; ++k) {
      offs[k] = nvars;
      nvars += hs.nodes[k].var_count();
    }
    const int dur0 = nvars;
    const int ndur = static_cast<int>(hs.duration_pairs.size());
    nvars += ndur;

    NlpProblem p;
    p.num_vars = nvars;
    p.lower.resize(nvars);
    p.upper.resize(nvars);
    p.x0.resize(nvars);
    p.scale.resize(nvars);

    const double l_sum = hs.junction >= 0 ? hs.ctx.l_sum() : params_.l0 * 2 + params_.l_t;
    for (int k = 0; k < K; ++k) {
      const HorizonNode& n = hs.nodes[k];
      const int o = offs[k];
      const int rd = n.state_dim();
      p.lower[o] = n.s_lo;
      p.upper[o] = n.s_hi;
      p.x0[o] = n.s0;
      p.scale[o] = std::max(l_sum, 1.0);
      p.lower[o + 1] = n.thf_lo;
      p.upper[o + 1] = n.thf_hi;
      p.x0[o + 1] = n.thf0;
      p.scale[o + 1] = 1.0;
      p.lower[o + 2] = n.thr_lo;
      p.upper[o + 2] = n.thr_hi;
      p.x0[o + 2] = n.thr0;
      p.scale[o + 2] = 1.0;
      if (n.traversing()) {
        p.lower[o + 3] = n.tht_lo;
        p.upper[o + 3] = n.tht_hi;
        p.x0[o + 3] = n.tht0;
        p.scale[o + 3] = 1.0;
      }
      p.lower[o + rd] = n.sdot_lo;
      p.upper[o + rd] = n.sdot_hi;
      p.x0[o + rd] = n.sdot0;
      p.scale[o + rd] = params_.v_u;
      p.lower[o + rd + 1] = n.wf_lo;
      p.upper[o + rd + 1] = n.wf_hi;
      p.x0[o + rd + 1] = n.wf0;
      p.scale[o + rd + 1] = params_.omega_u;
      p.lower[o + rd + 2] = n.wr_lo;
      p.upper[o + rd + 2] = n.wr_hi;
      p.x0[o + rd + 2] = n.wr0;
      p.scale[o + rd + 2] = params_.omega_u;
    }
    for (int i = 0; i < ndur; ++i) {
      const auto [a, b] = hs.duration_pairs[i];
      p.lower[dur0 + i] = config_.T_min;
      p.upper[dur0 + i] = config_.T_max;
      const double ds = std::abs(hs.nodes[b].s0 - hs.nodes[a].s0);
      p.x0[dur0 + i] = std::max(ds / (0.5 * params_.v_u), 2.0 * config_.T_min);
      p.scale[dur0 + i] = 1.0;
    }
    // Clip seeds into the box.
    for (int i = 0; i < nvars; ++i) p.x0[i] = std::clamp(p.x0[i], p.lower[i], p.upper[i]);

    // --- objective -----------------------------------------------------
    const CostWeights w = weights_;
    p.objective = [spec, w, offs, dur0, ndur](const Eigen::VectorXd& x,
                                              Eigen::VectorXd* grad) -> double {
      const HorizonSpec& h = *spec;
      if (grad) grad->setZero(x.size());
      double J = 0.0;
      // time
      for (int i = 0; i < ndur; ++i) {
        const double T = x[dur0 + i];
        J += w.lambda_time * T * T;
        if (grad) (*grad)[dur0 + i] += 2.0 * w.lambda_time * T;
      }
      // stability over all nodes but the terminal one
      const int K = static_cast<int>(h.nodes.size());
      for (int k = 0; k + 1 < K; ++k) {
        const HorizonNode& n = h.nodes[k];
        const int o = offs[k];
        const double thf = x[o + 1], thr = x[o + 2];
        const double tht = n.traversing() ? x[o + 3] : 0.0;
        double dthf, dthr, dtht;
        J += w.lambda_stab * cost_stability_node(n.stab, thf, thr, tht, &dthf, &dthr, &dtht);
        if (grad) {
          (*grad)[o + 1] += w.lambda_stab * dthf;
          (*grad)[o + 2] += w.lambda_stab * dthr;
          if (n.traversing()) (*grad)[o + 3] += w.lambda_stab * dtht;
        }
      }
      // smoothness over same-phase node pairs
      for (int i = 0; i < ndur; ++i) {
        const auto [a, b] = h.duration_pairs[i];
        const int oa = offs[a], ob = offs[b];
        const int ra = h.nodes[a].state_dim(), rb = h.nodes[b].state_dim();
        const Eigen::Vector3d q0(x[oa], x[oa + 1], x[oa + 2]);
        const Eigen::Vector3d q1(x[ob], x[ob + 1], x[ob + 2]);
        const Eigen::Vector3d v0(x[oa + ra], x[oa + ra + 1], x[oa + ra + 2]);
        const Eigen::Vector3d v1(x[ob + rb], x[ob + rb + 1], x[ob + rb + 2]);
        const double T = x[dur0 + i];
        Eigen::Vector3d dq0, dq1, dv0, dv1;
        double dT;
        J += w.lambda_smo *
             cost_smoothness_pair(q0, q1, v0, v1, T, w.Qs, &dq0, &dq1, &dv0, &dv1, &dT);
        if (grad) {
          for (int c = 0; c < 3; ++c) {
            (*grad)[oa + c] += w.lambda_smo * dq0[c];
            (*grad)[ob + c] += w.lambda_smo * dq1[c];
            (*grad)[oa + ra + c] += w.lambda_smo * dv0[c];
            (*grad)[ob + rb + c] += w.lambda_smo * dv1[c];
          }
          (*grad)[dur0 + i] += w.lambda_smo * dT;
        }
      }
      return J;
    };

    // --- constraint rows -----------------------------------------------
    using RowFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;
    auto eq_rows = std::make_shared<std::vector<RowFn>>();
    auto ineq_rows = std::make_shared<std::vector<RowFn>>();

    auto wrap_node_residual = [&](const Residual& r, int off) -> RowFn {
      return [r, off](const Eigen::VectorXd& x, Eigen::VectorXd* g) -> double {
        const Eigen::Vector4d xs(x[off], x[off + 1], x[off + 2], x[off + 3]);
        if (!g) return r(xs, nullptr);
        Eigen::Vector4d gs;
        const double v = r(xs, &gs);
        for (int c = 0; c < 4; ++c) (*g)[off + c] = gs[c];
        return v;
      };
    };

    for (int k = 0; k < K; ++k) {
      const HorizonNode& n = hs.nodes[k];
      if (!n.traversing()) continue;
      for (const auto& r : n.cset.equalities) eq_rows->push_back(wrap_node_residual(r, offs[k]));
      for (const auto& r : n.cset.inequalities)
        ineq_rows->push_back(wrap_node_residual(r, offs[k]));
    }

    for (const auto& sw : hs.switches) {
      const int op = offs[sw.pre], oq = offs[sw.post];
      const int rp = hs.nodes[sw.pre].state_dim(), rq = hs.nodes[sw.post].state_dim();
      if (sw.entry) {
        // pivot: theta_f+ for ascent, theta_t+ for descent
        const int piv = sw.direction == Direction::kAscending ? oq + 1 : oq + 3;
        const double lf = sw.lf;
        eq_rows->push_back([op, oq, piv, lf](const Eigen::VectorXd& x,
                                             Eigen::VectorXd* g) -> double {
          const double cv = std::cos(x[piv]);
          if (g) {
            (*g)[oq] = -cv;
            (*g)[piv] += -(lf - x[oq]) * std::sin(x[piv]);
            (*g)[op] = -1.0;
          }
          return (lf - x[oq]) * cv - x[op];
        });
        ineq_rows->push_back([op, oq, piv, rp, rq](const Eigen::VectorXd& x,
                                                   Eigen::VectorXd* g) -> double {
          const double cv = std::cos(x[piv]);
          if (g) {
            (*g)[oq + rq] = 1.0;
            (*g)[op + rp] = cv;
            (*g)[piv] += -x[op + rp] * std::sin(x[piv]);
          }
          return x[oq + rq] + x[op + rp] * cv;
        });
      } else {
        const int piv = sw.direction == Direction::kAscending ? op + 3 : op + 2;
        const double shift = sw.direction == Direction::kAscending ? sw.alpha : 0.0;
        const double lf = sw.lf, lt = sw.lt, D = sw.d_offset;
        eq_rows->push_back([op, oq, piv, shift, lf, lt, D](const Eigen::VectorXd& x,
                                                           Eigen::VectorXd* g) -> double {
          const double a = x[piv] - shift;
          if (g) {
            (*g)[op] = std::cos(a);
            (*g)[piv] += -(x[op] - lf - lt) * std::sin(a);
            (*g)[oq] = 1.0;
          }
          return (x[op] - lf - lt) * std::cos(a) + lt + x[oq] - D;
        });
        ineq_rows->push_back([op, oq, piv, shift, rp, rq](const Eigen::VectorXd& x,
                                                          Eigen::VectorXd* g) -> double {
          const double a = x[piv] - shift;
          const double cv = std::cos(a);
          if (g) {
            (*g)[op + rp] = -1.0;
            (*g)[oq + rq] = -cv;
            (*g)[piv] += x[oq + rq] * std::sin(a);
          }
          return -x[op + rp] - x[oq + rq] * cv;
        });
      }
      // Flipper angle and rate continuity across the switch.
      for (int c = 1; c <= 2; ++c) {
        eq_rows->push_back([op, oq, c](const Eigen::VectorXd& x, Eigen::VectorXd* g) -> double {
          if (g) {
            (*g)[oq + c] = 1.0;
            (*g)[op + c] = -1.0;
          }
          return x[oq + c] - x[op + c];
        });
        eq_rows->push_back(
            [op, oq, c, rp, rq](const Eigen::VectorXd& x, Eigen::VectorXd* g) -> double {
              if (g) {
                (*g)[oq + rq + c] = 1.0;
                (*g)[op + rp + c] = -1.0;
              }
              return x[oq + rq + c] - x[op + rp + c];
            });
      }
    }

    // Monotone progress along each phase: s_d nonincreasing, s_t nondecreasing.
    for (const auto& [a, b] : hs.duration_pairs) {
      const int oa = offs[a], ob = offs[b];
      const double sign = hs.nodes[a].traversing() ? -1.0 : 1.0;
      ineq_rows->push_back([oa, ob, sign](const Eigen::VectorXd& x, Eigen::VectorXd* g) -> double {
        if (g) {
          (*g)[ob] = sign;
          (*g)[oa] = -sign;
        }
        return sign * (x[ob] - x[oa]);
      });
    }

    p.num_eq = static_cast<int>(eq_rows->size());
    p.num_ineq = static_cast<int>(ineq_rows->size());
    p.eq = [eq_rows](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
      const int m = static_cast<int>(eq_rows->size());
      r.resize(m);
      if (J) J->setZero(m, x.size());
      Eigen::VectorXd tmp;
      for (int i = 0; i < m; ++i) {
        if (J) {
          tmp.setZero(x.size());
          r[i] = (*eq_rows)[i](x, &tmp);
          J->row(i) = tmp.transpose();
        } else {
          r[i] = (*eq_rows)[i](x, nullptr);
        }
      }
    };
    p.ineq = [ineq_rows](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
      const int m = static_cast<int>(ineq_rows->size());
      r.resize(m);
      if (J) J->setZero(m, x.size());
      Eigen::VectorXd tmp;
      for (int i = 0; i < m; ++i) {
        if (J) {
          tmp.setZero(x.size());
          r[i] = (*ineq_rows)[i](x, &tmp);
          J->row(i) = tmp.transpose();
        } else {
          r[i] = (*ineq_rows)[i](x, nullptr);
        }
      }
    };
    return p;
  }

  // -------------------------------------------------------------------------
  // Trajectory extraction and verification
  // -------------------------------------------------------------------------

  PlanTrajectory extract_trajectory(const HorizonSpec& hs, const Eigen::VectorXd& x) const {
    std::vector<int> offs(hs.nodes.size());
    int nvars = 0;
    for (size_t k = 0; k < hs.nodes.size(); ++k) {
      offs[k] = nvars;
      nvars += hs.nodes[k].var_count();
    }
    const int dur0 = nvars;

    PlanTrajectory traj;
    traj.junction = hs.junction;
    traj.direction = hs.direction;
    traj.ctx = hs.ctx;

    double t = 0.0;
    int dur_index = 0;
    PlanPhase* phase = nullptr;
    for (size_t k = 0; k < hs.nodes.size(); ++k) {
      const HorizonNode& n = hs.nodes[k];
      const bool new_phase =
          phase == nullptr || (phase->mode.is_traversing() != n.traversing());
      if (new_phase) {
        if (phase != nullptr && std::isnan(traj.t_switch)) traj.t_switch = t;
        traj.phases.emplace_back();
        phase = &traj.phases.back();
        phase->mode = n.mode;
        phase->t0 = t;
        if (n.traversing()) {
          phase->terrain_segment = hs.junction;
          phase->junction = hs.junction;
        } else {
          const bool pre = traj.phases.size() == 1;
          phase->terrain_segment = pre ? hs.driving_segment_pre : hs.driving_segment_post;
          phase->ref_arc = pre ? hs.ref_d_pre : hs.ref_d_post;
        }
        phase->node_time.push_back(0.0);
      } else {
        const double T = x[dur0 + dur_index];
        HermiteSegment<3> seg;
        const int oa = offs[k - 1], ob = offs[k];
        const int ra = hs.nodes[k - 1].state_dim(), rb = n.state_dim();
        seg.q0 = Eigen::Vector3d(x[oa], x[oa + 1], x[oa + 2]);
        seg.q1 = Eigen::Vector3d(x[ob], x[ob + 1], x[ob + 2]);
        seg.v0 = Eigen::Vector3d(x[oa + ra], x[oa + ra + 1], x[oa + ra + 2]);
        seg.v1 = Eigen::Vector3d(x[ob + rb], x[ob + rb + 1], x[ob + rb + 2]);
        seg.T = T;
        phase->curve.add_segment(seg);
        phase->node_time.push_back(phase->curve.duration());
        t += T;
        ++dur_index;
      }
      if (n.traversing()) {
        phase->node_tht.push_back(x[offs[k] + 3]);
        phase->node_key.push_back(n.key);
      }
    }
    traj.t_end = t;
    return traj;
  }

  // Independent re-evaluation of all node and switching residuals at the
  // returned node states.
  PlanCheck verify(const HorizonSpec& hs, const Eigen::VectorXd& x) const {
    std::vector<int> offs(hs.nodes.size());
    int nvars = 0;
    for (size_t k = 0; k < hs.nodes.size(); ++k) {
      offs[k] = nvars;
      nvars += hs.nodes[k].var_count();
    }
    const int dur0 = nvars;

    PlanCheck c;
    for (size_t k = 0; k < hs.nodes.size(); ++k) {
      const HorizonNode& n = hs.nodes[k];
      if (!n.traversing()) continue;
      const int o = offs[k];
      const Eigen::Vector4d xs(x[o], x[o + 1], x[o + 2], x[o + 3]);
      for (const auto& r : n.cset.equalities) c.max_eq = std::max(c.max_eq, std::abs(r(xs)));
      for (const auto& r : n.cset.inequalities) c.max_ineq = std::max(c.max_ineq, r(xs));
    }
    for (const auto& sw : hs.switches) {
      const int op = offs[sw.pre], oq = offs[sw.post];
      const int rp = hs.nodes[sw.pre].state_dim(), rq = hs.nodes[sw.post].state_dim();
      double dc, dm;
      if (sw.entry) {
        const double piv =
            sw.direction == Direction::kAscending ? x[oq + 1] : x[oq + 3];
        dc = switching_config_entry(sw.direction, x[op], x[oq], piv, sw.lf);
        dm = switching_motion_entry(x[op + rp], x[oq + rq], piv);
      } else {
        const double piv = sw.direction == Direction::kAscending ? x[op + 3] - sw.alpha
                                                                 : x[op + 2];
        dc = switching_config_exit(sw.direction, x[op], piv, x[oq] - sw.d_offset, sw.lf, sw.lt);
        dm = switching_motion_exit(x[op + rp], x[oq + rq], piv);
      }
      c.switch_config = std::max(c.switch_config, std::abs(dc));
      c.switch_motion = std::max(c.switch_motion, dm);
      // Flipper continuity is part of the configuration switching residual.
      for (int ch = 1; ch <= 2; ++ch) {
        c.switch_config = std::max(c.switch_config, std::abs(x[oq + ch] - x[op + ch]));
        c.max_eq = std::max(c.max_eq, std::abs(x[oq + rq + ch] - x[op + rp + ch]));
      }
    }
    for (size_t i = 0; i < hs.duration_pairs.size(); ++i)
      c.min_duration = std::min(c.min_duration, x[dur0 + static_cast<int>(i)]);

    // Post-hoc advisory check of interpolated mid-segment rates.
    for (size_t i = 0; i < hs.duration_pairs.size(); ++i) {
      const auto [a, b] = hs.duration_pairs[i];
      const int oa = offs[a], ob = offs[b];
      const int ra = hs.nodes[a].state_dim(), rb = hs.nodes[b].state_dim();
      HermiteSegment<3> seg;
      seg.q0 = Eigen::Vector3d(x[oa], x[oa + 1], x[oa + 2]);
      seg.q1 = Eigen::Vector3d(x[ob], x[ob + 1], x[ob + 2]);
      seg.v0 = Eigen::Vector3d(x[oa + ra], x[oa + ra + 1], x[oa + ra + 2]);
      seg.v1 = Eigen::Vector3d(x[ob + rb], x[ob + rb + 1], x[ob + rb + 2]);
      seg.T = x[dur0 + static_cast<int>(i)];
      const Eigen::Vector3d mid = seg.rate(0.5 * seg.T);
      if (std::abs(mid[0]) > params_.v_u * 1.2 ||
          std::abs(mid[1]) > std::max(params_.omega_u, -params_.omega_l) * 1.2 ||
          std::abs(mid[2]) > std::max(params_.omega_u, -params_.omega_l) * 1.2) {
        c.warnings.push_back("mid-segment rate exceeds bounds on pair " + std::to_string(i));
      }
    }
    return c;
  }

  // -------------------------------------------------------------------------
  // Replanning
  // -------------------------------------------------------------------------

  PlanResult replan(const PlannerInput& in, const Solution* warm = nullptr) const {
    PlanResult res;
    std::shared_ptr<HorizonSpec> spec;
    try {
      spec = build_horizon(in);
    } catch (const std::exception& e) {
      res.message = std::string("horizon: ") + e.what();
      return res;
    }
    if (spec->nodes.size() < 2) {  // trivial hold plan
      res.traj = hold_plan(in);
      res.accepted = true;
      res.message = "hold";
      return res;
    }
    res.spec = spec;
    NlpProblem nlp;
    try {
      nlp = assemble_nlp(spec);
    } catch (const std::exception& e) {
      res.message = std::string("assembly: ") + e.what();
      return res;
    }
    SolveOptions opt;
    opt.tol_con = 1e-8;
    opt.warm_start = warm;
    try {
      res.solution = solve(nlp, opt);
    } catch (const std::exception& e) {
      res.message = std::string("solver: ") + e.what();
      return res;
    }
    if (res.solution.status == SolveStatus::kInfeasible) {
      res.message = "solver reported infeasible";
      return res;
    }
    res.check = verify(*spec, res.solution.x);
    if (res.check.max_eq > 1e-4 || res.check.switch_config > 1e-4) {
      res.message = "plan rejected: equality residual " + format_double(res.check.max_eq) +
                    ", switch " + format_double(res.check.switch_config);
      return res;
    }
    if (res.check.max_ineq > 1e-6 || res.check.switch_motion > 1e-6) {
      res.message = "plan rejected: inequality violation";
      return res;
    }
    res.traj = extract_trajectory(*spec, res.solution.x);
    res.accepted = true;
    return res;
  }

  // Zero-motion plan used when there is nothing left to plan.
  PlanTrajectory hold_plan(const PlannerInput& in) const {
    PlanTrajectory traj;
    PlanPhase ph;
    ph.mode = in.mode;
    ph.terrain_segment = in.segment;
    ph.junction = -1;
    ph.t0 = 0.0;
    if (in.mode.is_driving()) ph.ref_arc = frame(in.segment).ref_arc;
    HermiteSegment<3> seg;
    seg.q0 = seg.q1 = Eigen::Vector3d(in.s, in.theta_f, in.theta_r);
    seg.v0 = seg.v1 = Eigen::Vector3d::Zero();
    seg.T = 1.0;
    ph.curve.add_segment(seg);
    ph.node_time = {0.0, 1.0};
    if (in.mode.is_traversing()) {
      ph.node_tht = {in.theta_t, in.theta_t};
      ph.node_key = {in.mode.node, in.mode.node};
    }
    traj.phases.push_back(std::move(ph));
    traj.t_end = 1.0;
    return traj;
  }

 private:
  // --- driving-mode horizon: current driving phase plus the full upcoming
  // traversal; its exit is the terminal node.
  std::shared_ptr<HorizonSpec> build_driving_horizon(const PlannerInput& in) const {
    auto spec = std::make_shared<HorizonSpec>();
    HorizonSpec& hs = *spec;
    const DrivingFrame f = frame(in.segment);
    hs.driving_segment_pre = in.segment;
    hs.ref_d_pre = f.ref_arc;

    if (f.junction < 0) {
      // Driving-only horizon toward the goal.
      const double dist = in.s;  // terminal pinned at s_d = 0
      if (dist < 0.02) return spec;  // hold
      const int n_d = driving_node_count(dist) + 1;
      append_driving_phase(hs, in, in.s, 0.0, n_d, /*leading=*/true, /*pin_last_s=*/true);
      hs.n_d = n_d;
      return spec;
    }

    const Junction& j = junctions_[f.junction];
    const TraversalContext ctx = context_for(f.junction, in);
    check_reachable(ctx);
    hs.junction = f.junction;
    hs.direction = j.decision.direction;
    hs.ctx = ctx;

    const double s_entry = entry_estimate(ctx, j.decision.direction);
    const int n_d = driving_node_count(std::max(in.s - s_entry, 0.0)) + 1;
    append_driving_phase(hs, in, in.s, s_entry, n_d, /*leading=*/true, /*pin_last_s=*/false);
    hs.n_d = n_d;

    const int pre_index = static_cast<int>(hs.nodes.size()) - 1;
    append_traversal_phase(hs, ctx, j.decision.direction, -1.0);
    hs.n_t = static_cast<int>(hs.nodes.size()) - n_d;

    SwitchSpec sw;
    sw.pre = pre_index;
    sw.post = pre_index + 1;
    sw.direction = j.decision.direction;
    sw.entry = true;
    sw.lf = ctx.lf;
    sw.lt = ctx.lt;
    sw.alpha = ctx.alpha;
    hs.switches.push_back(sw);
    return spec;
  }

  // --- traversing-mode horizon: remaining traversal nodes plus the next
  // driving period.
  std::shared_ptr<HorizonSpec> build_traversing_horizon(const PlannerInput& in) const {
    const int jidx = in.segment;  // traversing over junction `segment`
    if (jidx < 0 || jidx >= static_cast<int>(junctions_.size()))
      throw PlanError("traversing state without junction");
    const Junction& j = junctions_[jidx];
    const TraversalContext ctx = context_for(jidx, in);

    auto spec = std::make_shared<HorizonSpec>();
    HorizonSpec& hs = *spec;
    hs.junction = jidx;
    hs.direction = j.decision.direction;
    hs.ctx = ctx;

    auto templates = traversal_node_templates(j.decision.direction, ctx);
    const double margin = 0.02;
    std::vector<TraversalNodeTemplate> remaining;
    for (auto& t : templates) {
      const double anchor = t.s_pinned ? t.s_pin : t.s_hi;
      if (anchor > in.s + margin) {
        if (!t.s_pinned) t.s_lo = std::max(t.s_lo, in.s + ctx.eps);
        remaining.push_back(std::move(t));
      }
    }
    if (remaining.empty()) throw PlanError("traversal complete: no nodes ahead of s_t");

    // Pinned initial traversing node.
    HorizonNode init = make_traversing_node(ctx, j.decision.direction, 0);
    pin(init.s_lo, init.s_hi, init.s0, in.s);
    pin(init.thf_lo, init.thf_hi, init.thf0, in.theta_f);
    pin(init.thr_lo, init.thr_hi, init.thr0, in.theta_r);
    pin(init.tht_lo, init.tht_hi, init.tht0, in.theta_t);
    pin(init.sdot_lo, init.sdot_hi, init.sdot0, in.sdot);
    pin(init.wf_lo, init.wf_hi, init.wf0, in.omega_f);
    pin(init.wr_lo, init.wr_hi, init.wr0, in.omega_r);
    init.cset = NodeConstraintSet{};  // measured state, no constraints
    init.key = in.mode.node;
    hs.nodes.push_back(std::move(init));

    append_traversal_nodes(hs, ctx, j.decision.direction, remaining);
    for (size_t k = 1; k < hs.nodes.size(); ++k)
      hs.duration_pairs.push_back({static_cast<int>(k - 1), static_cast<int>(k)});
    hs.n_t = static_cast<int>(hs.nodes.size());
    const int exit_index = static_cast<int>(hs.nodes.size()) - 1;

    // Trailing driving phase on the target terrain.
    const int next_seg = jidx + 1;
    const DrivingFrame fpost = frame(next_seg);
    hs.driving_segment_post = next_seg;
    hs.ref_d_post = fpost.ref_arc;
    const double old_support_arc = terrain_[next_seg].line().project(j.support);
    const double D = fpost.ref_arc - old_support_arc;
    const double s_start_est = D - ctx.lt;
    double s_target = 0.0;
    if (fpost.junction >= 0) {
      const TraversalContext ctx_next =
          junction_context(params_, junctions_[fpost.junction], 0.0, 0.0, 0.0, config_);
      s_target = entry_estimate(ctx_next, junctions_[fpost.junction].decision.direction);
    }
    const int n_d = driving_node_count(std::max(s_start_est - s_target, 0.0)) + 1;
    PlannerInput post;
    post.mode = Mode::driving();
    post.segment = next_seg;
    post.s = s_start_est;
    post.theta_f = 0.0;
    post.theta_r = 0.0;
    append_driving_phase(hs, post, s_start_est, s_target, n_d, /*leading=*/false,
                         /*pin_last_s=*/true);
    hs.n_d = n_d;

    SwitchSpec sw;
    sw.pre = exit_index;
    sw.post = exit_index + 1;
    sw.direction = j.decision.direction;
    sw.entry = false;
    sw.d_offset = D;
    sw.lf = ctx.lf;
    sw.lt = ctx.lt;
    sw.alpha = ctx.alpha;
    hs.switches.push_back(sw);
    return spec;
  }

  static void pin(double& lo, double& hi, double& seed, double v) {
    lo = hi = seed = v;
  }

  int driving_node_count(double dist) const {
    const int n = static_cast<int>(std::ceil(dist / config_.driving_node_spacing));
    return std::clamp(n, 1, config_.n_d_max - 1);
  }

  double entry_estimate(const TraversalContext& ctx, Direction dir) const {
    if (dir == Direction::kDescending) return 0.0;
    const double reach2 = ctx.lf * ctx.lf - ctx.h * ctx.h;
    return std::sqrt(std::max(reach2, 0.09 * ctx.lf * ctx.lf));
  }

  void check_reachable(const TraversalContext& ctx) const {
    if (ctx.h > 0.0 && ctx.h >= ctx.lf * std::sin(ctx.theta_u) - 1e-9)
      throw PlanError("step height " + format_double(ctx.h) +
                      " exceeds front flipper reach " +
                      format_double(ctx.lf * std::sin(ctx.theta_u)));
    if (ctx.h < 0.0 && -ctx.h >= ctx.lr * std::sin(ctx.theta_u) - 1e-9)
      throw PlanError("descent height exceeds rear flipper reach");
  }

  HorizonNode make_driving_node(bool interior) const {
    HorizonNode n;
    n.mode = Mode::driving();
    n.role = interior ? NodeRole::kDrivingInterior : NodeRole::kDrivingBoundary;
    n.thf_lo = interior ? 0.0 : params_.theta_l;
    n.thf_hi = params_.theta_u;
    n.thr_lo = interior ? 0.0 : params_.theta_l;
    n.thr_hi = params_.theta_u;
    n.sdot_lo = -params_.v_u;
    n.sdot_hi = 0.0;
    n.wf_lo = n.wr_lo = params_.omega_l;
    n.wf_hi = n.wr_hi = params_.omega_u;
    n.sdot0 = -0.4 * params_.v_u;
    return n;
  }

  HorizonNode make_traversing_node(const TraversalContext& ctx, Direction dir, int key) const {
    HorizonNode n;
    n.mode = Mode::traversing(key, dir);
    n.role = NodeRole::kTraversal;
    n.key = key;
    n.thf_lo = params_.theta_l;
    n.thf_hi = params_.theta_u;
    n.thr_lo = params_.theta_l;
    n.thr_hi = params_.theta_u;
    n.sdot_lo = 0.0;
    n.sdot_hi = params_.v_u;
    n.wf_lo = n.wr_lo = params_.omega_l;
    n.wf_hi = n.wr_hi = params_.omega_u;
    n.sdot0 = 0.25 * params_.v_u;
    n.s_lo = 0.0;
    n.s_hi = ctx.l_sum();
    n.tht_lo = std::min(ctx.tht_lower, ctx.alpha - ctx.tht_upper);
    n.tht_hi = std::max(ctx.tht_upper, ctx.alpha - ctx.tht_lower);
    return n;
  }

  void append_driving_phase(HorizonSpec& hs, const PlannerInput& in, double s_from, double s_to,
                            int count, bool leading, bool pin_last_s) const {
    const int first = static_cast<int>(hs.nodes.size());
    const double c1 = sparsity_of(in.segment);
    for (int k = 0; k < count; ++k) {
      const bool boundary = (leading && k == count - 1) || (!leading && k == 0);
      HorizonNode n = make_driving_node(!boundary);
      const double u = count > 1 ? static_cast<double>(k) / (count - 1) : 0.0;
      n.s0 = s_from + u * (s_to - s_from);
      n.s_lo = std::min(s_from, s_to) - 2.0;
      n.s_hi = std::max(s_from, s_to) + 2.0;
      n.stab.w_f = c1;
      n.stab.w_r = c1;
      n.stab.alpha_f = 0.0;
      if (leading && k == 0) {
        // Initial node pinned to the measured state.
        pin(n.s_lo, n.s_hi, n.s0, in.s);
        pin(n.thf_lo, n.thf_hi, n.thf0, in.theta_f);
        pin(n.thr_lo, n.thr_hi, n.thr0, in.theta_r);
        pin(n.sdot_lo, n.sdot_hi, n.sdot0, in.sdot);
        pin(n.wf_lo, n.wf_hi, n.wf0, in.omega_f);
        pin(n.wr_lo, n.wr_hi, n.wr0, in.omega_r);
      }
      if (pin_last_s && k == count - 1) pin(n.s_lo, n.s_hi, n.s0, s_to);
      hs.nodes.push_back(std::move(n));
    }
    for (int k = first; k + 1 < static_cast<int>(hs.nodes.size()); ++k)
      hs.duration_pairs.push_back({k, k + 1});
  }

  void append_traversal_phase(HorizonSpec& hs, const TraversalContext& ctx, Direction dir,
                              double current_s) const {
    auto templates = traversal_node_templates(dir, ctx);
    (void)current_s;
    const int first = static_cast<int>(hs.nodes.size());
    append_traversal_nodes(hs, ctx, dir, templates);
    for (int k = first; k + 1 < static_cast<int>(hs.nodes.size()); ++k)
      hs.duration_pairs.push_back({k, k + 1});
  }

  void append_traversal_nodes(HorizonSpec& hs, const TraversalContext& ctx, Direction dir,
                              const std::vector<TraversalNodeTemplate>& templates) const {
    const int jidx = hs.junction;
    const double c1 = jidx >= 0 ? junctions_[jidx].c1 : 0.0;
    const double c2 = jidx >= 0 ? junctions_[jidx].c2 : 0.0;
    for (const auto& t : templates) {
      HorizonNode n = make_traversing_node(ctx, dir, t.key);
      n.cset = t.cset;
      if (t.s_pinned) {
        pin(n.s_lo, n.s_hi, n.s0, t.s_pin);
      } else {
        n.s_lo = t.s_lo;
        n.s_hi = t.s_hi;
        n.s0 = 0.5 * (t.s_lo + t.s_hi);
      }
      n.tht_lo = t.tht_lo;
      n.tht_hi = t.tht_hi;
      if (t.tht_pinned) pin(n.tht_lo, n.tht_hi, n.tht0, t.tht_pin);
      n.stab.w_r = c1;
      n.stab.alpha_f = ctx.alpha;
      const bool zero_front = (dir == Direction::kAscending && t.key == 1) ||
                              (dir == Direction::kDescending && t.key == 4);
      n.stab.w_f = zero_front ? 0.0 : c2;
      seed_traversal_node(n, ctx, dir, t);
      hs.nodes.push_back(std::move(n));
    }
  }

  // Feasibility-biased deterministic seeding: s at pins or range midpoints,
  // angles from the node equalities solved channel-wise by clamped arcsine.
  void seed_traversal_node(HorizonNode& n, const TraversalContext& ctx, Direction dir,
                           const TraversalNodeTemplate& t) const {
    using detail::asin_clamped;
    const double alpha = ctx.alpha, h = ctx.h;
    const double lf = ctx.lf, lr = ctx.lr, lt = ctx.lt;
    double s = n.s0;
    if (dir == Direction::kAscending) {
      switch (t.key) {
        case 1: {
          const double s_max = lf - h / std::sin(ctx.theta_u);
          s = std::clamp(0.5 * s_max, n.s_lo, n.s_hi);
          n.s0 = s;
          n.tht0 = 0.0;
          n.thf0 = asin_clamped(h / std::max(lf - s, 1e-6));
          n.thr0 = 0.0;
          break;
        }
        case 2: {
          n.tht0 = asin_clamped(h / (lt + lr));
          n.thr0 = 0.0;
          n.thf0 = std::max(alpha - n.tht0, 0.0);
          break;
        }
        case 3:
        case 0: {
          const double tht2 = asin_clamped(h / (lt + lr));
          const double frac = std::clamp((s - lf) / std::max(lt, 1e-6), 0.0, 1.0);
          n.tht0 = tht2 + (alpha - tht2) * frac;
          n.thf0 = alpha - n.tht0 +
                   asin_clamped(-(s - lf) * std::sin(n.tht0 - alpha) / lf);
          n.thr0 = n.tht0 - asin_clamped((h - (lf + lt - s) * std::sin(n.tht0)) / lr);
          break;
        }
        case 4: {
          n.tht0 = alpha;
          n.thf0 = 0.0;
          n.thr0 = alpha;  // rear lifted level with the target terrain
          break;
        }
        default: break;
      }
    } else {
      switch (t.key) {
        case 1: {
          n.tht0 = 0.0;
          n.thf0 = 0.0;
          n.thr0 = 0.0;
          break;
        }
        case 0: {
          n.tht0 = 0.0;
          n.thf0 = alpha - n.tht0 +
                   asin_clamped((h - (s - lf) * std::sin(n.tht0 - alpha)) / lf);
          n.thr0 = 0.0;
          break;
        }
        case 2: {
          const double tht4 = alpha + asin_clamped(h / (lt + lf));
          const double frac = std::clamp((s - ctx.s_com) / std::max(lf + lt - ctx.s_com, 1e-6),
                                         0.0, 1.0);
          n.tht0 = 0.0 + (tht4 - 0.0) * frac;
          n.thf0 = alpha - n.tht0 +
                   asin_clamped((h - (s - lf) * std::sin(n.tht0 - alpha)) / lf);
          n.thr0 = n.tht0 - asin_clamped(-(lf + lt - s) * std::sin(n.tht0) / lr);
          break;
        }
        case 3: {
          n.tht0 = alpha + asin_clamped(h / (lt + lf));
          n.thf0 = alpha - n.tht0 + asin_clamped((h - lt * std::sin(n.tht0 - alpha)) / lf);
          n.thr0 = n.tht0;
          break;
        }
        case 4: {
          const double denom = std::max(-h / std::sin(0.8 * ctx.theta_u), 0.3 * lr);
          s = std::clamp(lf + lt + denom, n.s_lo, n.s_hi);
          n.s0 = s;
          n.tht0 = alpha;
          n.thf0 = 0.0;
          n.thr0 = asin_clamped(-h / std::max(s - lf - lt, 1e-6));
          break;
        }
        default: break;
      }
    }
    n.tht0 = std::clamp(n.tht0, n.tht_lo, n.tht_hi);
    n.thf0 = std::clamp(n.thf0, n.thf_lo, n.thf_hi);
    n.thr0 = std::clamp(n.thr0, n.thr_lo, n.thr_hi);
  }

  double sparsity_of(int segment) const {
    if (segment < 0 || segment >= static_cast<int>(terrain_.size())) return 0.0;
    return terrain_[segment].sparsity;
  }

  RobotParams params_;
  TerrainSequence terrain_;
  CostWeights weights_;
  HorizonConfig config_;
  std::vector<Junction> junctions_;
  double goal_d_ = 0.0;
};

}  // namespace ttp

#endif  // TTP_HTO_PLANNER_HPP_
