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

#ifndef TTP_SCENARIO_HPP_
#define TTP_SCENARIO_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ttp/control.hpp"
#include "ttp/heightmap.hpp"
#include "ttp/hto.hpp"
#include "ttp/io.hpp"
#include "ttp/sim.hpp"
#include "ttp/simplify.hpp"

namespace ttp {

// ---------------------------------------------------------------------------
// Episode loop
// ---------------------------------------------------------------------------

struct EpisodeConfig {
  double start_d = 0.5;
  double control_rate = 100.0;   // Hz
  double replan_period = 0.5;    // s
  double t_max = 600.0;          // s
  bool raw_contact = false;
  bool warm_start = false;
  ControllerGains gains;
};

struct EpisodeRow {
  double t = 0.0;
  int mode = 0;  // 0 driving, 1..4 traversing key node
  double x = 0.0, z = 0.0, theta_t = 0.0;
  double theta_f = 0.0, theta_r = 0.0;  // real flipper angles (rad)
  double s_coord = 0.0;
  double v_cmd = 0.0, omega_f_cmd = 0.0, omega_r_cmd = 0.0;
  double ddz = 0.0;
};

struct ReplanStat {
  double t = 0.0;
  double wall_ms = 0.0;
  int iterations = 0;
  double max_eq = 0.0, max_ineq = 0.0;
  bool accepted = false;
};

struct EpisodeLog {
  std::vector<EpisodeRow> rows;
  std::vector<ReplanStat> replans;
  std::vector<int> mode_sequence;  // deduped mode labels over time
  std::vector<RearLiftEvent> rear_lift_events;
  bool success = false;
  std::string message;
  double dt = 0.01;
  double first_motion_time = std::numeric_limits<double>::quiet_NaN();
  double arrival_time = std::numeric_limits<double>::quiet_NaN();
  PlanResult first_plan;
};

inline int mode_label(const Mode& m) { return m.is_driving() ? 0 : m.node; }

// Closed loop of planner, tracking controller and simulator at a fixed
// control rate; replans on every mode change and every replan_period.
inline EpisodeLog run_episode(const HtoPlanner& planner, Simulator& sim,
                              const EpisodeConfig& cfg,
                              const RawContactOverlay* raw = nullptr) {
  EpisodeLog log;
  const double dt = 1.0 / cfg.control_rate;
  log.dt = dt;
  sim.reset(cfg.start_d);

  PlanResult plan;
  Solution warm;
  double plan_t0 = 0.0;
  double last_replan = -1e9;
  int consecutive_failures = 0;
  VelocityController vc;
  const RobotParams& p = planner.robot();
  const double delta = sim.gear_offset();

  log.mode_sequence.push_back(mode_label(sim.state().mode));

  const int max_ticks = static_cast<int>(cfg.t_max * cfg.control_rate);
  for (int tick = 0; tick < max_ticks; ++tick) {
    const double t = tick * dt;

    const bool need_replan =
        !plan.accepted || sim.mode_changed_flag() || (t - last_replan) >= cfg.replan_period - 1e-9;
    if (need_replan) {
      const PlanResult r =
          planner.replan(sim.planner_input(), cfg.warm_start && plan.accepted ? &warm : nullptr);
      ReplanStat st;
      st.t = t;
      st.wall_ms = r.solution.wall_time_ms;
      st.iterations = r.solution.inner_iterations;
      st.max_eq = r.check.max_eq;
      st.max_ineq = r.check.max_ineq;
      st.accepted = r.accepted;
      log.replans.push_back(st);
      last_replan = t;
      if (r.accepted) {
        plan = r;
        warm = r.solution;
        plan_t0 = t;
        consecutive_failures = 0;
        if (!log.first_plan.accepted) log.first_plan = r;
      } else {
        ++consecutive_failures;
        if (consecutive_failures >= 2 || !plan.accepted) {
          log.message = "planner failed twice: " + r.message;
          return log;
        }
      }
    }

    // Sample the plan; snap across the switch boundary if the simulator and
    // the plan disagree on the current mode (execution-time mode switching
    // follows the geometric trigger).
    double tau = t - plan_t0;
    const PlanTrajectory& traj = plan.traj;
    PlanSample ps = traj.sample(tau);
    if (ps.mode.is_driving() != sim.state().mode.is_driving() && !std::isnan(traj.t_switch)) {
      const double eps = 1e-6;
      tau = sim.state().mode.is_traversing() == (traj.phases.back().mode.is_traversing())
                ? std::min(std::max(tau, traj.t_switch + eps), traj.t_end)
                : std::min(tau, traj.t_switch - eps);
      ps = traj.sample(tau);
    }

    // Tracking commands.
    const double v_des = nominal_velocity(ps.qdot[0], ps.mode);
    const double v_cmd = vc.command(v_des, ps.q[0], sim.state().s, sim.state().mode, dt,
                                    cfg.gains, p);
    Command cmd;
    cmd.v = v_cmd;
    cmd.omega_f = flipper_pd(ps.q[1] - delta, ps.qdot[1], sim.state().theta_f,
                             sim.state().omega_f, cfg.gains, p);
    cmd.omega_r = flipper_pd(ps.q[2] - delta, ps.qdot[2], sim.state().theta_r,
                             sim.state().omega_r, cfg.gains, p);

    try {
      sim.step(cmd, dt);
    } catch (const std::exception& e) {
      log.message = std::string("simulation stopped: ") + e.what();
      return log;
    }

    if (std::isnan(log.first_motion_time) && cmd.v > 1e-4)
      log.first_motion_time = t;

    EpisodeRow row;
    row.t = sim.state().time;
    row.mode = mode_label(sim.state().mode);
    PlanarPose pose = sim.state().pose;
    if (raw != nullptr)
      pose = raw->settle(pose.x, sim.state().theta_f, sim.state().theta_r, pose.theta_t);
    row.x = pose.x;
    row.z = pose.z;
    row.theta_t = pose.theta_t;
    row.theta_f = sim.state().theta_f;
    row.theta_r = sim.state().theta_r;
    row.s_coord = sim.state().s;
    row.v_cmd = cmd.v;
    row.omega_f_cmd = cmd.omega_f;
    row.omega_r_cmd = cmd.omega_r;
    row.ddz = sim.state().zdd;
    log.rows.push_back(row);

    if (row.mode != log.mode_sequence.back()) log.mode_sequence.push_back(row.mode);

    if (sim.body_x() >= planner.goal_d() - 1e-3) {
      log.success = true;
      log.arrival_time = sim.state().time;
      break;
    }
  }
  log.rear_lift_events = sim.rear_lift_events();
  if (!log.success && log.message.empty()) log.message = "time limit reached";
  return log;
}

// Raw-mode ddz needs recomputation from the overlay z channel.
inline void recompute_ddz(EpisodeLog& log) {
  const double dt = log.dt;
  for (size_t i = 0; i < log.rows.size(); ++i) {
    if (i >= 2)
      log.rows[i].ddz =
          (log.rows[i].z - 2.0 * log.rows[i - 1].z + log.rows[i - 2].z) / (dt * dt);
    else
      log.rows[i].ddz = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct MetricsReport {
  double total_time = 0.0;             // s, first motion to arrival
  double max_abs_pitch = 0.0;          // deg
  double max_abs_pitch_rate = 0.0;     // deg/s
  double rotation_angle = 0.0;         // deg
  double max_z_accel = 0.0;            // m/s^2
  double net_progress = 0.0;           // m
  double replan_median_ms = 0.0, replan_p95_ms = 0.0;
  int replan_count = 0;
  bool success = false;
  std::string message;
};

inline MetricsReport compute_metrics(const std::vector<EpisodeRow>& rows) {
  if (rows.empty()) throw IoError("empty episode log");
  MetricsReport m;
  const double rad2deg = 57.29577951308232;
  double first_motion = rows.front().t;
  bool moved = false;
  for (const auto& r : rows) {
    if (!moved && r.v_cmd > 1e-4) {
      first_motion = r.t;
      moved = true;
    }
    m.max_abs_pitch = std::max(m.max_abs_pitch, std::abs(r.theta_t) * rad2deg);
    m.max_z_accel = std::max(m.max_z_accel, std::abs(r.ddz));
  }
  m.total_time = rows.back().t - first_motion;
  for (size_t i = 1; i + 1 < rows.size(); ++i) {
    const double dt = 0.5 * (rows[i + 1].t - rows[i - 1].t);
    if (dt > 0.0)
      m.max_abs_pitch_rate = std::max(
          m.max_abs_pitch_rate,
          std::abs(rows[i + 1].theta_t - rows[i - 1].theta_t) / (2.0 * dt) * rad2deg);
  }
  for (size_t i = 1; i < rows.size(); ++i) {
    m.rotation_angle += (std::abs(rows[i].theta_f - rows[i - 1].theta_f) +
                         std::abs(rows[i].theta_r - rows[i - 1].theta_r)) *
                        rad2deg;
  }
  m.net_progress = rows.back().x - rows.front().x;
  return m;
}

inline void fill_replan_stats(MetricsReport& m, const std::vector<ReplanStat>& replans) {
  m.replan_count = static_cast<int>(replans.size());
  if (replans.empty()) return;
  std::vector<double> ms;
  ms.reserve(replans.size());
  for (const auto& r : replans) ms.push_back(r.wall_ms);
  std::sort(ms.begin(), ms.end());
  m.replan_median_ms = ms[ms.size() / 2];
  m.replan_p95_ms = ms[std::min(ms.size() - 1, static_cast<size_t>(ms.size() * 95 / 100))];
}

inline std::string episode_csv(const std::vector<EpisodeRow>& rows) {
  CsvWriter csv({"t", "mode", "x", "z", "theta_t", "theta_f", "theta_r", "s_coord", "v_cmd",
                 "omega_f_cmd", "omega_r_cmd", "ddz"});
  for (const auto& r : rows)
    csv.add_row({r.t, static_cast<double>(r.mode), r.x, r.z, r.theta_t, r.theta_f, r.theta_r,
                 r.s_coord, r.v_cmd, r.omega_f_cmd, r.omega_r_cmd, r.ddz});
  return csv.str();
}

inline std::vector<EpisodeRow> episode_rows_from_csv(const CsvTable& t) {
  std::vector<EpisodeRow> rows;
  const int ct = t.column("t"), cm = t.column("mode"), cx = t.column("x"), cz = t.column("z");
  const int ctt = t.column("theta_t"), cf = t.column("theta_f"), cr = t.column("theta_r");
  const int cs = t.column("s_coord"), cv = t.column("v_cmd");
  const int cwf = t.column("omega_f_cmd"), cwr = t.column("omega_r_cmd"), cdz = t.column("ddz");
  for (const auto& r : t.rows) {
    EpisodeRow row;
    row.t = r[ct];
    row.mode = static_cast<int>(r[cm]);
    row.x = r[cx];
    row.z = r[cz];
    row.theta_t = r[ctt];
    row.theta_f = r[cf];
    row.theta_r = r[cr];
    row.s_coord = r[cs];
    row.v_cmd = r[cv];
    row.omega_f_cmd = r[cwf];
    row.omega_r_cmd = r[cwr];
    row.ddz = r[cdz];
    rows.push_back(row);
  }
  return rows;
}

// Plan dump at a fixed rate: driving rows carry s_d (s_t set to 0) and vice
// versa; theta_t is the world pitch implied by the plan.
inline std::string plan_csv(const PlanTrajectory& traj, const TerrainSequence& terrain,
                            double rate = 100.0) {
  CsvWriter csv({"t", "mode", "s_d", "s_t", "theta_f", "theta_r", "theta_t"});
  if (traj.empty()) return csv.str();
  const double dt = 1.0 / rate;
  for (double t = 0.0; t <= traj.t_end + 1e-9; t += dt) {
    const PlanSample ps = traj.sample(t);
    const PlanPhase& ph = traj.phases[ps.phase];
    double mode = 0.0, s_d = 0.0, s_t = 0.0, tht = 0.0;
    if (ps.mode.is_driving()) {
      s_d = ps.q[0];
      tht = terrain[ph.terrain_segment].alpha;
    } else {
      s_t = ps.q[0];
      int key = ph.node_key.empty() ? ps.mode.node : ph.node_key.front();
      for (size_t k = 0; k < ph.node_time.size() && k < ph.node_key.size(); ++k)
        if (ph.node_time[k] <= t - ph.t0 + 1e-9 && ph.node_key[k] > 0) key = ph.node_key[k];
      mode = key;
      tht = terrain[ph.terrain_segment].alpha + ps.theta_t;
    }
    csv.add_row({t, mode, s_d, s_t, ps.q[1], ps.q[2], tht});
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

struct Scenario {
  std::string name = "scenario";
  std::string profile_csv;    // direct profile, or
  std::string heightmap_file; // grid plus reference path
  std::string path_csv;
  std::string robot_file;
  SimplifyConfig simplify;
  SampleConfig sampling;
  CostWeights weights;
  HorizonConfig horizon;
  EpisodeConfig episode;
  double goal_d = 0.0;
  RobotParams robot;

  static Scenario from_file(const std::string& path) {
    const KeyValueConfig cfg = KeyValueConfig::from_file(path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    const auto resolve = [&](const std::string& rel) -> std::string {
      if (rel.empty()) return rel;
      std::filesystem::path p(rel);
      return p.is_absolute() ? p.string() : (base / p).string();
    };

    Scenario s;
    s.name = cfg.get_string("scenario.name", "scenario");
    s.profile_csv = resolve(cfg.get_string("scenario.profile", ""));
    s.heightmap_file = resolve(cfg.get_string("scenario.heightmap", ""));
    s.path_csv = resolve(cfg.get_string("scenario.path", ""));
    s.robot_file = resolve(cfg.get_string("scenario.robot"));
    if (s.profile_csv.empty() && s.heightmap_file.empty())
      throw IoError("scenario needs a profile or a heightmap");

    s.robot = RobotParams::from_file(s.robot_file);
    const double deg = 0.017453292519943295;
    if (cfg.has("robot.theta_u_deg")) s.robot.theta_u = cfg.get_double("robot.theta_u_deg") * deg;
    if (cfg.has("robot.theta_l_deg")) s.robot.theta_l = cfg.get_double("robot.theta_l_deg") * deg;
    s.robot.validate();

    s.episode.start_d = cfg.get_double("scenario.start", 0.5);
    s.goal_d = cfg.get_double("scenario.goal");
    s.episode.replan_period = cfg.get_double("scenario.replan_period", 0.5);
    s.episode.control_rate = cfg.get_double("scenario.control_rate", 100.0);
    s.episode.t_max = cfg.get_double("scenario.t_max", 600.0);
    s.episode.raw_contact = cfg.get_bool("scenario.raw_contact", false);

    s.simplify.d_r = cfg.get_double("simplify.d_r", 0.02);
    s.simplify.delta_m = cfg.get_double("simplify.delta_m", 0.04);
    s.simplify.delta_l = cfg.get_double("simplify.delta_l", 0.02);
    s.simplify.n_ign = cfg.get_int("simplify.n_ign", 3);
    s.simplify.max_gap = cfg.get_double("simplify.max_gap", 0.5 * s.robot.l_t);
    s.simplify.validate();

    s.sampling.d_r = s.simplify.d_r;
    s.sampling.strip_half_width = cfg.get_double("simplify.strip_half_width", 0.15);
    s.sampling.mad_k = cfg.get_double("simplify.mad_k", 3.0);

    s.weights.lambda_time = cfg.get_double("weights.lambda_time", 1.0);
    s.weights.lambda_stab = cfg.get_double("weights.lambda_stab", 0.5);
    s.weights.lambda_smo = cfg.get_double("weights.lambda_smo", 0.5);
    s.weights.Qs = Eigen::Vector3d(cfg.get_double("weights.qs_s", 1.0),
                                   cfg.get_double("weights.qs_f", 0.2),
                                   cfg.get_double("weights.qs_r", 0.2))
                       .asDiagonal();

    s.episode.gains.kp_theta = cfg.get_double("gains.kp_theta", 6.0);
    s.episode.gains.kd_theta = cfg.get_double("gains.kd_theta", 0.5);
    s.episode.gains.kp_s = cfg.get_double("gains.kp_s", 1.0);
    s.episode.gains.ki_s = cfg.get_double("gains.ki_s", 0.2);
    s.episode.gains.integrator_clamp = cfg.get_double("gains.integrator_clamp", 0.2);
    s.episode.gains.validate();

    s.horizon.n_t = cfg.get_int("horizon.n_t", 5);
    s.horizon.n_d_max = cfg.get_int("horizon.n_d_max", 6);
    s.horizon.driving_node_spacing = cfg.get_double("horizon.node_spacing", 0.5);
    if (cfg.has("horizon.tht_halfrange_deg"))
      s.horizon.tht_halfrange = cfg.get_double("horizon.tht_halfrange_deg") * deg;
    return s;
  }

  Profile load_profile() const {
    if (!profile_csv.empty()) return read_profile_csv(profile_csv);
    const Heightmap map = Heightmap::from_file(heightmap_file);
    std::vector<Vec2> path;
    if (!path_csv.empty()) {
      const CsvTable t = read_csv(path_csv);
      const int cx = t.column("x"), cy = t.column("y");
      for (const auto& r : t.rows) path.emplace_back(r[cx], r[cy]);
    } else {
      path.emplace_back(map.origin_x, map.origin_y + 0.5 * map.resolution * map.height);
      path.emplace_back(map.origin_x + map.resolution * (map.width - 1),
                        map.origin_y + 0.5 * map.resolution * map.height);
    }
    return sample_profile(map, path, sampling);
  }
};

// ---------------------------------------------------------------------------
// End-to-end run
// ---------------------------------------------------------------------------

enum class AblateTerm { kNone, kTime, kStability, kSmoothness };

struct RunResult {
  MetricsReport metrics;
  EpisodeLog log;
  TerrainSequence terrain;
  Profile profile;
};

// Full pipeline: profile -> simplification -> receding-horizon planning in a
// closed simulation loop -> metrics.
inline RunResult run_scenario(const Scenario& scenario, AblateTerm ablate = AblateTerm::kNone,
                              unsigned seed = 0) {
  RunResult out;
  out.profile = scenario.load_profile();
  out.terrain = simplify_profile(out.profile, scenario.simplify);

  CostWeights w = scenario.weights;
  switch (ablate) {
    case AblateTerm::kTime: w.lambda_time = 0.0; break;
    case AblateTerm::kStability: w.lambda_stab = 0.0; break;
    case AblateTerm::kSmoothness: w.lambda_smo = 0.0; break;
    case AblateTerm::kNone: break;
  }

  HtoPlanner planner(scenario.robot, out.terrain, w, scenario.horizon);
  planner.set_goal(scenario.goal_d);
  Simulator sim(scenario.robot, out.terrain, scenario.goal_d, scenario.horizon);

  EpisodeConfig ep = scenario.episode;
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    ep.start_d += jitter(rng);
  }

  std::optional<RawContactOverlay> raw;
  if (ep.raw_contact) raw.emplace(out.profile, scenario.robot);
  out.log = run_episode(planner, sim, ep, raw ? &*raw : nullptr);
  if (ep.raw_contact) recompute_ddz(out.log);

  out.metrics = compute_metrics(out.log.rows);
  fill_replan_stats(out.metrics, out.log.replans);
  out.metrics.success = out.log.success;
  out.metrics.message = out.log.message;
  return out;
}

}  // namespace ttp

#endif  // TTP_SCENARIO_HPP_
