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

#ifndef TTP_CONTROL_HPP_
#define TTP_CONTROL_HPP_

#include <algorithm>
#include <cmath>

#include "ttp/robot_model.hpp"
#include "ttp/sequence.hpp"

namespace ttp {

struct ControllerGains {
  double kp_theta = 6.0;
  double kd_theta = 0.5;
  double kp_s = 1.0;
  double ki_s = 0.2;
  double integrator_clamp = 0.2;  // m/s contribution cap

  void validate() const {
    if (kp_theta < 0 || kd_theta < 0 || kp_s < 0 || ki_s < 0)
      throw ModelError("controller gains must be nonnegative");
    if (!(integrator_clamp > 0)) throw ModelError("integrator clamp must be positive");
  }
};

// Nominal longitudinal velocity from the generalized-coordinate rate:
// v = -sdot_d while driving, sdot_t while traversing.
inline double nominal_velocity(double coord_rate, const Mode& mode) {
  return mode.is_driving() ? -coord_rate : coord_rate;
}

// Flipper PD law on real angles; references must already be converted from
// model angles (theta_real = theta_model - delta). Output clamped to the
// actuator range.
inline double flipper_pd(double theta_ref, double omega_ref, double theta_meas,
                         double omega_meas, const ControllerGains& g, const RobotParams& p) {
  const double cmd = omega_ref + g.kp_theta * (theta_ref - theta_meas) +
                     g.kd_theta * (omega_ref - omega_meas);
  return std::clamp(cmd, p.omega_l, p.omega_u);
}

// Longitudinal velocity command: feed-forward plus PI position feedback on
// the generalized coordinate. e_s enters negated in driving mode since s_d
// decreases while moving forward.
struct VelocityController {
  double integral = 0.0;

  double command(double v_des, double s_plan, double s_meas, const Mode& mode, double dt,
                 const ControllerGains& g, const RobotParams& p) {
    double e_s = s_plan - s_meas;
    if (mode.is_driving()) e_s = -e_s;
    integral += e_s * dt;
    const double clamp_i = g.integrator_clamp / std::max(g.ki_s, 1e-9);
    integral = std::clamp(integral, -clamp_i, clamp_i);
    const double v = v_des + g.kp_s * e_s + g.ki_s * integral;
    return std::clamp(v, 0.0, p.v_u);
  }

  void reset() { integral = 0.0; }
};

struct Command {
  double v = 0.0;        // nominal longitudinal velocity (m/s), >= 0
  double omega_f = 0.0;  // flipper rate commands (rad/s)
  double omega_r = 0.0;

  Command clamped(const RobotParams& p) const {
    Command c;
    c.v = std::clamp(v, 0.0, p.v_u);
    c.omega_f = std::clamp(omega_f, p.omega_l, p.omega_u);
    c.omega_r = std::clamp(omega_r, p.omega_l, p.omega_u);
    return c;
  }
};

}  // namespace ttp

#endif  // TTP_CONTROL_HPP_
