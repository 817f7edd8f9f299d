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

#include "ttp/robot_model.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace ttp {
namespace {

RobotParams default_params() {
  RobotParams p;
  p.validate();
  return p;
}

TEST(GearOffsetAngle, EqualRadiiGiveZero) {
  RobotParams p = default_params();
  p.gear_R = p.gear_r = 0.08;
  p.l0 = 0.3;
  EXPECT_DOUBLE_EQ(gear_offset_angle(p), 0.0);
}

TEST(GearOffsetAngle, MatchesArcsine) {
  RobotParams p = default_params();
  p.gear_R = 0.12;
  p.gear_r = 0.06;
  p.l0 = 0.30;
  EXPECT_NEAR(gear_offset_angle(p), 0.2013579207903308, 1e-15);
}

TEST(GearOffsetAngle, DomainBoundaryRejected) {
  RobotParams p = default_params();
  p.gear_R = 0.36;
  p.gear_r = 0.06;
  p.l0 = 0.30;
  EXPECT_THROW(gear_offset_angle(p), ModelError);
}

TEST(EffectiveGeometry, ZeroAngleCase) {
  RobotParams p = default_params();
  const double delta = gear_offset_angle(p);
  // Physical angle chosen so the effective angle is exactly zero.
  const EffectiveGeometry g = effective_geometry(p, -delta, -delta, 0.0, 0.0, 0.0);
  EXPECT_NEAR(g.li_f, 0.0, 1e-15);
  EXPECT_NEAR(g.lo_f, 0.0, 1e-15);
  EXPECT_NEAR(g.lf, p.l0 * std::cos(delta), 1e-15);
}

TEST(EffectiveGeometry, InnerExtensionAtRightAngle) {
  RobotParams p = default_params();
  p.gear_R = 0.1;
  const double delta = gear_offset_angle(p);
  const double half_pi = 1.5707963267948966;
  const EffectiveGeometry g =
      effective_geometry(p, half_pi - delta, 0.0, 0.0, 0.0, 0.0);
  EXPECT_NEAR(g.li_f, 0.1, 1e-12);  // R tan(pi/4)
}

TEST(EffectiveGeometry, OuterExtensionClampsToZero) {
  RobotParams p = default_params();
  p.gear_r = 0.05;
  const double delta = gear_offset_angle(p);
  const double deg = 0.017453292519943295;
  // Effective front angle 30 deg, theta_t + alpha_f = 40 deg: negative tan
  // argument clamps to zero.
  const EffectiveGeometry g =
      effective_geometry(p, 30.0 * deg - delta, 0.0, 20.0 * deg, 20.0 * deg, 0.0);
  EXPECT_DOUBLE_EQ(g.lo_f, 0.0);
}

TEST(EffectiveGeometry, ZeroSmallGearKillsOuterExtension) {
  RobotParams p = default_params();
  p.gear_r = 1e-12;  // r = 0 limit
  const EffectiveGeometry g = effective_geometry(p, 0.5, -0.3, 0.1, 0.0, 0.0);
  EXPECT_NEAR(g.lo_f, 0.0, 1e-12);
  EXPECT_NEAR(g.lo_r, 0.0, 1e-12);
}

TEST(EffectiveGeometry, MonotoneInFrontAngle) {
  RobotParams p = default_params();
  const double delta = gear_offset_angle(p);
  double prev = -1.0;
  for (double th = 0.0; th < 1.45; th += 0.05) {
    const EffectiveGeometry g = effective_geometry(p, th - delta, 0.0, 0.0, 0.0, 0.0);
    EXPECT_GE(g.lf, prev);
    prev = g.lf;
  }
}

TEST(EffectiveGeometry, SingularityGuard) {
  RobotParams p = default_params();
  EXPECT_THROW(effective_geometry(p, 3.0, 0.0, 0.0, 0.0, 0.0), ModelError);
}

TEST(DualTraversing, Definition) {
  RobotParams p = default_params();
  EffectiveGeometry g = effective_geometry(p, 0.0, 0.0, 0.0, 0.0, 0.0);
  g.lf = 0.5;
  g.lt = 0.6;
  g.lr = 0.4;  // l_sum = 1.5
  TraversingState q{0.2, 0.1, -0.3, 0.05};
  const TraversingState d = dual_traversing(q, g);
  EXPECT_DOUBLE_EQ(d.s_t, 1.3);
  EXPECT_DOUBLE_EQ(d.theta_f, -0.3);
  EXPECT_DOUBLE_EQ(d.theta_r, 0.1);
  EXPECT_DOUBLE_EQ(d.theta_t, -0.05);
}

TEST(DualTraversing, FixedPointAtCenter) {
  RobotParams p = default_params();
  EffectiveGeometry g = effective_geometry(p, 0.0, 0.0, 0.0, 0.0, 0.0);
  TraversingState q{0.5 * g.total(), 0.2, 0.2, 0.0};
  const TraversingState d = dual_traversing(q, g);
  EXPECT_DOUBLE_EQ(d.s_t, q.s_t);
  EXPECT_DOUBLE_EQ(d.theta_f, q.theta_f);
  EXPECT_DOUBLE_EQ(d.theta_r, q.theta_r);
}

TEST(DualTraversing, Involution) {
  RobotParams p = default_params();
  const EffectiveGeometry g = effective_geometry(p, 0.1, -0.2, 0.0, 0.0, 0.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> us(0.0, g.total());
  std::uniform_real_distribution<double> ua(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    TraversingState q{us(rng), ua(rng), ua(rng), 0.5 * ua(rng)};
    const TraversingState dd = dual_traversing(dual_traversing(q, g), g);
    EXPECT_NEAR(dd.s_t, q.s_t, 1e-12);  // double reflection costs one ulp
    EXPECT_DOUBLE_EQ(dd.theta_f, q.theta_f);
    EXPECT_DOUBLE_EQ(dd.theta_r, q.theta_r);
    EXPECT_DOUBLE_EQ(dd.theta_t, q.theta_t);
  }
}

TEST(ComCoordinate, ComAtTrackFront) {
  RobotParams p = default_params();
  p.d_com = 0.0;
  p.gear_R = p.gear_r = 0.06;  // delta = 0
  const EffectiveGeometry g = effective_geometry(p, 0.0, 0.0, 0.0, 0.0, 0.0);
  EXPECT_NEAR(com_coordinate(p, g), g.lf, 1e-15);
}

TEST(ComCoordinate, ComAtTrackRear) {
  // d_com = l_t with delta = 0: s_com = lf_eff + lt_eff - l^i_r, derived by
  // folding the front extension into the effective track.
  RobotParams p = default_params();
  p.d_com = p.l_t;
  p.gear_R = p.gear_r = 0.06;
  const EffectiveGeometry g = effective_geometry(p, 0.4, 0.2, 0.0, 0.0, 0.0);
  EXPECT_NEAR(com_coordinate(p, g), g.lf + g.lt - g.li_r, 1e-12);
}

TEST(ComCoordinate, SymmetricDual) {
  RobotParams p = default_params();
  p.d_com = 0.5 * p.l_t;
  // Symmetric flipper angles make the robot mirror symmetric.
  const EffectiveGeometry g = effective_geometry(p, 0.3, 0.3, 0.0, 0.0, 0.0);
  const double s_com = com_coordinate(p, g);
  EXPECT_NEAR(g.total() - s_com, s_com, 1e-12);
}

TEST(ComCoordinate, MonotoneInDcom) {
  RobotParams p = default_params();
  const EffectiveGeometry g = effective_geometry(p, 0.1, 0.1, 0.0, 0.0, 0.0);
  double prev = -1.0;
  for (double d = 0.0; d <= p.l_t; d += 0.1) {
    p.d_com = d;
    EXPECT_GT(com_coordinate(p, g), prev);
    prev = com_coordinate(p, g);
  }
}

TEST(PoseFromDriving, FlatTerrain) {
  RobotParams p = default_params();
  const EffectiveGeometry g = effective_geometry(p, 0.0, 0.0, 0.0, 0.0, 0.0);
  TerrainLine line;  // flat through the origin
  const DrivingState q{1.0, 0.0, 0.0};
  const PlanarPose pose = pose_from_driving(q, line, g, p, 3.0);
  EXPECT_DOUBLE_EQ(pose.theta_t, 0.0);
  EXPECT_DOUBLE_EQ(pose.z, 0.0);
  // Body center sits half a physical track plus the front extension behind
  // the effective front end.
  EXPECT_NEAR(pose.x, 3.0 - 1.0 - g.li_f - 0.5 * p.l_t, 1e-15);
}

TEST(PoseFromDriving, InclinedTerrainFlushPitch) {
  RobotParams p = default_params();
  const double deg = 0.017453292519943295;
  const EffectiveGeometry g = effective_geometry(p, 0.0, 0.0, 15 * deg, 15 * deg, 15 * deg);
  TerrainLine line;
  line.alpha = 15 * deg;
  for (double s : {0.3, 0.9, 1.7}) {
    const PlanarPose pose = pose_from_driving({s, 0.0, 0.0}, line, g, p, 2.0);
    EXPECT_DOUBLE_EQ(pose.theta_t, 15 * deg);
  }
}

TEST(PoseFromDriving, BoundaryContinuityBetweenSegments) {
  // Two collinear ramp segments: poses computed in either parameterization
  // agree at the shared boundary.
  RobotParams p = default_params();
  const double deg = 0.017453292519943295;
  const double alpha = 10 * deg;
  const EffectiveGeometry g = effective_geometry(p, 0.0, 0.0, alpha, alpha, alpha);
  TerrainLine a;
  a.alpha = alpha;
  TerrainLine b;
  b.origin = a.point_at(2.0);
  b.alpha = alpha;
  // Same physical spot: support projection 3.0 on a equals 1.0 on b.
  const PlanarPose pa = pose_from_driving({0.7, 0.0, 0.0}, a, g, p, 3.0);
  const PlanarPose pb = pose_from_driving({0.7, 0.0, 0.0}, b, g, p, 1.0);
  EXPECT_NEAR(pa.x, pb.x, 1e-9);
  EXPECT_NEAR(pa.z, pb.z, 1e-9);
}

TEST(PoseFromDriving, OutOfSegmentRejected) {
  RobotParams p = default_params();
  const EffectiveGeometry g = effective_geometry(p, 0.0, 0.0, 0.0, 0.0, 0.0);
  TerrainLine line;
  EXPECT_THROW(pose_from_driving({50.0, 0.0, 0.0}, line, g, p, 1.0, 2.0), ModelError);
}

// Builds a feasible mid-traversal state (support under the track, rear tip
// on the lower line, front tip on the upper line) by direct construction.
struct FeasibleQ3 {
  TraversingState q;
  TerrainLine current, next;
  Vec2 support;
  EffectiveGeometry g;
};

FeasibleQ3 make_feasible_q3(const RobotParams& p, double h, double theta) {
  FeasibleQ3 f;
  f.current = TerrainLine{};
  f.support = Vec2(2.0, h);
  f.next = TerrainLine{f.support, 0.0};
  f.g = effective_geometry(p, 0.15, -0.2, theta, 0.0, 0.0);
  // Choose s_t, then solve theta_f (front tip on upper) and theta_r (rear
  // tip on lower) from the contact equations.
  const double s_t = f.g.lf + 0.6 * f.g.lt;
  const double thf = std::asin(-(s_t - f.g.lf) * std::sin(theta) / f.g.lf) - theta;
  const double thr = theta - std::asin((h - (f.g.lf + f.g.lt - s_t) * std::sin(theta)) / f.g.lr);
  f.q = TraversingState{s_t, thf, thr, theta};
  return f;
}

TEST(PoseFromTraversing, RoundTripRecoversCoordinates) {
  RobotParams p = default_params();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uh(0.15, 0.3);
  std::uniform_real_distribution<double> ut(0.1, 0.35);
  for (int i = 0; i < 50; ++i) {
    const FeasibleQ3 f = make_feasible_q3(p, uh(rng), ut(rng));
    const PlanarPose pose =
        pose_from_traversing(f.q, f.current, f.next, f.support, f.g, p, 1e-6);
    const TraversingState back = traversing_from_pose(pose, f.current, f.support, f.q.theta_f,
                                                      f.q.theta_r, f.g, p);
    EXPECT_NEAR(back.s_t, f.q.s_t, 1e-8);
    EXPECT_NEAR(back.theta_t, f.q.theta_t, 1e-12);
  }
}

TEST(PoseFromTraversing, NodeTwoPutsJointOnSupport) {
  RobotParams p = default_params();
  const double h = 0.2;
  const EffectiveGeometry g = effective_geometry(p, 0.3, -0.1, 0.2, 0.0, 0.0);
  // theta solving l_t sin(th) + l_r sin(th - thr) = h with thr chosen freely.
  const double thr = -0.1;
  double lo = 0.0, hi = 0.8;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g.lt * std::sin(mid) + g.lr * std::sin(mid - thr) < h ? lo : hi) = mid;
  }
  const double theta = 0.5 * (lo + hi);
  TerrainLine current;
  const Vec2 support(1.5, h);
  TerrainLine next{support, 0.0};
  const TraversingState q{g.lf, 0.3, thr, theta};
  const PlanarPose pose = pose_from_traversing(q, current, next, support, g, p, 1e-6);
  // The front joint must coincide with the support point.
  const Vec2 center(pose.x, pose.z);
  const Vec2 joint = center + (g.li_f + 0.5 * p.l_t) *
                                  Vec2(std::cos(pose.theta_t), std::sin(pose.theta_t));
  EXPECT_NEAR((joint - support).norm(), 0.0, 1e-9);
}

TEST(PoseFromTraversing, InfeasibleConfigurationRejected) {
  RobotParams p = default_params();
  const EffectiveGeometry g = effective_geometry(p, 0.2, 0.2, 0.3, 0.0, 0.0);
  TerrainLine current;
  const Vec2 support(2.0, 0.3);
  TerrainLine next{support, 0.0};
  // Arbitrary pitch with no trailing contact anywhere near the lines.
  const TraversingState q{g.lf + 0.3, 0.2, 0.2, 0.45};
  EXPECT_THROW(pose_from_traversing(q, current, next, support, g, p, 1e-6), ModelError);
}

TEST(PoseFromTraversing, DegenerateHeightTendsToDrivingPose) {
  RobotParams p = default_params();
  const EffectiveGeometry g = effective_geometry(p, 0.0, 0.0, 0.0, 0.0, 0.0);
  TerrainLine line;
  double prev_gap = 1e9;
  for (double h : {0.08, 0.04, 0.02, 0.01, 0.005}) {
    const Vec2 support(2.0, h);
    TerrainLine next{support, 0.0};
    // Flush state with the support at the front joint.
    const TraversingState q{g.lf, std::asin(h / g.lf), 0.0, 0.0};
    const PlanarPose tp = pose_from_traversing(q, line, next, support, g, p, 1e-6);
    const PlanarPose dp = pose_from_driving({0.0, 0.0, 0.0}, line, g, p, 2.0);
    const double gap = std::hypot(tp.x - dp.x, tp.z - dp.z);
    EXPECT_LT(gap, prev_gap + 1e-12);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 0.006);
}

TEST(RobotParams, InvariantsEnforced) {
  RobotParams p = default_params();
  p.gear_r = 0.2;  // r > R
  EXPECT_THROW(p.validate(), ModelError);
  p = default_params();
  p.d_com = 2.0;
  EXPECT_THROW(p.validate(), ModelError);
  p = default_params();
  p.theta_l = 0.1;
  EXPECT_THROW(p.validate(), ModelError);
}

TEST(RobotParams, LoadsFromConfig) {
  const auto cfg = KeyValueConfig::from_string(
      "l0 = 0.4\nl_t = 0.8\nR = 0.12\nr = 0.06\nd_com = 0.4\n"
      "theta_u = 1.3963\ntheta_l = -1.3963\nv_u = 0.5\nomega_l = -1\nomega_u = 1\n");
  const RobotParams p = RobotParams::from_config(cfg);
  EXPECT_DOUBLE_EQ(p.l0, 0.4);
  EXPECT_DOUBLE_EQ(p.gear_R, 0.12);
}

}  // namespace
}  // namespace ttp
