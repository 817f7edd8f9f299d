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

#include "ttp/sequence.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace ttp {
namespace {

constexpr double kDeg = 0.017453292519943295;

TraversalContext flat_context(double h, double alpha = 0.0) {
  TraversalContext c;
  c.lf = 0.45;
  c.lr = 0.42;
  c.lt = 0.95;
  c.s_com = c.lf + 0.45;
  c.alpha = alpha;
  c.h = h;
  c.theta_u = 80 * kDeg;
  c.theta_l = -80 * kDeg;
  c.tht_lower = alpha - 45 * kDeg;
  c.tht_upper = alpha + 45 * kDeg;
  return c;
}

TEST(AscendingNodes, Q1HandSolved) {
  // (l_f - s_t) sin(theta_f) = h with l_f = 0.4, s_t = 0.1, h = 0.15:
  // theta_f = 30 deg.
  TraversalContext c = flat_context(0.15);
  c.lf = 0.4;
  const NodeConstraintSet set = ascending_node_constraints(1, c);
  const Eigen::Vector4d x(0.1, 30 * kDeg, 0.1, 0.0);
  EXPECT_NEAR(set.equalities[0](x), 0.0, 1e-12);
  EXPECT_NEAR(set.max_equality_violation(x), 0.0, 1e-12);
  EXPECT_LE(set.max_inequality_violation(x), 0.0);
}

TEST(AscendingNodes, Q2FlatIdentity) {
  const TraversalContext c = flat_context(0.0);
  const NodeConstraintSet set = ascending_node_constraints(2, c);
  const Eigen::Vector4d x(c.lf, 0.0, 0.0, 0.0);
  EXPECT_NEAR(set.max_equality_violation(x), 0.0, 1e-12);
}

TEST(AscendingNodes, Q1RearFlipperBounds) {
  const TraversalContext c = flat_context(0.2);
  const NodeConstraintSet set = ascending_node_constraints(1, c);
  Eigen::Vector4d x(0.1, 0.5, -0.05, 0.0);
  EXPECT_NEAR(set.max_inequality_violation(x), 0.05, 1e-12);
  x[2] = c.theta_u + 0.01;
  EXPECT_NEAR(set.max_inequality_violation(x), 0.01, 1e-12);
}

// Grid search plus channel-wise solves find a feasible Q3 state; both
// equalities must vanish there.
TEST(AscendingNodes, Q3GridSearchOracle) {
  const TraversalContext c = flat_context(0.25);
  const NodeConstraintSet set = ascending_node_constraints(3, c);
  const double s = 0.5 * (c.lf + c.s_com);

  double best = 1e9;
  Eigen::Vector4d best_x(s, 0, 0, 0);
  for (double tht = 0.02; tht < 0.6; tht += 0.002) {
    const double arg_f = -(s - c.lf) * std::sin(tht - c.alpha) / c.lf;
    const double arg_r = (c.h - (c.lf + c.lt - s) * std::sin(tht)) / c.lr;
    if (std::abs(arg_f) > 1.0 || std::abs(arg_r) > 1.0) continue;
    const double thf = std::asin(arg_f) - tht + c.alpha;
    const double thr = tht - std::asin(arg_r);
    const Eigen::Vector4d x(s, thf, thr, tht);
    const double viol = std::max(set.max_equality_violation(x),
                                 set.max_inequality_violation(x));
    if (viol < best) {
      best = viol;
      best_x = x;
    }
  }
  ASSERT_LT(best, 1e-6);
  EXPECT_NEAR(set.equalities[0](best_x), 0.0, 1e-6);
  EXPECT_NEAR(set.equalities[1](best_x), 0.0, 1e-6);
}

TEST(AscendingNodes, RangesMatchTable) {
  const TraversalContext c = flat_context(0.2);
  const NodeConstraintSet q1 = ascending_node_constraints(1, c);
  EXPECT_NEAR(q1.s_lower, c.eps, 1e-15);
  EXPECT_NEAR(q1.s_upper, c.lf - c.eps, 1e-15);
  const NodeConstraintSet q2 = ascending_node_constraints(2, c);
  EXPECT_TRUE(q2.s_pinned);
  EXPECT_DOUBLE_EQ(q2.s_pin, c.lf);
  const NodeConstraintSet q3 = ascending_node_constraints(3, c);
  EXPECT_NEAR(q3.s_upper, c.s_com - c.eps, 1e-15);
  const NodeConstraintSet q4 = ascending_node_constraints(4, c);
  EXPECT_DOUBLE_EQ(q4.s_lower, c.s_com);
  EXPECT_NEAR(q4.s_upper, c.lf + c.lt - c.eps, 1e-15);
  EXPECT_THROW(ascending_node_constraints(5, c), ModelError);
  EXPECT_THROW(ascending_node_constraints(0, c), ModelError);
}

TEST(AscendingNodes, SequenceOrderOfRanges) {
  // s_t ranges of Q1..Q4 are ordered and non-overlapping.
  const TraversalContext c = flat_context(0.3);
  double prev_hi = 0.0;
  for (int i = 1; i <= 4; ++i) {
    const NodeConstraintSet set = ascending_node_constraints(i, c);
    const double lo = set.s_pinned ? set.s_pin : set.s_lower;
    const double hi = set.s_pinned ? set.s_pin : set.s_upper;
    EXPECT_GE(lo + 2 * c.eps, prev_hi) << "node " << i;
    prev_hi = hi;
  }
}

TEST(AscendingNodes, QFourAllowsRearLift) {
  // Past the COM point the rear-contact relation is an inequality: a lifted
  // rear flipper (tip above the lower terrain) is feasible.
  const TraversalContext c = flat_context(0.4);
  const NodeConstraintSet q4 = ascending_node_constraints(4, c);
  EXPECT_EQ(q4.equalities.size(), 1u);  // front contact only
  const double s = c.lf + c.lt - 0.05;
  const double tht = 0.05;
  const double thf = std::asin(-(s - c.lf) * std::sin(tht) / c.lf) - tht;
  const Eigen::Vector4d x(s, thf, tht, tht);
  EXPECT_NEAR(q4.equalities[0](x), 0.0, 1e-12);
  EXPECT_LE(q4.max_inequality_violation(x), 1e-9);
}

TEST(DescendingNodes, DualEqualsAscAtDualPoint) {
  // Q1_des residuals equal Q4_asc residuals at the dual point with dual
  // parameters, to machine precision.
  const TraversalContext c = flat_context(-0.3);
  const NodeConstraintSet des1 = descending_node_constraints(1, c);
  const NodeConstraintSet asc4 = ascending_node_constraints(4, c.dual());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> us(c.lf + 0.01, c.s_com - 0.01);
  std::uniform_real_distribution<double> ua(-0.6, 0.6);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector4d x(us(rng), ua(rng), ua(rng), ua(rng));
    const Eigen::Vector4d xd = descending_dual_state(x, c);
    ASSERT_EQ(des1.equalities.size(), asc4.equalities.size());
    for (size_t k = 0; k < des1.equalities.size(); ++k)
      EXPECT_DOUBLE_EQ(des1.equalities[k](x), asc4.equalities[k](xd));
    for (size_t k = 0; k < des1.inequalities.size(); ++k)
      EXPECT_DOUBLE_EQ(des1.inequalities[k](x), asc4.inequalities[k](xd));
  }
}

TEST(DescendingNodes, DualRangesMirror) {
  const TraversalContext c = flat_context(-0.25);
  const NodeConstraintSet des3 = descending_node_constraints(3, c);
  // Q3_des is the dual of Q2_asc: s pinned at l_sum - l_f* = lf + lt.
  EXPECT_TRUE(des3.s_pinned);
  EXPECT_NEAR(des3.s_pin, c.lf + c.lt, 1e-12);
  const NodeConstraintSet des4 = descending_node_constraints(4, c);
  EXPECT_NEAR(des4.s_lower, c.lf + c.lt + c.eps, 1e-12);
  EXPECT_NEAR(des4.s_upper, c.l_sum() - c.eps, 1e-12);
}

TEST(DescendingNodes, FlatStepReducesToQ1Form) {
  // i = 4 descending: (s_t - l_f - l_t) sin(theta_r) = -h, the mirrored Q1
  // contact on the rear flipper.
  const TraversalContext c = flat_context(-0.2);
  const NodeConstraintSet des4 = descending_node_constraints(4, c);
  const double s = c.lf + c.lt + 0.3;
  const double thr = std::asin(0.2 / 0.3);
  Eigen::Vector4d x(s, 0.0, thr, c.alpha);
  double viol = 0.0;
  for (const auto& r : des4.equalities) viol = std::max(viol, std::abs(r(x)));
  EXPECT_NEAR(viol, 0.0, 1e-12);
}

TEST(DescendingNodes, FeasibleDualOfAscendingState) {
  // A feasible ascending Q2 state maps to a feasible descending Q3 state on
  // the mirrored terrain pair.
  const TraversalContext asc_ctx = flat_context(0.25);
  const NodeConstraintSet asc2 = ascending_node_constraints(2, asc_ctx);
  const double thr = -0.1;
  double lo = 0.0, hi = 0.7;
  for (int i = 0; i < 70; ++i) {
    const double mid = 0.5 * (lo + hi);
    (asc_ctx.lt * std::sin(mid) + asc_ctx.lr * std::sin(mid - thr) < asc_ctx.h ? lo : hi) = mid;
  }
  const double tht = 0.5 * (lo + hi);
  const Eigen::Vector4d x_asc(asc_ctx.lf, 0.3, thr, tht);
  ASSERT_NEAR(asc2.max_equality_violation(x_asc), 0.0, 1e-9);

  const TraversalContext des_ctx = asc_ctx.dual();
  const NodeConstraintSet des3 = descending_node_constraints(3, des_ctx);
  const Eigen::Vector4d x_des = descending_dual_state(x_asc, des_ctx);
  EXPECT_NEAR(des3.max_equality_violation(x_des), 0.0, 1e-9);
}

TEST(ClassifyTraversal, StepSigns) {
  EXPECT_TRUE(classify_traversal(0.4, 0.0).traverse);
  EXPECT_EQ(classify_traversal(0.4, 0.0).direction, Direction::kAscending);
  EXPECT_EQ(classify_traversal(-0.2, 0.0).direction, Direction::kDescending);
  EXPECT_DOUBLE_EQ(classify_traversal(-0.2, 0.0).h_eff, -0.2);
}

TEST(ClassifyTraversal, ZeroHeightCases) {
  const TraversalDecision down = classify_traversal(0.0, -10 * kDeg);
  EXPECT_TRUE(down.traverse);
  EXPECT_EQ(down.direction, Direction::kDescending);
  EXPECT_DOUBLE_EQ(down.h_eff, 0.0);

  const TraversalDecision up = classify_traversal(0.0, 10 * kDeg, 0.01);
  EXPECT_TRUE(up.traverse);
  EXPECT_EQ(up.direction, Direction::kAscending);
  EXPECT_DOUBLE_EQ(up.h_eff, 0.01);

  EXPECT_FALSE(classify_traversal(0.0, 0.0).traverse);
}

TEST(DrivingConstraints, BoundsOnly) {
  RobotParams p;
  const NodeConstraintSet set = driving_constraints(p);
  EXPECT_TRUE(set.equalities.empty());
  EXPECT_LE(set.max_inequality_violation(Eigen::Vector4d(1.0, 0.0, 0.0, 0.0)), 0.0);
  EXPECT_NEAR(set.max_inequality_violation(Eigen::Vector4d(0, p.theta_u + 0.01, 0, 0)), 0.01,
              1e-12);
  EXPECT_NEAR(set.max_inequality_violation(Eigen::Vector4d(0, 0, -0.05, 0)), 0.05, 1e-12);
}

TEST(Residuals, GradientsMatchFiniteDifferences) {
  const TraversalContext c = flat_context(0.3, 5 * kDeg);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int node = 1; node <= 4; ++node) {
    for (Direction dir : {Direction::kAscending, Direction::kDescending}) {
      TraversalContext ctx = c;
      if (dir == Direction::kDescending) ctx.h = -0.3;
      const NodeConstraintSet set = node_constraints(node, dir, ctx);
      for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Vector4d x(c.lf + 0.5 + 0.2 * u(rng), u(rng), u(rng), u(rng));
        auto all = set.equalities;
        all.insert(all.end(), set.inequalities.begin(), set.inequalities.end());
        for (const auto& r : all) {
          Eigen::Vector4d g;
          r(x, &g);
          for (int k = 0; k < 4; ++k) {
            Eigen::Vector4d xp = x, xm = x;
            const double h = 1e-6;
            xp[k] += h;
            xm[k] -= h;
            const double fd = (r(xp) - r(xm)) / (2 * h);
            EXPECT_NEAR(g[k], fd, 1e-6) << "node " << node << " residual " << r.name;
          }
        }
      }
    }
  }
}

TEST(Q2Pinning, ForcesExactCoordinate) {
  const TraversalContext c = flat_context(0.2);
  const NodeConstraintSet q2 = ascending_node_constraints(2, c);
  Eigen::Vector4d off(c.lf + 0.01, 0.0, 0.0, 0.1);
  EXPECT_GE(q2.max_equality_violation(off), 0.01 - 1e-12);
}

TEST(NodeBoundaries, SharedEqualitiesContinuous) {
  // Q3 and Q4 share the front-contact equality; the Q3 rear equality and
  // the Q4 rear inequality are the same expression.
  const TraversalContext c = flat_context(0.3);
  const NodeConstraintSet q3 = ascending_node_constraints(3, c);
  const NodeConstraintSet q4 = ascending_node_constraints(4, c);
  const Eigen::Vector4d x(c.s_com, 0.1, -0.2, 0.25);
  EXPECT_DOUBLE_EQ(q3.equalities[0](x), q4.equalities[0](x));
  EXPECT_DOUBLE_EQ(q3.equalities[1](x), q4.inequalities[0](x));
}

}  // namespace
}  // namespace ttp
