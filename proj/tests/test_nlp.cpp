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

#include "ttp/nlp.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace ttp {
namespace {

NlpProblem quadratic_1d() {
  // min (x - 3)^2 s.t. x <= 2 (as a box bound).
  NlpProblem p;
  p.num_vars = 1;
  p.lower = Eigen::VectorXd::Constant(1, -10.0);
  p.upper = Eigen::VectorXd::Constant(1, 2.0);
  p.x0 = Eigen::VectorXd::Zero(1);
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) (*g)[0] = 2.0 * (x[0] - 3.0);
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  return p;
}

TEST(Solve, ActiveBound) {
  const Solution s = solve(quadratic_1d());
  EXPECT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.x[0], 2.0, 1e-8);
}

TEST(Solve, EqualityConstrainedSymmetric) {
  // min x^2 + y^2 s.t. x + y = 1 -> (0.5, 0.5).
  NlpProblem p;
  p.num_vars = 2;
  p.num_eq = 1;
  p.lower = Eigen::VectorXd::Constant(2, -10.0);
  p.upper = Eigen::VectorXd::Constant(2, 10.0);
  p.x0 = Eigen::VectorXd::Zero(2);
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = 2.0 * x;
    return x.squaredNorm();
  };
  p.eq = [](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(1);
    r[0] = x[0] + x[1] - 1.0;
    if (J) {
      J->setOnes(1, 2);
    }
  };
  const Solution s = solve(p);
  EXPECT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.x[0], 0.5, 1e-6);
  EXPECT_NEAR(s.x[1], 0.5, 1e-6);
  EXPECT_LE(s.max_eq_violation, 1e-8);
}

// ---------------------------------------------------------------------------
// Random convex QPs vs an exhaustive active-set oracle.
//   min 1/2 x'Qx + c'x  s.t.  A x = b,  G x <= d
// The oracle enumerates all active subsets of inequalities, solves the KKT
// system, and keeps feasible points with nonnegative multipliers.
// ---------------------------------------------------------------------------

struct Qp {
  Eigen::MatrixXd Q, A, G;
  Eigen::VectorXd c, b, d;
};

Eigen::VectorXd qp_oracle(const Qp& qp, bool* found) {
  const int n = qp.Q.rows();
  const int me = qp.A.rows();
  const int mi = qp.G.rows();
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  *found = false;
  for (int mask = 0; mask < (1 << mi); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < mi; ++i)
      if (mask & (1 << i)) act.push_back(i);
    const int ma = static_cast<int>(act.size());
    Eigen::MatrixXd K(n + me + ma, n + me + ma);
    K.setZero();
    K.topLeftCorner(n, n) = qp.Q;
    Eigen::VectorXd rhs(n + me + ma);
    rhs.head(n) = -qp.c;
    if (me > 0) {
      K.block(0, n, n, me) = qp.A.transpose();
      K.block(n, 0, me, n) = qp.A;
      rhs.segment(n, me) = qp.b;
    }
    for (int k = 0; k < ma; ++k) {
      K.block(0, n + me + k, n, 1) = qp.G.row(act[k]).transpose();
      K.block(n + me + k, 0, 1, n) = qp.G.row(act[k]);
      rhs[n + me + k] = qp.d[act[k]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    bool ok = true;
    for (int k = 0; k < ma && ok; ++k)
      if (sol[n + me + k] < -1e-9) ok = false;  // multiplier sign
    for (int i = 0; i < mi && ok; ++i)
      if (qp.G.row(i).dot(x) > qp.d[i] + 1e-9) ok = false;
    if (!ok) continue;
    const double f = 0.5 * x.dot(qp.Q * x) + qp.c.dot(x);
    if (f < best - 1e-12) {
      best = f;
      best_x = x;
      *found = true;
    }
  }
  return best_x;
}

NlpProblem qp_problem(const Qp& qp) {
  NlpProblem p;
  const int n = qp.Q.rows();
  p.num_vars = n;
  p.num_eq = static_cast<int>(qp.A.rows());
  p.num_ineq = static_cast<int>(qp.G.rows());
  p.lower = Eigen::VectorXd::Constant(n, -100.0);
  p.upper = Eigen::VectorXd::Constant(n, 100.0);
  p.x0 = Eigen::VectorXd::Zero(n);
  p.objective = [qp](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = qp.Q * x + qp.c;
    return 0.5 * x.dot(qp.Q * x) + qp.c.dot(x);
  };
  if (p.num_eq > 0)
    p.eq = [qp](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
      r = qp.A * x - qp.b;
      if (J) *J = qp.A;
    };
  if (p.num_ineq > 0)
    p.ineq = [qp](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
      r = qp.G * x - qp.d;
      if (J) *J = qp.G;
    };
  return p;
}

TEST(Solve, RandomConvexQpsMatchActiveSetOracle) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);  // up to 7 vars
    const int me = static_cast<int>(rng() % 2);
    const int mi = 1 + static_cast<int>(rng() % 5);
    Qp qp;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) M(i, k) = gauss(rng);
    qp.Q = M.transpose() * M + 0.5 * Eigen::MatrixXd::Identity(n, n);
    qp.c.resize(n);
    for (int i = 0; i < n; ++i) qp.c[i] = gauss(rng);
    qp.A.resize(me, n);
    qp.b.resize(me);
    for (int i = 0; i < me; ++i) {
      for (int k = 0; k < n; ++k) qp.A(i, k) = gauss(rng);
      qp.b[i] = 0.3 * gauss(rng);
    }
    qp.G.resize(mi, n);
    qp.d.resize(mi);
    for (int i = 0; i < mi; ++i) {
      for (int k = 0; k < n; ++k) qp.G(i, k) = gauss(rng);
      qp.d[i] = std::abs(gauss(rng)) + 0.2;  // origin strictly feasible
    }
    bool found = false;
    const Eigen::VectorXd x_ref = qp_oracle(qp, &found);
    if (!found) continue;
    ++solved;
    const Solution s = solve(qp_problem(qp));
    ASSERT_EQ(s.status, SolveStatus::kOptimal) << "trial " << trial;
    for (int i = 0; i < n; ++i)
      EXPECT_NEAR(s.x[i], x_ref[i], 1e-6) << "trial " << trial << " var " << i;
  }
  EXPECT_GE(solved, 30);
}

TEST(Solve, DeterministicAcrossRepeats) {
  Qp qp;
  qp.Q = Eigen::Matrix2d::Identity();
  qp.c = Eigen::Vector2d(-1.0, -2.0);
  qp.A.resize(0, 2);
  qp.b.resize(0);
  qp.G.resize(1, 2);
  qp.G << 1.0, 1.0;
  qp.d = Eigen::VectorXd::Constant(1, 1.0);
  const Solution a = solve(qp_problem(qp));
  const Solution b = solve(qp_problem(qp));
  ASSERT_EQ(a.x.size(), b.x.size());
  for (int i = 0; i < a.x.size(); ++i) EXPECT_EQ(a.x[i], b.x[i]);  // bitwise
  EXPECT_EQ(a.inner_iterations, b.inner_iterations);
}

TEST(Solve, ViolationHonesty) {
  // Reported violations equal an independent re-evaluation at x*.
  Qp qp;
  qp.Q = Eigen::Matrix2d::Identity();
  qp.c = Eigen::Vector2d(1.0, 1.0);
  qp.A.resize(1, 2);
  qp.A << 1.0, -1.0;
  qp.b = Eigen::VectorXd::Constant(1, 0.3);
  qp.G.resize(1, 2);
  qp.G << 1.0, 0.0;
  qp.d = Eigen::VectorXd::Constant(1, 5.0);
  const NlpProblem p = qp_problem(qp);
  const Solution s = solve(p);
  Eigen::VectorXd r;
  p.eq(s.x, r, nullptr);
  EXPECT_DOUBLE_EQ(s.max_eq_violation, r.cwiseAbs().maxCoeff());
  p.ineq(s.x, r, nullptr);
  EXPECT_DOUBLE_EQ(s.max_ineq_violation, std::max(0.0, r.maxCoeff()));
}

TEST(Solve, InfeasibleProblemReported) {
  // x = -5 with box x >= 0 cannot be satisfied.
  NlpProblem p;
  p.num_vars = 1;
  p.num_eq = 1;
  p.lower = Eigen::VectorXd::Zero(1);
  p.upper = Eigen::VectorXd::Constant(1, 10.0);
  p.x0 = Eigen::VectorXd::Constant(1, 1.0);
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) (*g)[0] = 0.0;
    return 0.0;
  };
  p.eq = [](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(1);
    r[0] = x[0] + 5.0;
    if (J) J->setOnes(1, 1);
  };
  const Solution s = solve(p);
  EXPECT_EQ(s.status, SolveStatus::kInfeasible);
  EXPECT_GT(s.max_eq_violation, 1.0);
}

TEST(Solve, MeritMonotoneWithinInnerIterations) {
  // The logged merit is nonincreasing across accepted iterates of each
  // penalty stage.
  const std::string log_path = "/tmp/ttp_nlp_merit_log.csv";
  Qp qp;
  qp.Q = Eigen::Matrix3d::Identity() * 2.0;
  qp.c = Eigen::Vector3d(1.0, -4.0, 0.5);
  qp.A.resize(1, 3);
  qp.A << 1.0, 1.0, 1.0;
  qp.b = Eigen::VectorXd::Constant(1, 1.0);
  qp.G.resize(2, 3);
  qp.G << 1.0, 0.0, 0.0, 0.0, -1.0, 0.0;
  qp.d.resize(2);
  qp.d << 0.4, 0.1;
  SolveOptions opt;
  opt.log_csv = log_path;
  const Solution s = solve(qp_problem(qp), opt);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  const CsvTable log = read_csv(log_path);
  const int cm = log.column("merit");
  const int cp = log.column("penalty");
  for (size_t i = 1; i < log.rows.size(); ++i) {
    if (log.rows[i][cp] == log.rows[i - 1][cp])
      EXPECT_LE(log.rows[i][cm], log.rows[i - 1][cm] + 1e-12);
  }
}

TEST(CheckGradients, QuadraticNearlyExact) {
  const NlpProblem p = quadratic_1d();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.7);
  EXPECT_LE(check_gradients(p, x, 1e-6), 1e-9);
}

TEST(CheckGradients, CorruptedGradientDetected) {
  NlpProblem p = quadratic_1d();
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) (*g)[0] = 2.0 * (x[0] - 3.0) + 0.5;  // injected fault
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.7);
  EXPECT_GE(check_gradients(p, x, 1e-6), 1e-2);
}

TEST(CheckGradients, JacobiansChecked) {
  Qp qp;
  qp.Q = Eigen::Matrix2d::Identity();
  qp.c = Eigen::Vector2d(0.0, 0.0);
  qp.A.resize(1, 2);
  qp.A << 2.0, -1.0;
  qp.b = Eigen::VectorXd::Zero(1);
  qp.G.resize(1, 2);
  qp.G << 0.5, 0.5;
  qp.d = Eigen::VectorXd::Ones(1);
  const NlpProblem p = qp_problem(qp);
  EXPECT_LE(check_gradients(p, Eigen::Vector2d(0.1, -0.2), 1e-6), 1e-9);
}

TEST(Solve, WarmStartAccepted) {
  NlpProblem p = quadratic_1d();
  const Solution cold = solve(p);
  SolveOptions opt;
  opt.warm_start = &cold;
  const Solution warm = solve(p, opt);
  EXPECT_EQ(warm.status, SolveStatus::kOptimal);
  EXPECT_NEAR(warm.x[0], cold.x[0], 1e-10);
  EXPECT_LE(warm.inner_iterations, cold.inner_iterations);
}

}  // namespace
}  // namespace ttp
