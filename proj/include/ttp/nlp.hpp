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

#ifndef TTP_NLP_HPP_
#define TTP_NLP_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ttp/io.hpp"

namespace ttp {

class NlpError : public std::runtime_error {
 public:
  explicit NlpError(const std::string& what) : std::runtime_error(what) {}
};

// Smooth constrained program
//   min f(x)  s.t.  h(x) = 0,  g(x) <= 0,  lb <= x <= ub.
// Evaluators must return analytic first derivatives; `scale` holds the
// characteristic magnitude of each variable used to condition the solve.
struct NlpProblem {
  int num_vars = 0;
  int num_eq = 0;
  int num_ineq = 0;
  Eigen::VectorXd lower, upper, x0, scale;
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd* grad)> objective;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd& r, Eigen::MatrixXd* jac)> eq;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd& r, Eigen::MatrixXd* jac)> ineq;

  void validate() const {
    if (num_vars <= 0) throw NlpError("empty problem");
    if (lower.size() != num_vars || upper.size() != num_vars || x0.size() != num_vars)
      throw NlpError("bound/initial dimensions inconsistent");
    if (!objective) throw NlpError("missing objective");
    if (num_eq > 0 && !eq) throw NlpError("missing equality evaluator");
    if (num_ineq > 0 && !ineq) throw NlpError("missing inequality evaluator");
    for (int i = 0; i < num_vars; ++i)
      if (x0[i] < lower[i] - 1e-12 || x0[i] > upper[i] + 1e-12)
        throw NlpError("initial point outside box at index " + std::to_string(i));
  }
};

enum class SolveStatus { kOptimal, kMaxIter, kInfeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

struct Solution {
  Eigen::VectorXd x;
  SolveStatus status = SolveStatus::kMaxIter;
  double max_eq_violation = 0.0;
  double max_ineq_violation = 0.0;
  double objective = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double wall_time_ms = 0.0;
  // Multipliers for warm starts.
  Eigen::VectorXd lambda_eq, lambda_ineq;
};

struct SolveOptions {
  double tol_con = 1e-8;    // constraint violation target
  double tol_kkt = 1e-6;    // projected-gradient stationarity target
  int max_outer = 30;
  int max_inner = 200;
  double mu0 = 10.0;
  double mu_growth = 10.0;
  double mu_max = 1e8;
  double infeasible_viol = 1e-3;  // residual level classified as infeasible at exit
  std::string log_csv;            // per-iteration merit log, empty = off
  const Solution* warm_start = nullptr;
};

namespace detail {

inline Eigen::VectorXd clip(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

struct AlEvaluator {
  const NlpProblem& p;
  Eigen::VectorXd lambda_eq, lambda_ineq;
  double mu = 10.0;

  // Buffers reused across evaluations.
  Eigen::VectorXd h, g;
  Eigen::MatrixXd Jh, Jg;

  explicit AlEvaluator(const NlpProblem& prob) : p(prob) {
    lambda_eq = Eigen::VectorXd::Zero(p.num_eq);
    lambda_ineq = Eigen::VectorXd::Zero(p.num_ineq);
  }

  double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    double value = p.objective(x, grad);
    if (!std::isfinite(value)) throw NlpError("objective evaluated to non-finite value");
    if (p.num_eq > 0) {
      p.eq(x, h, grad ? &Jh : nullptr);
      for (int i = 0; i < p.num_eq; ++i) {
        value += lambda_eq[i] * h[i] + 0.5 * mu * h[i] * h[i];
      }
      if (grad) grad->noalias() += Jh.transpose() * (lambda_eq + mu * h);
    }
    if (p.num_ineq > 0) {
      p.ineq(x, g, grad ? &Jg : nullptr);
      for (int i = 0; i < p.num_ineq; ++i) {
        const double t = lambda_ineq[i] + mu * g[i];
        if (t > 0.0) {
          value += (t * t - lambda_ineq[i] * lambda_ineq[i]) / (2.0 * mu);
          if (grad) grad->noalias() += t * Jg.row(i).transpose();
        } else {
          value += -lambda_ineq[i] * lambda_ineq[i] / (2.0 * mu);
        }
      }
    }
    if (!std::isfinite(value)) throw NlpError("merit evaluated to non-finite value");
    return value;
  }

  void residuals(const Eigen::VectorXd& x, double* eq_viol, double* ineq_viol) {
    *eq_viol = 0.0;
    *ineq_viol = 0.0;
    if (p.num_eq > 0) {
      p.eq(x, h, nullptr);
      *eq_viol = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
    }
    if (p.num_ineq > 0) {
      p.ineq(x, g, nullptr);
      *ineq_viol = g.size() ? std::max(0.0, g.maxCoeff()) : 0.0;
    }
  }
};

}  // namespace detail

// Augmented Lagrangian solver: outer multiplier/penalty updates around a
// projected quasi-Newton (dense damped BFGS) inner loop with Armijo
// backtracking onto the box. Deterministic for identical inputs/options.
inline Solution solve(const NlpProblem& prob, const SolveOptions& opt = {}) {
  prob.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int n = prob.num_vars;

  // Work in scaled variables y = x / scale.
  Eigen::VectorXd scale = prob.scale.size() == n ? prob.scale : Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i)
    if (!(scale[i] > 0.0) || !std::isfinite(scale[i])) scale[i] = 1.0;

  detail::AlEvaluator al(prob);
  al.mu = opt.mu0;
  if (opt.warm_start && opt.warm_start->lambda_eq.size() == prob.num_eq &&
      opt.warm_start->lambda_ineq.size() == prob.num_ineq) {
    al.lambda_eq = opt.warm_start->lambda_eq;
    al.lambda_ineq = opt.warm_start->lambda_ineq;
  }

  Eigen::VectorXd x = detail::clip(prob.x0, prob.lower, prob.upper);
  if (opt.warm_start && opt.warm_start->x.size() == n)
    x = detail::clip(opt.warm_start->x, prob.lower, prob.upper);

  CsvWriter log({"iter", "merit", "penalty", "max_violation"});
  const bool logging = !opt.log_csv.empty();
  int total_inner = 0;
  int outer = 0;
  double eq_viol = 0.0, ineq_viol = 0.0;
  double kkt_norm = std::numeric_limits<double>::infinity();

  const Eigen::VectorXd lo = prob.lower, hi = prob.upper;
  for (outer = 0; outer < opt.max_outer; ++outer) {
    // Inner: minimize the AL merit over the box.
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);  // inverse-Hessian approx (scaled space)
    Eigen::VectorXd grad(n), grad_scaled(n);
    double merit = al.eval(x, &grad);
    grad_scaled = grad.cwiseProduct(scale);

    // Tighter inner tolerance as the penalty grows.
    const double inner_tol = std::max(opt.tol_kkt * 0.1, 1e-10);
    int inner = 0;
    for (inner = 0; inner < opt.max_inner; ++inner) {
      // Projected-gradient stationarity in scaled space.
      Eigen::VectorXd step_test = detail::clip(x - grad_scaled.cwiseProduct(scale), lo, hi) - x;
      kkt_norm = step_test.cwiseQuotient(scale).cwiseAbs().maxCoeff();
      if (kkt_norm <= inner_tol) break;

      Eigen::VectorXd dir_scaled = -(H * grad_scaled);
      if (dir_scaled.dot(grad_scaled) > -1e-14 * dir_scaled.norm() * grad_scaled.norm()) {
        H.setIdentity();
        dir_scaled = -grad_scaled;
      }
      const Eigen::VectorXd dir = dir_scaled.cwiseProduct(scale);

      // Armijo backtracking along the projected path.
      double alpha = 1.0;
      const double c1 = 1e-4;
      double merit_new = merit;
      Eigen::VectorXd x_new = x;
      bool accepted = false;
      for (int ls = 0; ls < 50; ++ls) {
        x_new = detail::clip(x + alpha * dir, lo, hi);
        const Eigen::VectorXd dx = x_new - x;
        if (dx.cwiseQuotient(scale).cwiseAbs().maxCoeff() < 1e-14) break;
        merit_new = al.eval(x_new, nullptr);
        const double slope = grad.dot(dx);
        if (merit_new <= merit + c1 * std::min(slope, 0.0)) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;

      Eigen::VectorXd grad_new(n);
      const double merit_check = al.eval(x_new, &grad_new);
      (void)merit_check;
      Eigen::VectorXd grad_new_scaled = grad_new.cwiseProduct(scale);

      // Damped BFGS update on the inverse approximation.
      const Eigen::VectorXd s = (x_new - x).cwiseQuotient(scale);
      const Eigen::VectorXd yv = grad_new_scaled - grad_scaled;
      const double sy = s.dot(yv);
      if (sy > 1e-12 * s.norm() * yv.norm()) {
        const double rho = 1.0 / sy;
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) +
            rho * s * s.transpose();
      }
      x = x_new;
      merit = merit_new;
      grad = grad_new;
      grad_scaled = grad_new_scaled;
      ++total_inner;
      if (logging) {
        double ev, iv;
        al.residuals(x, &ev, &iv);
        log.add_row({static_cast<double>(total_inner), merit, al.mu, std::max(ev, iv)});
      }
    }

    al.residuals(x, &eq_viol, &ineq_viol);
    const double viol = std::max(eq_viol, ineq_viol);
    if (viol <= opt.tol_con && kkt_norm <= opt.tol_kkt) {
      ++outer;
      break;
    }

    // First-order multiplier update and penalty growth per outer iteration.
    if (prob.num_eq > 0) al.lambda_eq += al.mu * al.h;
    if (prob.num_ineq > 0)
      al.lambda_ineq = (al.lambda_ineq + al.mu * al.g).cwiseMax(0.0);
    al.mu = std::min(al.mu * opt.mu_growth, opt.mu_max);
  }

  Solution sol;
  sol.x = x;
  sol.outer_iterations = outer;
  sol.inner_iterations = total_inner;
  sol.lambda_eq = al.lambda_eq;
  sol.lambda_ineq = al.lambda_ineq;

  // Violations are recomputed from the evaluators, never trusted from
  // solver internals.
  al.residuals(x, &sol.max_eq_violation, &sol.max_ineq_violation);
  sol.objective = prob.objective(x, nullptr);
  const double viol = std::max(sol.max_eq_violation, sol.max_ineq_violation);
  if (viol <= opt.tol_con && kkt_norm <= opt.tol_kkt * 10.0) {
    sol.status = SolveStatus::kOptimal;
  } else if (viol > opt.infeasible_viol) {
    sol.status = SolveStatus::kInfeasible;
  } else {
    sol.status = SolveStatus::kMaxIter;
  }
  sol.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  if (logging) log.write(opt.log_csv);
  return sol;
}

// Max relative discrepancy between analytic derivatives and central finite
// differences at `x`. Checks the objective gradient and both Jacobians.
inline double check_gradients(const NlpProblem& prob, const Eigen::VectorXd& x, double step) {
  prob.validate();
  const int n = prob.num_vars;
  double worst = 0.0;
  const auto rel = [](double a, double fd) {
    const double scale = std::max({std::abs(a), std::abs(fd), 1.0});
    return std::abs(a - fd) / scale;
  };

  Eigen::VectorXd grad(n);
  const double f0 = prob.objective(x, &grad);
  if (!std::isfinite(f0)) throw NlpError("non-finite objective in gradient check");
  Eigen::VectorXd r_plus, r_minus, r0;
  Eigen::MatrixXd Jh, Jg;
  if (prob.num_eq > 0) prob.eq(x, r0, &Jh);
  if (prob.num_ineq > 0) prob.ineq(x, r0, &Jg);

  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double fp = prob.objective(xp, nullptr);
    const double fm = prob.objective(xm, nullptr);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NlpError("non-finite objective in gradient check");
    worst = std::max(worst, rel(grad[i], (fp - fm) / (2.0 * step)));
    if (prob.num_eq > 0) {
      prob.eq(xp, r_plus, nullptr);
      prob.eq(xm, r_minus, nullptr);
      for (int k = 0; k < prob.num_eq; ++k)
        worst = std::max(worst, rel(Jh(k, i), (r_plus[k] - r_minus[k]) / (2.0 * step)));
    }
    if (prob.num_ineq > 0) {
      prob.ineq(xp, r_plus, nullptr);
      prob.ineq(xm, r_minus, nullptr);
      for (int k = 0; k < prob.num_ineq; ++k)
        worst = std::max(worst, rel(Jg(k, i), (r_plus[k] - r_minus[k]) / (2.0 * step)));
    }
  }
  return worst;
}

}  // namespace ttp

#endif  // TTP_NLP_HPP_
