// Copyright 2026 The hitchsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense convex QP solver based on operator splitting (ADMM):
//
//   minimize    1/2 x^T P x + q^T x
//   subject to  lo <= A x <= hi
//
// Dual sign convention: y_i > 0 when the upper bound is active, y_i < 0 when
// the lower bound is active, so stationarity reads P x + q + A^T y = 0.

#ifndef HITCH_QP_HPP_
#define HITCH_QP_HPP_

#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace hitch {

struct QuadraticProgram {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd lo;  // may hold -infinity
  Eigen::VectorXd hi;  // may hold +infinity

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_constraints() const { return static_cast<int>(A.rows()); }

  /// Throws DimensionMismatch on inconsistent sizes and ConfigError when P is
  /// not symmetric or lo > hi somewhere.
  void validate() const;
  double objective(const Eigen::VectorXd& x) const;
};

enum class QpStatus { Solved, MaxIter, PrimalInfeasible, DualInfeasible };

std::string_view to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  bool polished = false;
};

struct QpSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  // over-relaxation
  int max_iter = 4000;
  double eps_abs = 1e-6;
  // Relative part of the stationarity test, at round-off level: the slack
  // weight makes cost gradients reach 1e10 on saturated controller steps.
  double eps_rel = 1e-12;
  double eps_prim_inf = 1e-4;
  double eps_dual_inf = 1e-4;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  double adaptive_rho_tolerance = 5.0;
  int check_interval = 5;
  int scaling_iter = 10;
  bool polish = true;
  // Polishing is attempted whenever both residuals fall below polish_trigger
  // and in any case every polish_interval iterations.
  double polish_trigger = 1e-3;
  int polish_interval = 25;
  int polish_max_rounds = 10;  // active-set updates per polishing attempt
  double polish_delta = 1e-9;
  int polish_refine_iter = 5;
  // When P is positive definite and ADMM has not finished after
  // active_set_after iterations (or at max_iter), the problem is finished by a
  // dual active-set method. This handles the degenerate, LP-like vertices
  // where splitting methods stall.
  bool active_set_fallback = true;
  int active_set_after = 100;
};

struct KktResiduals {
  double primal = 0.0;          // max bound violation of A x
  double dual = 0.0;            // ||P x + q + A^T y||_inf
  // max over rows of min(|y_i|, distance of A_i x to the bound selected by
  // the sign of y_i); |y_i| itself when that bound is infinite
  double complementarity = 0.0;
  // max(||P x||, ||q||, ||A^T y||), the scale eps_rel applies to
  double dual_scale = 0.0;
};

/// Throws DimensionMismatch when x or y do not match the program.
KktResiduals kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y);

/// primal <= eps_abs, complementarity <= eps_abs and
/// dual <= eps_abs + eps_rel * dual_scale.
bool kkt_satisfied(const KktResiduals& r, const QpSettings& settings);

/// Solver instance. Remembers the last primal/dual pair and step size so
/// consecutive solves of a slowly varying problem start warm.
class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {}) : settings_(settings) {}

  /// Solves `qp`. Warm-starts from the previous solution when dimensions
  /// match and warm_start is true.
  QpSolution solve(const QuadraticProgram& qp, bool warm_start = true);

  void reset();
  const QpSettings& settings() const { return settings_; }

 private:
  QpSettings settings_;
  std::optional<Eigen::VectorXd> last_x_;
  std::optional<Eigen::VectorXd> last_y_;
  double last_rho_ = 0.0;
};

/// Cold solve with a throwaway instance.
QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {});

}  // namespace hitch

#endif  // HITCH_QP_HPP_
