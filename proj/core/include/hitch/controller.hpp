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

// CLF-HOCBF-QP controller.
//
// Decision variable z = (u, delta), u in R^{4n}. Each step solves
//
//   minimize    |u - u_nom|^2 + alpha delta^2
//   subject to  dt (L_h V + L_B V u) + gamma V <= delta    (tracking)
//               L_h psi_i + L_B psi_i u + lambda psi_i >= 0 (segment slack)
//               t(u) >= t_min                            (taut cables)
//               -f_max <= u <= f_max,  delta >= 0
//
// with V = 1/2 sum_i e_i^T K_p e_i over the cascade errors
// e_i = v_i_ref + K_cas (p_i_ref - p_i) - dp_i and
// psi_i = -dir_i^T dr_i + beta (l_i - |r_i|).

#ifndef HITCH_CONTROLLER_HPP_
#define HITCH_CONTROLLER_HPP_

#include <array>

#include <Eigen/Dense>

#include "hitch/dynamics.hpp"
#include "hitch/geometry.hpp"
#include "hitch/qp.hpp"
#include "hitch/trajectory.hpp"

namespace hitch {

struct ControllerGains {
  Vec kp;      // diag K_p
  Vec kp_cas;  // diag K_cas
  // Fraction of V removed per control period, so V decays at roughly
  // gamma / dt per second. delta is in the same per-step units.
  double gamma = 0.5;
  double dt = 0.005;
  double alpha = 1e6;
  double beta = 10.0;
  double lambda = 100.0;
  double t_min = 0.1;
  double f_max = 20.0;

  /// K_p = 20 I, K_cas = 10 I, gamma = 100 dt.
  static ControllerGains defaults(int dim, double dt = 0.005);

  double clf_rate() const { return gamma / dt; }
  /// Throws ConfigError when any gain is non-positive or f_max <= t_min.
  void validate(int dim) const;
};

/// Unit winding axes kappa_12, kappa_34 from the current segments. In 2D the
/// axis is the 1-vector sign(r1 x r2). Throws DegenerateWindingPlane when
/// |r1 x r2| or |r3 x r4| < 1e-9.
std::array<Vec, 2> winding_axes(const SystemState& state,
                                const SystemParameters& params);

/// Isosceles robot placement for a reference configuration:
///
///   p_i_ref = p_ref + d/2 (-n / sqrt(4 - |n|^2) + s_i kappa' x n_hat)
///
/// with s = +1 for robots 1 and 3 and -1 for robots 2 and 4. kappa' is the
/// winding axis with its component along n_hat removed, so the pair is
/// exactly d apart. Maps a symmetric configuration onto itself.
Points4 robot_references(const ReferenceConfiguration& ref,
                         const std::array<Vec, 2>& axes);
Points4 robot_references(const ReferenceConfiguration& ref,
                         const SystemState& state,
                         const SystemParameters& params);

inline constexpr double kReferenceStep = 1e-4;  // s

/// Central difference of robot_references along the trajectory with the
/// winding axes frozen.
Points4 reference_velocities(const ReferenceTrajectory& traj,
                             const std::array<Vec, 2>& axes, double t,
                             double h = kReferenceStep);

struct CompositeErrors {
  Points4 e;        // composite velocity errors
  Points4 cascade;  // p_i_ref - p_i
};

CompositeErrors composite_errors(const SystemState& state,
                                 const Points4& robot_ref,
                                 const Points4& robot_vel_ref,
                                 const ControllerGains& gains);

double lyapunov(const Points4& e, const Vec& kp);

struct BarrierValues {
  std::array<double, 4> q{};    // l_i - |r_i|
  std::array<double, 4> psi{};  // dq_i + beta q_i
};

BarrierValues barrier_functions(const SystemState& state,
                                const SystemParameters& params, double beta);

/// dV/dx over the stacked state [p, p_i, dp, dp_i] (length 10n). Reference
/// dependence on the state is neglected.
Eigen::VectorXd lyapunov_gradient(const CompositeErrors& errors,
                                  const ControllerGains& gains);

/// Row i holds dpsi_i/dx; only the p, p_i, dp, dp_i blocks are nonzero.
Eigen::MatrixXd barrier_gradients(const SystemState& state,
                                  const SystemParameters& params, double beta);

/// Disturbance-free control-affine model dx/dt = h(x) + B(x) u.
struct ControlAffineModel {
  Eigen::VectorXd h;  // 10n
  Eigen::MatrixXd B;  // 10n x 4n
};

ControlAffineModel control_affine_model(const SystemState& state,
                                        const SystemParameters& params);

struct LieRow {
  double drift = 0.0;     // L_h
  Eigen::VectorXd input;  // L_B, length 4n
};

LieRow clf_row(const CompositeErrors& errors, const ControllerGains& gains,
               const ControlAffineModel& model);

std::array<LieRow, 4> hocbf_rows(const SystemState& state,
                                 const SystemParameters& params, double beta,
                                 const ControlAffineModel& model);

/// u_nom = -t_min [dir_1; ...; dir_4].
Eigen::VectorXd nominal_input(const SystemState& state,
                              const SystemParameters& params, double t_min);

/// Row layout of the assembled program.
struct QpLayout {
  int dim = 3;
  int clf_row() const { return 0; }
  int barrier_row(int i) const { return 1 + i; }
  int tension_row(int i) const { return 5 + i; }
  int box_row(int j) const { return 9 + j; }
  int slack_row() const { return 9 + 4 * dim; }
  int num_rows() const { return 10 + 4 * dim; }
  int num_vars() const { return 4 * dim + 1; }
};

QuadraticProgram assemble_qp(const SystemState& state,
                             const SystemParameters& params,
                             const ControllerGains& gains,
                             const Points4& robot_ref,
                             const Points4& robot_vel_ref);

struct ControlDiagnostics {
  double V = 0.0;
  double delta = 0.0;
  BarrierValues barrier;
  Eigen::Vector4d model_tension = Eigen::Vector4d::Zero();  // t(u), no disturbance
  Points4 robot_ref;
  Points4 robot_vel_ref;
  CompositeErrors errors;
  ReferenceConfiguration reference;
  QpStatus status = QpStatus::MaxIter;
  int qp_iterations = 0;
  double qp_primal = 0.0;
  double qp_dual = 0.0;
  bool polished = false;
  double solve_seconds = 0.0;
};

struct ControlOutput {
  Eigen::VectorXd u;
  double delta = 0.0;
  ControlDiagnostics diag;
};

/// One controller instance per closed loop; owns the QP warm-start memory.
class Controller {
 public:
  Controller(SystemParameters params, ControllerGains gains,
             ReferenceTrajectory trajectory, QpSettings qp_settings = {});

  /// Uses state.time as the reference time. Throws ControlInfeasible when the
  /// QP is not solved.
  ControlOutput compute_input(const SystemState& state, bool warm_start = true);

  const ControllerGains& gains() const { return gains_; }
  const ReferenceTrajectory& trajectory() const { return trajectory_; }

 private:
  SystemParameters params_;
  ControllerGains gains_;
  ReferenceTrajectory trajectory_;
  QpSolver solver_;
};

}  // namespace hitch

#endif  // HITCH_CONTROLLER_HPP_
