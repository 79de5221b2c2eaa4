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

#include "hitch/controller.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "hitch/errors.hpp"

namespace hitch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinWindingNorm = 1e-9;

// Offsets into the stacked state [p, p1..p4, dp, dp1..dp4].
int hitch_pos(int) { return 0; }
int robot_pos(int i, int n) { return (1 + i) * n; }
int hitch_vel(int n) { return 5 * n; }
int robot_vel(int i, int n) { return (6 + i) * n; }

}  // namespace

ControllerGains ControllerGains::defaults(int dim, double dt) {
  ControllerGains g;
  g.kp = Vec::Constant(dim, 20.0);
  g.kp_cas = Vec::Constant(dim, 10.0);
  g.dt = dt;
  g.gamma = 100.0 * dt;
  return g;
}

void ControllerGains::validate(int dim) const {
  if (kp.size() != dim || kp_cas.size() != dim) {
    throw ConfigError("gain vectors must have one entry per axis");
  }
  if (!(kp.minCoeff() > 0.0) || !(kp_cas.minCoeff() > 0.0)) {
    throw ConfigError("K_p and K_cas must be positive definite");
  }
  if (!(gamma > 0.0) || !(dt > 0.0) || !(alpha > 0.0) || !(beta > 0.0) ||
      !(lambda > 0.0) || !(t_min > 0.0)) {
    throw ConfigError("controller gains must be positive");
  }
  if (!(f_max > t_min)) throw ConfigError("f_max must exceed t_min");
}

std::array<Vec, 2> winding_axes(const SystemState& state,
                                const SystemParameters& params) {
  const SegmentFrame f = segment_frames(state, params);
  std::array<Vec, 2> axes;
  for (int c = 0; c < 2; ++c) {
    const Vec k = cross(f.r[2 * c], f.r[2 * c + 1]);
    const double nrm = k.norm();
    if (!(nrm >= kMinWindingNorm)) {
      throw DegenerateWindingPlane("winding plane of cable " +
                                   std::to_string(c + 1) + " is undefined");
    }
    axes[c] = k / nrm;
  }
  return axes;
}

Points4 robot_references(const ReferenceConfiguration& ref,
                         const std::array<Vec, 2>& axes) {
  const auto n = ref.hitch.size();
  Points4 out;
  for (int c = 0; c < 2; ++c) {
    const Vec& normal = ref.normal[c];
    const double nn = normal.norm();
    const Vec nhat = normal / nn;
    Vec kappa = axes[c];
    if (n == 3) {
      kappa -= kappa.dot(nhat) * nhat;
      const double kn = kappa.norm();
      if (!(kn >= kMinWindingNorm)) {
        throw DegenerateWindingPlane("winding axis is parallel to the reference normal");
      }
      kappa /= kn;
    }
    const double half = 0.5 * ref.axis[c];
    const Vec center = ref.hitch - half * normal / std::sqrt(4.0 - nn * nn);
    const Vec side = cross_apply(kappa, nhat);
    out[2 * c] = center + half * side;
    out[2 * c + 1] = center - half * side;
  }
  return out;
}

Points4 robot_references(const ReferenceConfiguration& ref,
                         const SystemState& state,
                         const SystemParameters& params) {
  return robot_references(ref, winding_axes(state, params));
}

Points4 reference_velocities(const ReferenceTrajectory& traj,
                             const std::array<Vec, 2>& axes, double t,
                             double h) {
  const Points4 ahead = robot_references(traj.evaluate(t + h), axes);
  const Points4 behind = robot_references(traj.evaluate(t - h), axes);
  Points4 v;
  for (int i = 0; i < 4; ++i) v[i] = (ahead[i] - behind[i]) / (2.0 * h);
  return v;
}

CompositeErrors composite_errors(const SystemState& state,
                                 const Points4& robot_ref,
                                 const Points4& robot_vel_ref,
                                 const ControllerGains& gains) {
  CompositeErrors out;
  for (int i = 0; i < 4; ++i) {
    out.cascade[i] = robot_ref[i] - state.robots[i];
    out.e[i] = robot_vel_ref[i] + gains.kp_cas.cwiseProduct(out.cascade[i]) -
               state.robot_vel[i];
  }
  return out;
}

double lyapunov(const Points4& e, const Vec& kp) {
  double v = 0.0;
  for (const Vec& ei : e) v += ei.dot(kp.cwiseProduct(ei));
  return 0.5 * v;
}

BarrierValues barrier_functions(const SystemState& state,
                                const SystemParameters& params, double beta) {
  const SegmentFrame f = segment_frames(state, params);
  BarrierValues b;
  for (int i = 0; i < 4; ++i) {
    b.q[i] = params.segment_cable_length(i) - f.length[i];
    b.psi[i] = -f.dir[i].dot(f.r_rate[i]) + beta * b.q[i];
  }
  return b;
}

Eigen::VectorXd lyapunov_gradient(const CompositeErrors& errors,
                                  const ControllerGains& gains) {
  const int n = static_cast<int>(gains.kp.size());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(10 * n);
  for (int i = 0; i < 4; ++i) {
    const Vec kp_e = gains.kp.cwiseProduct(errors.e[i]);
    g.segment(robot_pos(i, n), n) = -gains.kp_cas.cwiseProduct(kp_e);
    g.segment(robot_vel(i, n), n) = -kp_e;
  }
  return g;
}

Eigen::MatrixXd barrier_gradients(const SystemState& state,
                                  const SystemParameters& params, double beta) {
  const SegmentFrame f = segment_frames(state, params);
  const int n = params.dim;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 10 * n);
  for (int i = 0; i < 4; ++i) {
    // d|r|/dp = dir and d(dir^T dr)/dp = dir_rate.
    const Vec dpos = -beta * f.dir[i] - f.dir_rate[i];
    g.block(i, hitch_pos(n), 1, n) = dpos.transpose();
    g.block(i, robot_pos(i, n), 1, n) = -dpos.transpose();
    g.block(i, hitch_vel(n), 1, n) = -f.dir[i].transpose();
    g.block(i, robot_vel(i, n), 1, n) = f.dir[i].transpose();
  }
  return g;
}

ControlAffineModel control_affine_model(const SystemState& state,
                                        const SystemParameters& params) {
  ControlAffineModel m;
  m.h = drift(state, params, false);
  m.B = full_input_matrix(input_matrix(state, params));
  return m;
}

LieRow clf_row(const CompositeErrors& errors, const ControllerGains& gains,
               const ControlAffineModel& model) {
  const Eigen::VectorXd g = lyapunov_gradient(errors, gains);
  return {g.dot(model.h), model.B.transpose() * g};
}

std::array<LieRow, 4> hocbf_rows(const SystemState& state,
                                 const SystemParameters& params, double beta,
                                 const ControlAffineModel& model) {
  const Eigen::MatrixXd g = barrier_gradients(state, params, beta);
  const Eigen::VectorXd lh = g * model.h;
  const Eigen::MatrixXd lb = g * model.B;
  std::array<LieRow, 4> rows;
  for (int i = 0; i < 4; ++i) rows[i] = {lh(i), lb.row(i).transpose()};
  return rows;
}

Eigen::VectorXd nominal_input(const SystemState& state,
                              const SystemParameters& params, double t_min) {
  const SegmentFrame f = segment_frames(state, params);
  const int n = params.dim;
  Eigen::VectorXd u(4 * n);
  for (int i = 0; i < 4; ++i) u.segment(i * n, n) = -t_min * f.dir[i];
  return u;
}

QuadraticProgram assemble_qp(const SystemState& state,
                             const SystemParameters& params,
                             const ControllerGains& gains,
                             const Points4& robot_ref,
                             const Points4& robot_vel_ref) {
  const int n = params.dim;
  const QpLayout layout{n};
  const int k = layout.num_vars();
  const int m = layout.num_rows();
  const int nu = 4 * n;

  const ControlAffineModel model = control_affine_model(state, params);
  const CompositeErrors errors =
      composite_errors(state, robot_ref, robot_vel_ref, gains);
  const double V = lyapunov(errors.e, gains.kp);
  const BarrierValues barrier = barrier_functions(state, params, gains.beta);

  QuadraticProgram qp;
  qp.P = Eigen::MatrixXd::Zero(k, k);
  qp.P.diagonal().head(nu).setConstant(2.0);
  qp.P(nu, nu) = 2.0 * gains.alpha;
  qp.q = Eigen::VectorXd::Zero(k);
  qp.q.head(nu) = -2.0 * nominal_input(state, params, gains.t_min);

  qp.A = Eigen::MatrixXd::Zero(m, k);
  qp.lo = Eigen::VectorXd::Constant(m, -kInf);
  qp.hi = Eigen::VectorXd::Constant(m, kInf);

  const LieRow clf = clf_row(errors, gains, model);
  // Per-step form dt (L_h V + L_B V u) + gamma V <= delta.
  qp.A.row(layout.clf_row()).head(nu) = gains.dt * clf.input.transpose();
  qp.A(layout.clf_row(), nu) = -1.0;
  qp.hi(layout.clf_row()) = -(gains.dt * clf.drift + gains.gamma * V);

  const auto cbf = hocbf_rows(state, params, gains.beta, model);
  for (int i = 0; i < 4; ++i) {
    qp.A.row(layout.barrier_row(i)).head(nu) = cbf[i].input.transpose();
    qp.lo(layout.barrier_row(i)) = -(cbf[i].drift + gains.lambda * barrier.psi[i]);
  }

  const Vec zero = Vec::Zero(n);
  const TensionSystem sys = assemble_tension_system(state, params, zero, zero);
  const Eigen::PartialPivLU<Eigen::Matrix4d> lu(sys.M);
  const Eigen::MatrixXd tension_map = lu.solve(sys.C);
  const Eigen::Vector4d tension_offset = lu.solve(sys.w);
  for (int i = 0; i < 4; ++i) {
    qp.A.row(layout.tension_row(i)).head(nu) = tension_map.row(i);
    qp.lo(layout.tension_row(i)) = gains.t_min - tension_offset(i);
  }

  for (int j = 0; j < nu; ++j) {
    qp.A(layout.box_row(j), j) = 1.0;
    qp.lo(layout.box_row(j)) = -gains.f_max;
    qp.hi(layout.box_row(j)) = gains.f_max;
  }
  qp.A(layout.slack_row(), nu) = 1.0;
  qp.lo(layout.slack_row()) = 0.0;
  return qp;
}

Controller::Controller(SystemParameters params, ControllerGains gains,
                       ReferenceTrajectory trajectory, QpSettings qp_settings)
    : params_(std::move(params)),
      gains_(std::move(gains)),
      trajectory_(std::move(trajectory)),
      solver_(qp_settings) {
  params_.validate();
  gains_.validate(params_.dim);
  trajectory_.base().validate(params_);
}

ControlOutput Controller::compute_input(const SystemState& state,
                                        bool warm_start) {
  const int n = params_.dim;
  const double t = state.time;
  ControlOutput out;
  ControlDiagnostics& d = out.diag;

  d.reference = trajectory_.evaluate(t);
  const auto axes = winding_axes(state, params_);
  d.robot_ref = robot_references(d.reference, axes);
  d.robot_vel_ref = reference_velocities(trajectory_, axes, t);
  d.errors = composite_errors(state, d.robot_ref, d.robot_vel_ref, gains_);
  d.V = lyapunov(d.errors.e, gains_.kp);
  d.barrier = barrier_functions(state, params_, gains_.beta);

  const QuadraticProgram qp =
      assemble_qp(state, params_, gains_, d.robot_ref, d.robot_vel_ref);
  const auto start = std::chrono::steady_clock::now();
  const QpSolution sol = solver_.solve(qp, warm_start);
  d.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  d.status = sol.status;
  d.qp_iterations = sol.iterations;
  d.qp_primal = sol.primal_res;
  d.qp_dual = sol.dual_res;
  d.polished = sol.polished;
  if (sol.status != QpStatus::Solved) {
    throw ControlInfeasible("QP not solved at t=" + std::to_string(t) + " (" +
                            std::string(to_string(sol.status)) + ")");
  }

  out.u = sol.x.head(4 * n);
  out.delta = sol.x(4 * n);
  d.delta = out.delta;
  const Vec zero = Vec::Zero(n);
  d.model_tension =
      solve_tension(assemble_tension_system(state, params_, zero, zero), out.u);
  return out;
}

}  // namespace hitch
