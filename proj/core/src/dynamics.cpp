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

#include "hitch/dynamics.hpp"

#include <string>
#include <utility>

#include "hitch/errors.hpp"

namespace hitch {
namespace {

Eigen::PartialPivLU<Eigen::Matrix4d> factor_checked(const Eigen::Matrix4d& M) {
  Eigen::PartialPivLU<Eigen::Matrix4d> lu(M);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxTensionCondition > 1.0)) {
    throw IllConditionedTensionSystem("tension matrix condition estimate " +
                                      std::to_string(1.0 / rcond));
  }
  return lu;
}

Vec zero_vec(int n) { return Vec::Zero(n); }

}  // namespace

TensionSystem assemble_tension_system(const SystemState& state,
                                      const SystemParameters& params,
                                      const Vec& damping_force,
                                      const Vec& external_force) {
  const SegmentFrame f = segment_frames(state, params);
  const int n = params.dim;
  const double m = params.hitch_mass;
  const auto& mi = params.robot_mass;
  const Vec force = damping_force + external_force;

  TensionSystem sys;
  sys.M.setZero();
  sys.M(0, 0) = f.normal12.squaredNorm() + m / mi[0] + m / mi[1];
  sys.M(0, 2) = f.normal12.dot(f.normal34);
  sys.M(1, 0) = f.normal34.dot(f.normal12);
  sys.M(1, 2) = f.normal34.squaredNorm() + m / mi[2] + m / mi[3];
  sys.M(2, 0) = 1.0;
  sys.M(2, 1) = -1.0;
  sys.M(3, 2) = 1.0;
  sys.M(3, 3) = -1.0;

  sys.C = Eigen::MatrixXd::Zero(4, 4 * n);
  for (int i = 0; i < 4; ++i) {
    sys.C.block(cable_of(i), i * n, 1, n) = -m * f.dir[i].transpose() / mi[i];
  }

  const Eigen::Vector2d vp = f.velocity_products();
  sys.w(0) = m * vp(0) + f.normal12.dot(force);
  sys.w(1) = m * vp(1) + f.normal34.dot(force);
  sys.w(2) = 0.0;
  sys.w(3) = 0.0;
  return sys;
}

Eigen::Vector4d solve_tension(const TensionSystem& sys,
                              const Eigen::VectorXd& input) {
  if (input.size() != sys.C.cols()) {
    throw DimensionMismatch("input length must be 4n");
  }
  const auto lu = factor_checked(sys.M);
  return lu.solve(sys.C * input + sys.w);
}

Accelerations accelerations(const SystemState& state,
                            const SystemParameters& params,
                            const Eigen::VectorXd& input,
                            const Eigen::Vector4d& tension,
                            const Vec& damping_force,
                            const Vec& external_force) {
  const SegmentFrame f = segment_frames(state, params);
  const int n = params.dim;
  Accelerations a;
  Vec hitch_force = damping_force + external_force;
  for (int i = 0; i < 4; ++i) {
    a.robots[i] = (input.segment(i * n, n) + tension(i) * f.dir[i]) /
                  params.robot_mass[i];
    hitch_force -= tension(i) * f.dir[i];
  }
  a.hitch = hitch_force / params.hitch_mass;
  return a;
}

InputMatrix input_matrix(const SystemState& state,
                         const SystemParameters& params) {
  const int n = params.dim;
  const SegmentFrame f = segment_frames(state, params);
  const TensionSystem sys =
      assemble_tension_system(state, params, zero_vec(n), zero_vec(n));
  const auto lu = factor_checked(sys.M);
  const Eigen::MatrixXd tension_map = lu.solve(sys.C);  // 4 x 4n

  Eigen::MatrixXd dirs(n, 4);
  Eigen::MatrixXd scaled_dirs = Eigen::MatrixXd::Zero(4 * n, 4);
  for (int i = 0; i < 4; ++i) {
    dirs.col(i) = f.dir[i];
    scaled_dirs.block(i * n, i, n, 1) = f.dir[i] / params.robot_mass[i];
  }

  InputMatrix b;
  b.hitch = -(dirs * tension_map) / params.hitch_mass;
  b.robots = scaled_dirs * tension_map;
  for (int i = 0; i < 4; ++i) {
    b.robots.block(i * n, i * n, n, n).diagonal().array() +=
        1.0 / params.robot_mass[i];
  }
  b.nonzero.resize(5 * n, 4 * n);
  b.nonzero << b.hitch, b.robots;
  return b;
}

Eigen::MatrixXd full_input_matrix(const InputMatrix& b) {
  const auto cols = b.nonzero.cols();
  const auto half = b.nonzero.rows();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(2 * half, cols);
  full.bottomRows(half) = b.nonzero;
  return full;
}

Vec Disturbance::deterministic_force(double time, int dim) const {
  if (!external_force) return Vec::Zero(dim);
  Vec f = external_force(time);
  if (f.size() != dim) {
    throw DimensionMismatch("external force has wrong dimension");
  }
  return f;
}

Eigen::VectorXd drift(const SystemState& state, const SystemParameters& params,
                      bool include_disturbance,
                      const Disturbance* disturbance) {
  const int n = params.dim;
  Vec f_d = zero_vec(n);
  Vec f_ext = zero_vec(n);
  if (include_disturbance) {
    f_d = -params.damping * state.hitch_vel;
    if (disturbance) f_ext = disturbance->deterministic_force(state.time, n);
  }
  const Eigen::VectorXd zero_input = Eigen::VectorXd::Zero(4 * n);
  const TensionSystem sys = assemble_tension_system(state, params, f_d, f_ext);
  const Eigen::Vector4d t = solve_tension(sys, zero_input);
  const Accelerations a = accelerations(state, params, zero_input, t, f_d, f_ext);

  Eigen::VectorXd h(10 * n);
  h.segment(0, n) = state.hitch_vel;
  for (int i = 0; i < 4; ++i) h.segment((1 + i) * n, n) = state.robot_vel[i];
  h.segment(5 * n, n) = a.hitch;
  for (int i = 0; i < 4; ++i) h.segment((6 + i) * n, n) = a.robots[i];
  return h;
}

StepResult euler_step(const SystemState& state, const SystemParameters& params,
                      const Eigen::VectorXd& input, double dt,
                      const Vec& external_force,
                      const ProjectionOptions& projection) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const Vec f_d = -params.damping * state.hitch_vel;
  const TensionSystem sys =
      assemble_tension_system(state, params, f_d, external_force);

  StepResult out;
  out.tension = solve_tension(sys, input);
  out.accel = accelerations(state, params, input, out.tension, f_d, external_force);

  SystemState next = state;
  next.hitch += dt * state.hitch_vel;
  next.hitch_vel += dt * out.accel.hitch;
  for (int i = 0; i < 4; ++i) {
    next.robots[i] += dt * state.robot_vel[i];
    next.robot_vel[i] += dt * out.accel.robots[i];
  }
  next.time = state.time + dt;
  if (!next.is_finite()) {
    throw NonFiniteState("non-finite state at t=" + std::to_string(next.time));
  }
  ProjectionOptions options = projection;
  options.time_step = dt;
  out.state = project_state(next, params, options);
  if (!out.state.is_finite()) {
    throw NonFiniteState("non-finite projected state at t=" +
                         std::to_string(next.time));
  }
  return out;
}

Plant::Plant(SystemParameters params, Disturbance disturbance)
    : params_(std::move(params)),
      disturbance_(std::move(disturbance)),
      rng_(disturbance_.seed) {
  params_.validate();
  if (!(disturbance_.noise_std >= 0.0)) {
    throw ConfigError("noise standard deviation must be non-negative");
  }
}

StepResult Plant::step(const SystemState& state, const Eigen::VectorXd& input,
                       double dt) {
  const int n = params_.dim;
  Vec f_ext = disturbance_.deterministic_force(state.time, n);
  if (disturbance_.noise_std > 0.0) {
    for (int k = 0; k < n; ++k) f_ext(k) += disturbance_.noise_std * gauss_(rng_);
  }
  return euler_step(state, params_, input, dt, f_ext);
}

}  // namespace hitch
