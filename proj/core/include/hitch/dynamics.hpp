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

// Newtonian dynamics of the hitch and robots with taut-cable tensions.
//
//   m_i ddp_i = u_i + t_i dir_i
//   m   ddp   = -sum_i t_i dir_i + f_d + f_ext
//
// Substituting both into the differentiated kinematic constraint and adding
// t1 = t2, t3 = t4 gives the linear tension system M t = C u + w.

#ifndef HITCH_DYNAMICS_HPP_
#define HITCH_DYNAMICS_HPP_

#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "hitch/geometry.hpp"

namespace hitch {

inline constexpr double kMaxTensionCondition = 1e12;

struct TensionSystem {
  Eigen::Matrix4d M;
  Eigen::MatrixXd C;  // 4 x 4n
  Eigen::Vector4d w;
};

/// f_d and f_ext are the hitch damping and external forces; pass zero vectors
/// for the controller's disturbance-free model.
TensionSystem assemble_tension_system(const SystemState& state,
                                      const SystemParameters& params,
                                      const Vec& damping_force,
                                      const Vec& external_force);

/// t = M^-1 (C u + w). Throws IllConditionedTensionSystem when the condition
/// estimate of M exceeds kMaxTensionCondition.
Eigen::Vector4d solve_tension(const TensionSystem& sys,
                              const Eigen::VectorXd& input);

struct Accelerations {
  Vec hitch;
  Points4 robots;
};

Accelerations accelerations(const SystemState& state,
                            const SystemParameters& params,
                            const Eigen::VectorXd& input,
                            const Eigen::Vector4d& tension,
                            const Vec& damping_force, const Vec& external_force);

/// Nonzero blocks of the input matrix B(x) of dx/dt = h(x) + B(x) u.
struct InputMatrix {
  Eigen::MatrixXd hitch;    // B_p, n x 4n
  Eigen::MatrixXd robots;   // 4n x 4n
  Eigen::MatrixXd nonzero;  // [B_p; robots], 5n x 4n
};

/// Robot blocks use the mass-scaled tension map blkdiag(dir_i / m_i), which
/// is what m_i ddp_i = u_i + t_i dir_i implies.
InputMatrix input_matrix(const SystemState& state,
                         const SystemParameters& params);

/// Full 10n x 4n input matrix (upper 5n rows zero).
Eigen::MatrixXd full_input_matrix(const InputMatrix& b);

/// External disturbances acting on the hitch. The damping coefficient lives
/// in SystemParameters.
struct Disturbance {
  double noise_std = 0.0;  // N, per axis, held over one step
  std::function<Vec(double)> external_force;  // deterministic f_ext(t)
  std::uint64_t seed = 0;

  Vec deterministic_force(double time, int dim) const;
};

/// State drift h(x). With include_disturbance false the damping and external
/// forces are dropped (the controller's model).
Eigen::VectorXd drift(const SystemState& state, const SystemParameters& params,
                      bool include_disturbance,
                      const Disturbance* disturbance = nullptr);

struct StepResult {
  SystemState state;
  Eigen::Vector4d tension;  // tensions acting during the step
  Accelerations accel;
};

/// Projection settings used by the simulator. Near cotangent configurations
/// the rank of N drops, so the velocity correction is truncated there.
inline ProjectionOptions simulation_projection() {
  ProjectionOptions o;
  o.rank_tolerance = 1e-4;
  o.move_robots = true;
  return o;
}

/// One explicit Euler step with f_d = -c_d dp and the given external force,
/// followed by project_state with the position correction applied to the
/// hitch velocity as an impulse. Throws NonFiniteState or ProjectionDiverged.
StepResult euler_step(const SystemState& state, const SystemParameters& params,
                      const Eigen::VectorXd& input, double dt,
                      const Vec& external_force,
                      const ProjectionOptions& projection = simulation_projection());

/// Simulated plant: owns the disturbance noise stream for one trial.
class Plant {
 public:
  Plant(SystemParameters params, Disturbance disturbance);

  StepResult step(const SystemState& state, const Eigen::VectorXd& input,
                  double dt);

  const SystemParameters& params() const { return params_; }

 private:
  SystemParameters params_;
  Disturbance disturbance_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace hitch

#endif  // HITCH_DYNAMICS_HPP_
