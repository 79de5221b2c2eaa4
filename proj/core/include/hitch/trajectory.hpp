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

// Reference configurations (hitch position, ellipsoid normals, major axes)
// and the time-parameterized trajectories that generate them.

#ifndef HITCH_TRAJECTORY_HPP_
#define HITCH_TRAJECTORY_HPP_

#include <array>
#include <string_view>

#include "hitch/geometry.hpp"

namespace hitch {

struct ReferenceConfiguration {
  Vec hitch;                  // p_ref
  std::array<Vec, 2> normal;  // n12_ref, n34_ref
  std::array<double, 2> axis{};  // d12_ref, d34_ref: distance between the
                                 // two robots of a cable
  Vec hitch_rate;             // dp_ref/dt

  /// Throws ConfigError unless eps_n < |n| < 2 - eps_n and 0 < d < l.
  void validate(const SystemParameters& params) const;
};

/// Normal magnitude for which an isosceles placement with robot spacing
/// `axis` lies on the ellipsoid of a cable with length `length`:
/// |n|^2 = 4 - 4 d^2 / l^2.
double consistent_normal_norm(double axis, double length);

/// The configuration the current state actually realizes.
ReferenceConfiguration measured_configuration(const SystemState& state,
                                              const SystemParameters& params);

enum class TrajectoryKind { Static, Linear, Lissajous };

std::string_view to_string(TrajectoryKind kind);
/// Throws ConfigError for unknown names.
TrajectoryKind trajectory_kind_from_string(std::string_view name);

/// Hitch path with normals and axis lengths held at `base`.
///
///   Static:    p(t) = base.hitch
///   Linear:    p(t) = base.hitch + velocity t
///   Lissajous: p_k(t) = base.hitch_k + A_k (sin(f_k omega t + phi_k) - sin phi_k)
///
/// omega is chosen so the mean speed over one period equals `speed`.
class ReferenceTrajectory {
 public:
  static ReferenceTrajectory fixed(ReferenceConfiguration base);
  static ReferenceTrajectory linear(ReferenceConfiguration base,
                                    const Vec& velocity);
  static ReferenceTrajectory lissajous(ReferenceConfiguration base, double speed,
                                       const Eigen::Vector3d& amplitude = {1.0, 1.0, 0.5},
                                       const Eigen::Vector3d& frequency = {1.0, 2.0, 3.0},
                                       const Eigen::Vector3d& phase = {0.0, 1.5707963267948966, 0.0});

  ReferenceConfiguration evaluate(double t) const;

  TrajectoryKind kind() const { return kind_; }
  double omega() const { return omega_; }
  /// Mean path speed; zero for Static.
  double speed() const;
  const ReferenceConfiguration& base() const { return base_; }

 private:
  TrajectoryKind kind_ = TrajectoryKind::Static;
  ReferenceConfiguration base_;
  Vec velocity_;
  Eigen::Vector3d amplitude_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d frequency_ = Eigen::Vector3d::Ones();
  Eigen::Vector3d phase_ = Eigen::Vector3d::Zero();
  double omega_ = 0.0;
  double speed_ = 0.0;
};

/// Arc length of one period of the unit-rate Lissajous path
/// s -> A_k sin(f_k s + phi_k), s in [0, 2 pi), restricted to `dim` axes.
double lissajous_period_length(const Eigen::Vector3d& amplitude,
                               const Eigen::Vector3d& frequency,
                               const Eigen::Vector3d& phase, int dim);

}  // namespace hitch

#endif  // HITCH_TRAJECTORY_HPP_
