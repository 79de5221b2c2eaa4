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

// State representation and ellipsoid kinematics of a hitch formed by two
// taut cables, each carried by two point-mass robots.
//
// Robots 1 and 2 hold cable 12, robots 3 and 4 hold cable 34. Indices in
// code are zero-based (robot 0 is "robot 1"). For a taut cable the hitch lies
// on the ellipsoid whose foci are the two robots holding it, so
//
//   |p - p1| + |p - p2| = l12,   |p - p3| + |p - p4| = l34.

#ifndef HITCH_GEOMETRY_HPP_
#define HITCH_GEOMETRY_HPP_

#include <array>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace hitch {

/// Spatial vector; dimension 2 or 3, stored inline.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Points4 = std::array<Vec, 4>;
using NormalMatrix = Eigen::Matrix<double, 2, Eigen::Dynamic, 0, 2, 3>;

inline constexpr double kSegmentEpsilon = 1e-9;  // m
inline constexpr double kNormalEpsilon = 1e-6;

/// Cable index (0 for cable 12, 1 for cable 34) of robot `i`.
constexpr int cable_of(int robot) { return robot / 2; }

struct SystemParameters {
  int dim = 3;
  std::array<double, 2> cable_length{4.0, 4.0};  // l12, l34
  std::array<double, 4> robot_mass{0.35, 0.35, 0.35, 0.35};
  double hitch_mass = 0.005;  // virtual mass lumped at the hitch
  double damping = 0.2;       // c_d in f_d = -c_d * dp

  double segment_cable_length(int robot) const {
    return cable_length[cable_of(robot)];
  }
  /// Throws ConfigError when any invariant is violated.
  void validate() const;
};

struct SystemState {
  Vec hitch;
  Points4 robots;
  Vec hitch_vel;
  Points4 robot_vel;
  double time = 0.0;

  static SystemState zeros(int dim);

  int dim() const { return static_cast<int>(hitch.size()); }
  bool is_finite() const;

  /// [p, p1..p4, dp, dp1..dp4], length 10n.
  Eigen::VectorXd stacked() const;
  static SystemState from_stacked(const Eigen::VectorXd& x, int dim,
                                  double time = 0.0);
};

/// Per-segment quantities derived from a state.
struct SegmentFrame {
  Points4 r;         // p - p_i
  Points4 r_rate;    // dp - dp_i
  std::array<double, 4> length{};
  Points4 dir;       // unit r_i
  Points4 dir_rate;  // time derivative of dir
  Vec normal12;      // dir_1 + dir_2
  Vec normal34;      // dir_3 + dir_4
  NormalMatrix N;    // rows normal12^T, normal34^T

  /// sum over the cable of dir_rate_i^T r_rate_i (velocity-product terms of
  /// the second derivative of the kinematic constraint).
  Eigen::Vector2d velocity_products() const;
};

/// Throws DegenerateSegment if any |r_i| <= kSegmentEpsilon.
SegmentFrame segment_frames(const SystemState& state,
                            const SystemParameters& params);

/// (g12, g34): signed violation of the ellipsoid constraints, in metres.
Eigen::Vector2d kinematic_residuals(const SystemState& state,
                                    const SystemParameters& params);

struct ConstraintMatrices {
  NormalMatrix N;
  Eigen::Vector2d b;
};

/// Second-derivative constraint N * ddp = b for given robot accelerations.
ConstraintMatrices constraint_matrices(const SystemState& state,
                                       const SystemParameters& params,
                                       const Points4& robot_accels);

struct FeasibilityReport {
  std::array<double, 4> length{};
  std::array<bool, 4> segment_ok{};
  bool normal12_degenerate = false;
  bool normal34_degenerate = false;

  bool ok() const;
};

FeasibilityReport feasibility_report(const SystemState& state,
                                     const SystemParameters& params,
                                     double margin);

struct ProjectionOptions {
  double tolerance = 1e-10;  // m
  int max_iterations = 20;
  double regularization = 1e-12;
  // When positive, the position correction is also applied to the hitch
  // velocity as the impulse dp += dx / time_step.
  double time_step = 0.0;
  // Singular values of N at or below this are dropped from the velocity
  // correction. Zero selects the plain regularized solve.
  double rank_tolerance = 0.0;
  // Spread position and velocity corrections over the hitch and the robots
  // in the mass metric instead of moving the hitch alone. Near cotangent
  // configurations the hitch-only correction jumps along the shrinking
  // intersection curve, while a small robot correction is cheap.
  bool move_robots = false;
};

/// Restores the position and velocity constraints by moving the hitch only.
/// Positions use damped Gauss-Newton steps dp = N^T (N N^T + mu I)^-1 (-g)
/// with mu starting at `regularization`; the velocity gets a single
/// minimum-norm correction onto n12^T dp = dir1^T dp1 + dir2^T dp2 (and the
/// cable-34 analogue).
/// Throws ProjectionDiverged when the residual stays above tolerance.
SystemState project_state(const SystemState& state,
                          const SystemParameters& params,
                          const ProjectionOptions& options = {});

/// Restricts sampled segment directions to a cone. Applies to both segments
/// of one cable.
struct DirectionCone {
  Vec axis;
  double half_angle = 3.14159265358979323846;  // rad
};

struct SamplingBounds {
  Vec lower;  // hitch position box
  Vec upper;
  std::array<std::optional<DirectionCone>, 2> cones;
};

/// Draws a constraint-consistent state at rest. The hitch is uniform in the
/// box; each cable splits its length a + b with a uniform in
/// (margin, l - margin); segment directions are uniform and redrawn until
/// |d1 + d2| > 0.3 and the winding plane is well defined.
/// Throws SamplingFailed after 1000 rejected draws.
SystemState sample_feasible_state(std::uint64_t seed,
                                  const SamplingBounds& bounds,
                                  const SystemParameters& params,
                                  double margin);

/// Canonical symmetric fixture: n = 3, l12 = l34 = 4, hitch at (0, 0, 1),
/// all four segments of length 2 and antiparallel ellipsoid normals.
SystemState config_s_state();
SystemParameters config_s_params();

/// Cross product in 3D; in 2D the scalar z-component is returned in a
/// 1-vector.
Vec cross(const Vec& a, const Vec& b);
/// Winding normal cross(a, b) applied to c: cross(cross_ab, c) in 3D, the
/// 90-degree in-plane rotation scaled by the scalar cross in 2D.
Vec cross_apply(const Vec& axis, const Vec& v);

}  // namespace hitch

#endif  // HITCH_GEOMETRY_HPP_
