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


// Shared fixtures and independent reference computations for the tests.
// Nothing here calls into the library's tension or QP code paths.

#ifndef HITCH_TEST_SUPPORT_HPP_
#define HITCH_TEST_SUPPORT_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "hitch/geometry.hpp"
#include "hitch/qp.hpp"

namespace hitch::testing {

/// Constraint-consistent state: positions from sample_feasible_state
/// (no direction cones), random velocities of size vel_scale made
/// consistent by the default hitch-only projection.
SystemState random_state(std::mt19937_64& rng, const SystemParameters& params,
                         double vel_scale = 1.0, double margin = 0.5);

Eigen::VectorXd random_vector(std::mt19937_64& rng, int size, double scale = 1.0);

/// Tensions from the second derivative of the two length constraints,
/// assembled numerically from Newton's laws written out here, plus the
/// equal-tension rows. hitch_force is f_d + f_ext.
Eigen::Vector4d oracle_tension(const SystemState& s, const SystemParameters& params,
                               const Eigen::VectorXd& u, const Vec& hitch_force);

/// Newtonian state derivative [dp, dp_i, ddp, ddp_i] with oracle tensions.
Eigen::VectorXd oracle_derivative(const SystemState& s, const SystemParameters& params,
                                  const Eigen::VectorXd& u, const Vec& hitch_force);

/// Strictly convex program feasible at a random point, with a mix of
/// one-sided, two-sided, equality and free rows; about `halfspaces`
/// one-sided inequalities in total. G x <= h is the same feasible set.
struct RandomQp {
  QuadraticProgram qp;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};
RandomQp random_feasible_qp(std::mt19937_64& rng, int halfspaces);

/// Exact minimizer of 1/2 x'Px + q'x s.t. G x <= h by enumerating every
/// active subset. P must be positive definite; feasible problems only.
struct OracleQpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  long subsets = 0;
};
OracleQpResult brute_force_qp(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                              const Eigen::MatrixXd& G, const Eigen::VectorXd& h);

/// Central difference of f at x along every coordinate.
Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step);

/// max_k |a_k - b_k| / max(1, |b|_inf)
double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace hitch::testing

#endif  // HITCH_TEST_SUPPORT_HPP_
