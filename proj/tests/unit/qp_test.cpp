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


#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "hitch/controller.hpp"
#include "hitch/errors.hpp"
#include "hitch/harness.hpp"
#include "hitch/qp.hpp"
#include "test_support.hpp"

namespace hitch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QuadraticProgram one_dim_clipped() {
  QuadraticProgram qp;
  qp.P = Eigen::MatrixXd::Constant(1, 1, 2.0);
  qp.q = Eigen::VectorXd::Constant(1, -2.0);
  qp.A = Eigen::MatrixXd::Ones(1, 1);
  qp.lo = Eigen::VectorXd::Constant(1, -kInf);
  qp.hi = Eigen::VectorXd::Zero(1);
  return qp;
}

TEST(SolveQp, ClippedUnconstrainedOptimum) {
  const QpSolution s = solve_qp(one_dim_clipped());
  ASSERT_EQ(s.status, QpStatus::Solved);
  EXPECT_NEAR(s.x(0), 0.0, 1e-6);
  EXPECT_NEAR(s.y(0), 2.0, 1e-6);  // upper bound active: y > 0
}

TEST(SolveQp, SymmetricHalfspace) {
  QuadraticProgram qp;
  qp.P = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  qp.q = Eigen::VectorXd::Zero(2);
  qp.A = Eigen::MatrixXd::Ones(1, 2);
  qp.lo = Eigen::VectorXd::Ones(1);
  qp.hi = Eigen::VectorXd::Constant(1, kInf);
  const QpSolution s = solve_qp(qp);
  ASSERT_EQ(s.status, QpStatus::Solved);
  EXPECT_NEAR(s.x(0), 0.5, 1e-6);
  EXPECT_NEAR(s.x(1), 0.5, 1e-6);
  EXPECT_LT(s.y(0), 0.0);  // lower bound active
}

TEST(SolveQp, DetectsPrimalInfeasibility) {
  QuadraticProgram qp;
  qp.P = Eigen::MatrixXd::Identity(1, 1);
  qp.q = Eigen::VectorXd::Zero(1);
  qp.A = Eigen::MatrixXd::Ones(2, 1);
  qp.lo = Eigen::Vector2d(-kInf, 1.0);
  qp.hi = Eigen::Vector2d(-1.0, kInf);
  EXPECT_EQ(solve_qp(qp).status, QpStatus::PrimalInfeasible);
}

TEST(SolveQp, DetectsUnboundedProgram) {
  QuadraticProgram qp;
  qp.P = Eigen::MatrixXd::Zero(2, 2);
  qp.q = Eigen::Vector2d(1.0, 0.0);
  qp.A = Eigen::MatrixXd::Zero(1, 2);
  qp.A(0, 1) = 1.0;
  qp.lo = Eigen::VectorXd::Constant(1, -1.0);
  qp.hi = Eigen::VectorXd::Constant(1, 1.0);
  EXPECT_EQ(solve_qp(qp).status, QpStatus::DualInfeasible);
}

TEST(QuadraticProgram, ValidateRejectsBadInput) {
  QuadraticProgram qp = one_dim_clipped();
  qp.q = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(qp.validate(), DimensionMismatch);
  qp = one_dim_clipped();
  qp.lo(0) = 1.0;
  EXPECT_THROW(qp.validate(), ConfigError);
  QuadraticProgram asym;
  asym.P = Eigen::Matrix2d{{1.0, 0.5}, {0.0, 1.0}};
  asym.q = Eigen::VectorXd::Zero(2);
  asym.A = Eigen::MatrixXd::Zero(0, 2);
  asym.lo = asym.hi = Eigen::VectorXd::Zero(0);
  EXPECT_THROW(asym.validate(), ConfigError);
}

TEST(SolveQp, MatchesActiveSetEnumeration) {
  std::mt19937_64 rng(20260101);
  std::uniform_int_distribution<int> mdist(1, 12);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const testing::RandomQp g = testing::random_feasible_qp(rng, mdist(rng));
    const QpSolution s = solve_qp(g.qp);
    ASSERT_EQ(s.status, QpStatus::Solved) << "program " << trial;
    const testing::OracleQpResult o = testing::brute_force_qp(g.qp.P, g.qp.q, g.G, g.h);
    ASSERT_TRUE(std::isfinite(o.objective));
    const double rel = std::abs(g.qp.objective(s.x) - o.objective) / std::max(1.0, std::abs(o.objective));
    worst = std::max(worst, rel);
    EXPECT_LT(rel, 1e-5) << "program " << trial;
    const KktResiduals r = kkt_residuals(g.qp, s.x, s.y);
    EXPECT_LT(r.primal, 1e-6);
    EXPECT_LT(r.dual, 1e-6);
    EXPECT_LT(r.complementarity, 1e-6);
  }
  RecordProperty("worst_relative_objective_gap", std::to_string(worst));
}

TEST(SolveQp, Deterministic) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const testing::RandomQp g = testing::random_feasible_qp(rng, 10);
    const QpSolution a = solve_qp(g.qp);
    const QpSolution b = solve_qp(g.qp);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.iterations, b.iterations);
  }
}

TEST(KktResiduals, SolvedTrivialProgram) {
  const QuadraticProgram qp = one_dim_clipped();
  const QpSolution s = solve_qp(qp);
  const KktResiduals r = kkt_residuals(qp, s.x, s.y);
  EXPECT_LT(r.primal, 1e-6);
  EXPECT_LT(r.dual, 1e-6);
  EXPECT_LT(r.complementarity, 1e-6);
  EXPECT_TRUE(kkt_satisfied(r, QpSettings{}));
}

TEST(KktResiduals, PerturbedActiveConstraint) {
  const QuadraticProgram qp = one_dim_clipped();
  const QpSolution s = solve_qp(qp);
  Eigen::VectorXd x = s.x;
  x(0) += 0.1;
  EXPECT_GE(kkt_residuals(qp, x, s.y).primal, 0.1 - 1e-9);
  EXPECT_THROW(kkt_residuals(qp, Eigen::VectorXd::Zero(2), s.y), DimensionMismatch);
}

TEST(KktResiduals, MatchIndependentRecomputation) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const testing::RandomQp g = testing::random_feasible_qp(rng, 8);
    const QuadraticProgram& qp = g.qp;
    const Eigen::VectorXd x = testing::random_vector(rng, qp.num_vars(), 2.0);
    const Eigen::VectorXd y = testing::random_vector(rng, qp.num_constraints(), 2.0);
    const KktResiduals r = kkt_residuals(qp, x, y);

    double primal = 0.0, comp = 0.0;
    Eigen::VectorXd grad = qp.P * x + qp.q;
    for (int i = 0; i < qp.num_constraints(); ++i) {
      const double ax = qp.A.row(i).dot(x);
      primal = std::max({primal, ax - qp.hi(i), qp.lo(i) - ax});
      grad += qp.A.row(i).transpose() * y(i);
      const double bound = y(i) > 0 ? qp.hi(i) : qp.lo(i);
      const double c = std::isfinite(bound) ? std::min(std::abs(y(i)), std::abs(ax - bound))
                                            : std::abs(y(i));
      comp = std::max(comp, c);
    }
    EXPECT_NEAR(r.primal, primal, 1e-12);
    EXPECT_NEAR(r.dual, grad.lpNorm<Eigen::Infinity>(), 1e-10 * (1 + grad.norm()));
    EXPECT_NEAR(r.complementarity, comp, 1e-12);
  }
}

TEST(QpSolver, WarmStartAgreesWithColdStartOnControllerStream) {
  ScenarioConfig cfg = ScenarioConfig::defaults(Experiment::Static);
  const TrialSetup setup = make_trial_setup(cfg, derive_seed(cfg.seed, 0));
  Controller controller(cfg.params, cfg.gains, make_trajectory(cfg, setup.reference, 0.0),
                        cfg.qp);
  Plant plant(cfg.params, Disturbance{});
  QpSolver warm(cfg.qp);
  QpSolver cold(cfg.qp);
  SystemState s = setup.initial;
  for (int k = 0; k < 400; ++k) {
    s.time = k * cfg.dt;
    const ControlOutput out = controller.compute_input(s);
    const QuadraticProgram qp = assemble_qp(s, cfg.params, cfg.gains, out.diag.robot_ref,
                                            out.diag.robot_vel_ref);
    const QpSolution a = warm.solve(qp, true);
    const QpSolution b = cold.solve(qp, false);
    ASSERT_EQ(a.status, QpStatus::Solved);
    ASSERT_EQ(b.status, QpStatus::Solved);
    EXPECT_LE((a.x - b.x).norm(), 1e-5 * std::max(1.0, b.x.norm())) << "step " << k;
    EXPECT_TRUE(kkt_satisfied(kkt_residuals(qp, a.x, a.y), cfg.qp));
    s = plant.step(s, out.u, cfg.dt).state;
  }
}

}  // namespace
}  // namespace hitch
