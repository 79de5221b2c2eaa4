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
#include <random>

#include <gtest/gtest.h>

#include "hitch/controller.hpp"
#include "hitch/dynamics.hpp"
#include "hitch/errors.hpp"
#include "test_support.hpp"

namespace hitch {
namespace {

using testing::random_state;
using testing::random_vector;
using testing::rel_error;

Eigen::VectorXd stack_accels(const Accelerations& a) {
  const int n = static_cast<int>(a.hitch.size());
  Eigen::VectorXd v(5 * n);
  v.head(n) = a.hitch;
  for (int i = 0; i < 4; ++i) v.segment((1 + i) * n, n) = a.robots[i];
  return v;
}

TEST(TensionSystem, ConfigSRows) {
  const Vec z = Vec::Zero(3);
  const TensionSystem sys = assemble_tension_system(config_s_state(), config_s_params(), z, z);
  const Eigen::Vector4d row1(1.778571, 0, -1.75, 0);
  const Eigen::Vector4d row2(-1.75, 0, 1.778571, 0);
  EXPECT_LT((sys.M.row(0).transpose() - row1).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LT((sys.M.row(1).transpose() - row2).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_NEAR(sys.M(0, 0), 1.75 + 1.0 / 35.0, 1e-14);
  EXPECT_EQ(sys.w.norm(), 0.0);
}

TEST(TensionSystem, EqualityRowsAreConstant) {
  std::mt19937_64 rng(29);
  const SystemParameters p = config_s_params();
  Eigen::Matrix<double, 2, 4> expected;
  expected << 1, -1, 0, 0, 0, 0, 1, -1;
  for (int k = 0; k < 100; ++k) {
    const SystemState s = random_state(rng, p, 1.0);
    const TensionSystem sys = assemble_tension_system(s, p, random_vector(rng, 3), random_vector(rng, 3));
    EXPECT_EQ(Eigen::MatrixXd(sys.M.bottomRows<2>()), Eigen::MatrixXd(expected));
    EXPECT_EQ(sys.w.tail<2>().norm(), 0.0);
    EXPECT_EQ(sys.C.bottomRows(2).norm(), 0.0);
  }
}

TEST(SolveTension, NominalInputAtConfigS) {
  const SystemParameters p = config_s_params();
  const SystemState s = config_s_state();
  const Vec z = Vec::Zero(3);
  const TensionSystem sys = assemble_tension_system(s, p, z, z);
  const Eigen::Vector4d t = solve_tension(sys, nominal_input(s, p, 0.1));
  EXPECT_LT((t - Eigen::Vector4d::Constant(0.1)).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_EQ(solve_tension(sys, Eigen::VectorXd::Zero(12)).norm(), 0.0);
}

TEST(SolveTension, WrongInputLengthThrows) {
  const Vec z = Vec::Zero(3);
  const TensionSystem sys = assemble_tension_system(config_s_state(), config_s_params(), z, z);
  EXPECT_THROW(solve_tension(sys, Eigen::VectorXd::Zero(9)), DimensionMismatch);
}

TEST(SolveTension, NearlySingularSystemThrows) {
  SystemParameters p = config_s_params();
  p.hitch_mass = 1e-15;
  const Vec z = Vec::Zero(3);
  const TensionSystem sys = assemble_tension_system(config_s_state(), p, z, z);
  EXPECT_THROW(solve_tension(sys, Eigen::VectorXd::Zero(12)), IllConditionedTensionSystem);
}

TEST(SolveTension, MatchesIndependentConstraintAssembly) {
  std::mt19937_64 rng(31);
  for (int dim : {2, 3}) {
    SystemParameters p = config_s_params();
    p.dim = dim;
    for (int k = 0; k < 1000; ++k) {
      const SystemState s = random_state(rng, p, 1.0);
      const Eigen::VectorXd u = random_vector(rng, 4 * dim, 5.0);
      const Vec f_d = -p.damping * s.hitch_vel;
      const Vec f_ext = random_vector(rng, dim, 3.0);
      const Eigen::Vector4d t = solve_tension(assemble_tension_system(s, p, f_d, f_ext), u);
      const Eigen::Vector4d oracle = testing::oracle_tension(s, p, u, f_d + f_ext);
      EXPECT_LT((t - oracle).lpNorm<Eigen::Infinity>(),
                1e-8 * std::max(1.0, oracle.lpNorm<Eigen::Infinity>()))
          << "case " << k;
      EXPECT_NEAR(t(0), t(1), 1e-10 * std::max(1.0, std::abs(t(0))));
      EXPECT_NEAR(t(2), t(3), 1e-10 * std::max(1.0, std::abs(t(2))));
    }
  }
}

TEST(Accelerations, EquilibriumAndRest) {
  const SystemParameters p = config_s_params();
  const SystemState s = config_s_state();
  const Vec z = Vec::Zero(3);
  const Accelerations a = accelerations(s, p, nominal_input(s, p, 0.1),
                                        Eigen::Vector4d::Constant(0.1), z, z);
  EXPECT_LT(stack_accels(a).lpNorm<Eigen::Infinity>(), 1e-15);
  const Accelerations b =
      accelerations(s, p, Eigen::VectorXd::Zero(12), Eigen::Vector4d::Zero(), z, z);
  EXPECT_EQ(stack_accels(b).norm(), 0.0);
}

TEST(Accelerations, SatisfyConstraintAcceleration) {
  std::mt19937_64 rng(37);
  const SystemParameters p = config_s_params();
  for (int k = 0; k < 1000; ++k) {
    const SystemState s = random_state(rng, p, 1.0);
    const Eigen::VectorXd u = random_vector(rng, 12, 5.0);
    const Vec f_d = -p.damping * s.hitch_vel;
    const Vec f_ext = random_vector(rng, 3, 3.0);
    const Eigen::Vector4d t = solve_tension(assemble_tension_system(s, p, f_d, f_ext), u);
    const Accelerations a = accelerations(s, p, u, t, f_d, f_ext);
    const ConstraintMatrices c = constraint_matrices(s, p, a.robots);
    const Eigen::Vector2d lhs = c.N * a.hitch;
    EXPECT_LT((lhs - c.b).lpNorm<Eigen::Infinity>(),
              1e-8 * std::max(1.0, c.b.lpNorm<Eigen::Infinity>()));
  }
}

TEST(InputMatrix, ColumnsReproduceInputResponse) {
  std::mt19937_64 rng(41);
  const SystemParameters p = config_s_params();
  const Vec z = Vec::Zero(3);
  for (int k = 0; k < 300; ++k) {
    const SystemState s = random_state(rng, p, 0.0);
    const Eigen::VectorXd u = random_vector(rng, 12, 5.0);
    const TensionSystem sys = assemble_tension_system(s, p, z, z);
    const Eigen::Vector4d t = sys.M.fullPivLu().solve(sys.C * u);
    const Eigen::VectorXd expected = stack_accels(accelerations(s, p, u, t, z, z));
    const InputMatrix b = input_matrix(s, p);
    EXPECT_LT(rel_error(b.nonzero * u, expected), 1e-9);
    const Eigen::MatrixXd full = full_input_matrix(b);
    EXPECT_EQ(full.rows(), 30);
    EXPECT_EQ(full.topRows(15).norm(), 0.0);
  }
}

TEST(InputMatrix, HitchBlockRankDeficientIn3D) {
  const SystemParameters p = config_s_params();
  const auto smallest = [](const Eigen::MatrixXd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().tail(1)(0);
  };
  EXPECT_LT(smallest(input_matrix(config_s_state(), p).hitch), 1e-10);
  std::mt19937_64 rng(43);
  for (int k = 0; k < 500; ++k) {
    const SystemState s = random_state(rng, p, 0.0);
    EXPECT_LT(smallest(input_matrix(s, p).hitch), 1e-10);
  }
}

TEST(InputMatrix, NominalInputLiesInNullSpaceAtCotangentEquilibrium) {
  // The nominal input cancels every tension exactly, so at a cotangent
  // equilibrium it produces no acceleration at all and B loses full column
  // rank.
  const SystemParameters p = config_s_params();
  const SystemState s = config_s_state();
  const InputMatrix b = input_matrix(s, p);
  const Eigen::VectorXd u = nominal_input(s, p, 0.1);
  EXPECT_LT((b.nonzero * u).norm(), 1e-12 * u.norm());
  const auto sv = Eigen::JacobiSVD<Eigen::MatrixXd>(b.nonzero).singularValues();
  EXPECT_LT(sv.tail(1)(0), 1e-10);
  EXPECT_NEAR(sv(sv.size() - 2), 1.0 / 0.35, 1e-9);
}

TEST(Drift, ConfigSAtRestHasNoAcceleration) {
  const Eigen::VectorXd h = drift(config_s_state(), config_s_params(), false);
  EXPECT_EQ(h.norm(), 0.0);
}

TEST(Drift, AffineDecompositionMatchesNewton) {
  std::mt19937_64 rng(47);
  for (int dim : {2, 3}) {
    SystemParameters p = config_s_params();
    p.dim = dim;
    for (int k = 0; k < 1000; ++k) {
      const SystemState s = random_state(rng, p, 1.0);
      const Eigen::VectorXd u = random_vector(rng, 4 * dim, 5.0);
      const ControlAffineModel m = control_affine_model(s, p);
      const Eigen::VectorXd direct = testing::oracle_derivative(s, p, u, Vec::Zero(dim));
      EXPECT_LT(rel_error(m.h + m.B * u, direct), 1e-9) << "case " << k;
      EXPECT_LT(rel_error(drift(s, p, false) + full_input_matrix(input_matrix(s, p)) * u, direct),
                1e-9);
    }
  }
}

TEST(Drift, DampingTerm) {
  const SystemParameters p = config_s_params();
  SystemState s = config_s_state();
  s.hitch_vel << 1.0, 0.0, 0.0;
  const Eigen::VectorXd h = drift(s, p, true);
  EXPECT_NEAR(h(15), -40.0, 1e-12);
  const Eigen::VectorXd oracle = testing::oracle_derivative(
      s, p, Eigen::VectorXd::Zero(12), Vec(-p.damping * s.hitch_vel));
  EXPECT_LT(rel_error(h, oracle), 1e-12);
  // The controller's model leaves the damping out.
  EXPECT_NEAR(drift(s, p, false)(15), 0.0, 1e-12);
}

TEST(Drift, DeterministicExternalForce) {
  const SystemParameters p = config_s_params();
  SystemState s = config_s_state();
  s.time = 2.0;
  Disturbance d;
  d.external_force = [](double t) { return Vec(Eigen::Vector3d(t, 0, 0)); };
  const Eigen::VectorXd h = drift(s, p, true, &d);
  EXPECT_NEAR(h(15), 2.0 / p.hitch_mass, 1e-9);
}

TEST(EulerStep, EquilibriumHold) {
  const SystemParameters p = config_s_params();
  SystemState s = config_s_state();
  const Eigen::VectorXd u = nominal_input(s, p, 0.1);
  Plant plant(p, Disturbance{});
  for (int k = 0; k < 1000; ++k) {
    const StepResult r = plant.step(s, u, 0.005);
    EXPECT_LT((r.tension - Eigen::Vector4d::Constant(0.1)).lpNorm<Eigen::Infinity>(), 1e-12);
    s = r.state;
  }
  EXPECT_LT((s.hitch - config_s_state().hitch).norm(), 1e-6);
  EXPECT_NEAR(s.time, 5.0, 1e-9);
}

TEST(EulerStep, TranslationIsBallistic) {
  SystemParameters p = config_s_params();
  p.damping = 0.0;
  SystemState s = config_s_state();
  const Vec v = Eigen::Vector3d(0.3, -0.2, 0.1);
  s.hitch_vel = v;
  for (auto& rv : s.robot_vel) rv = v;
  const StepResult r = euler_step(s, p, Eigen::VectorXd::Zero(12), 0.01, Vec::Zero(3));
  EXPECT_LT(r.tension.lpNorm<Eigen::Infinity>(), 1e-14);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT((r.state.robots[i] - (s.robots[i] + 0.01 * v)).norm(), 1e-14);
    EXPECT_LT((r.state.robot_vel[i] - v).norm(), 1e-14);
  }
  EXPECT_LT((r.state.hitch - (s.hitch + 0.01 * v)).norm(), 1e-14);
}

TEST(EulerStep, RejectsNonPositiveStep) {
  EXPECT_THROW(euler_step(config_s_state(), config_s_params(), Eigen::VectorXd::Zero(12), 0.0,
                          Vec::Zero(3)),
               ConfigError);
}

TEST(EulerStep, StepsStayOnConstraintManifold) {
  std::mt19937_64 rng(53);
  const SystemParameters p = config_s_params();
  for (int k = 0; k < 200; ++k) {
    const SystemState s = random_state(rng, p, 0.5, 1.0);
    const StepResult r =
        euler_step(s, p, random_vector(rng, 12, 2.0), 0.005, random_vector(rng, 3, 1.0));
    EXPECT_LT(kinematic_residuals(r.state, p).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(Plant, SeededNoiseIsReproducible) {
  const SystemParameters p = config_s_params();
  Disturbance d;
  d.noise_std = 0.5;
  d.seed = 99;
  const auto run = [&] {
    Plant plant(p, d);
    SystemState s = config_s_state();
    const Eigen::VectorXd u = nominal_input(s, p, 0.1);
    std::vector<Eigen::VectorXd> out;
    for (int k = 0; k < 40; ++k) {
      s = plant.step(s, u, 0.005).state;
      out.push_back(s.stacked());
    }
    return out;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k], b[k]);
  EXPECT_GT((a.back().head(3) - config_s_state().hitch).norm(), 0.0);
}

TEST(Plant, RejectsNegativeNoise) {
  Disturbance d;
  d.noise_std = -1.0;
  EXPECT_THROW(Plant(config_s_params(), d), ConfigError);
}

}  // namespace
}  // namespace hitch
