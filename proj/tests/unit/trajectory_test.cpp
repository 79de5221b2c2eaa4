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

#include <gtest/gtest.h>

#include "hitch/errors.hpp"
#include "hitch/trajectory.hpp"

namespace hitch {
namespace {

ReferenceConfiguration base() {
  return measured_configuration(config_s_state(), config_s_params());
}

TEST(ConsistentNormalNorm, ConfigS) {
  EXPECT_NEAR(consistent_normal_norm(3.0, 4.0), std::sqrt(1.75), 1e-15);
  EXPECT_NEAR(consistent_normal_norm(0.0, 4.0), 2.0, 1e-15);
  EXPECT_EQ(consistent_normal_norm(4.0, 4.0), 0.0);
}

TEST(MeasuredConfiguration, ConfigS) {
  const ReferenceConfiguration c = base();
  EXPECT_LT((c.hitch - Vec(Eigen::Vector3d(0, 0, 1))).norm(), 1e-15);
  EXPECT_NEAR(c.normal[0](2), -std::sqrt(1.75), 1e-14);
  EXPECT_NEAR(c.normal[1](2), std::sqrt(1.75), 1e-14);
  EXPECT_NEAR(c.axis[0], 3.0, 1e-15);
  EXPECT_NEAR(c.axis[1], 3.0, 1e-15);
  EXPECT_NO_THROW(c.validate(config_s_params()));
}

TEST(ReferenceConfiguration, ValidateRejectsOutOfRange) {
  const SystemParameters p = config_s_params();
  ReferenceConfiguration c = base();
  c.axis[1] = 4.0;
  EXPECT_THROW(c.validate(p), ConfigError);
  c = base();
  c.normal[0] = Vec::Zero(3);
  EXPECT_THROW(c.validate(p), ConfigError);
  c = base();
  c.normal[0] = Vec(Eigen::Vector3d(0, 0, 2.0));
  EXPECT_THROW(c.validate(p), ConfigError);
  c = base();
  c.hitch = Vec::Zero(2);
  EXPECT_THROW(c.validate(p), DimensionMismatch);
}

TEST(ReferenceTrajectory, StaticAndLinear) {
  const auto fixed = ReferenceTrajectory::fixed(base());
  EXPECT_EQ(fixed.kind(), TrajectoryKind::Static);
  EXPECT_EQ(fixed.speed(), 0.0);
  EXPECT_EQ((fixed.evaluate(3.0).hitch - base().hitch).norm(), 0.0);

  const Vec v = Eigen::Vector3d(0.1, 0.0, 0.0);
  const auto line = ReferenceTrajectory::linear(base(), v);
  EXPECT_NEAR(line.speed(), 0.1, 1e-15);
  const ReferenceConfiguration c = line.evaluate(2.0);
  EXPECT_NEAR(c.hitch(0), 0.2, 1e-15);
  EXPECT_EQ(c.hitch_rate, v);
  EXPECT_EQ(c.axis, base().axis);
  EXPECT_THROW(ReferenceTrajectory::linear(base(), Vec::Zero(2)), DimensionMismatch);
}

TEST(ReferenceTrajectory, LissajousStartsAtBaseAndHasRequestedMeanSpeed) {
  const double speed = 0.3;
  const auto traj = ReferenceTrajectory::lissajous(base(), speed);
  EXPECT_LT((traj.evaluate(0.0).hitch - base().hitch).norm(), 1e-15);

  // Arc length over one period by the trapezoid rule on the analytic rate.
  const double period = 2.0 * M_PI / traj.omega();
  const int steps = 200000;
  double length = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double a = traj.evaluate(period * k / steps).hitch_rate.norm();
    const double b = traj.evaluate(period * (k + 1) / steps).hitch_rate.norm();
    length += 0.5 * (a + b) * period / steps;
  }
  EXPECT_NEAR(length / period, speed, 1e-6);
  EXPECT_LT((traj.evaluate(period).hitch - base().hitch).norm(), 1e-9);
}

TEST(ReferenceTrajectory, LissajousRateIsDerivativeOfPath) {
  const auto traj = ReferenceTrajectory::lissajous(base(), 0.7);
  const double h = 1e-5;
  for (double t : {0.0, 1.1, 4.7, 13.2}) {
    const Vec fd = (traj.evaluate(t + h).hitch - traj.evaluate(t - h).hitch) / (2 * h);
    EXPECT_LT((fd - traj.evaluate(t).hitch_rate).norm(), 1e-8);
  }
}

TEST(ReferenceTrajectory, NegativeSpeedRejected) {
  EXPECT_THROW(ReferenceTrajectory::lissajous(base(), -0.1), ConfigError);
}

TEST(LissajousPeriodLength, Circle) {
  // A unit circle in the first two axes.
  const double len = lissajous_period_length({1.0, 1.0, 0.0}, {1.0, 1.0, 1.0},
                                             {0.0, M_PI / 2, 0.0}, 3);
  EXPECT_NEAR(len, 2.0 * M_PI, 1e-10);
}

TEST(TrajectoryKind, NamesRoundTrip) {
  for (auto k : {TrajectoryKind::Static, TrajectoryKind::Linear, TrajectoryKind::Lissajous}) {
    EXPECT_EQ(trajectory_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(trajectory_kind_from_string("spiral"), ConfigError);
}

}  // namespace
}  // namespace hitch
