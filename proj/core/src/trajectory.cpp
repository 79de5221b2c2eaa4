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

#include "hitch/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "hitch/errors.hpp"

namespace hitch {
namespace {

constexpr int kArcLengthSamples = 20000;

}  // namespace

void ReferenceConfiguration::validate(const SystemParameters& params) const {
  const int n = params.dim;
  if (hitch.size() != n || normal[0].size() != n || normal[1].size() != n) {
    throw DimensionMismatch("reference dimension does not match parameters");
  }
  for (int c = 0; c < 2; ++c) {
    const double nn = normal[c].norm();
    if (!(nn > kNormalEpsilon && nn < 2.0 - kNormalEpsilon)) {
      throw ConfigError("reference normal magnitude must lie in (0, 2)");
    }
    if (!(axis[c] > 0.0 && axis[c] < params.cable_length[c])) {
      throw ConfigError("reference axis length must lie in (0, l)");
    }
  }
  if (!hitch.allFinite()) throw ConfigError("reference hitch is not finite");
}

double consistent_normal_norm(double axis, double length) {
  const double ratio = axis / length;
  return std::sqrt(std::max(0.0, 4.0 - 4.0 * ratio * ratio));
}

ReferenceConfiguration measured_configuration(const SystemState& state,
                                              const SystemParameters& params) {
  const SegmentFrame f = segment_frames(state, params);
  ReferenceConfiguration c;
  c.hitch = state.hitch;
  c.normal = {f.normal12, f.normal34};
  c.axis = {(state.robots[0] - state.robots[1]).norm(),
            (state.robots[2] - state.robots[3]).norm()};
  c.hitch_rate = state.hitch_vel;
  return c;
}

std::string_view to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Static: return "static";
    case TrajectoryKind::Linear: return "linear";
    case TrajectoryKind::Lissajous: return "lissajous";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(std::string_view name) {
  if (name == "static") return TrajectoryKind::Static;
  if (name == "linear") return TrajectoryKind::Linear;
  if (name == "lissajous") return TrajectoryKind::Lissajous;
  throw ConfigError("unknown trajectory kind '" + std::string(name) + "'");
}

double lissajous_period_length(const Eigen::Vector3d& amplitude,
                               const Eigen::Vector3d& frequency,
                               const Eigen::Vector3d& phase, int dim) {
  // Midpoint rule; the integrand is smooth and periodic so this converges
  // spectrally.
  const double h = 2.0 * M_PI / kArcLengthSamples;
  double total = 0.0;
  for (int k = 0; k < kArcLengthSamples; ++k) {
    const double s = (k + 0.5) * h;
    double sq = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double v = amplitude(a) * frequency(a) * std::cos(frequency(a) * s + phase(a));
      sq += v * v;
    }
    total += std::sqrt(sq);
  }
  return total * h;
}

ReferenceTrajectory ReferenceTrajectory::fixed(ReferenceConfiguration base) {
  ReferenceTrajectory t;
  t.kind_ = TrajectoryKind::Static;
  t.base_ = std::move(base);
  t.velocity_ = Vec::Zero(t.base_.hitch.size());
  t.base_.hitch_rate = t.velocity_;
  return t;
}

ReferenceTrajectory ReferenceTrajectory::linear(ReferenceConfiguration base,
                                                const Vec& velocity) {
  if (velocity.size() != base.hitch.size()) {
    throw DimensionMismatch("linear reference velocity has wrong dimension");
  }
  ReferenceTrajectory t;
  t.kind_ = TrajectoryKind::Linear;
  t.base_ = std::move(base);
  t.velocity_ = velocity;
  t.speed_ = velocity.norm();
  return t;
}

ReferenceTrajectory ReferenceTrajectory::lissajous(ReferenceConfiguration base,
                                                   double speed,
                                                   const Eigen::Vector3d& amplitude,
                                                   const Eigen::Vector3d& frequency,
                                                   const Eigen::Vector3d& phase) {
  if (!(speed >= 0.0)) throw ConfigError("reference speed must be non-negative");
  const int dim = static_cast<int>(base.hitch.size());
  const double length = lissajous_period_length(amplitude, frequency, phase, dim);
  if (!(length > 0.0)) throw ConfigError("Lissajous path has zero length");
  ReferenceTrajectory t;
  t.kind_ = TrajectoryKind::Lissajous;
  t.base_ = std::move(base);
  t.velocity_ = Vec::Zero(dim);
  t.amplitude_ = amplitude;
  t.frequency_ = frequency;
  t.phase_ = phase;
  t.omega_ = 2.0 * M_PI * speed / length;
  t.speed_ = speed;
  return t;
}

double ReferenceTrajectory::speed() const { return speed_; }

ReferenceConfiguration ReferenceTrajectory::evaluate(double time) const {
  ReferenceConfiguration c = base_;
  const auto dim = base_.hitch.size();
  switch (kind_) {
    case TrajectoryKind::Static:
      c.hitch_rate = Vec::Zero(dim);
      break;
    case TrajectoryKind::Linear:
      c.hitch = base_.hitch + velocity_ * time;
      c.hitch_rate = velocity_;
      break;
    case TrajectoryKind::Lissajous:
      c.hitch_rate = Vec::Zero(dim);
      for (Eigen::Index a = 0; a < dim; ++a) {
        const double arg = frequency_(a) * omega_ * time + phase_(a);
        // Offset by the value at t = 0 so the path starts at base.hitch.
        c.hitch(a) += amplitude_(a) * (std::sin(arg) - std::sin(phase_(a)));
        c.hitch_rate(a) = amplitude_(a) * frequency_(a) * omega_ * std::cos(arg);
      }
      break;
  }
  return c;
}

}  // namespace hitch
