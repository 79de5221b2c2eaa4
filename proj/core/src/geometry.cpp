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

#include "hitch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "hitch/errors.hpp"

namespace hitch {
namespace {

// Minimum |d1 x d2| accepted by the sampler; below it the winding plane used
// by the reference mapping is numerically undefined.
constexpr double kMinWindingSine = 0.05;
constexpr double kMinSampledNormal = 0.3;
constexpr int kMaxRejections = 1000;

void check_dim(const SystemState& state, const SystemParameters& params) {
  const int n = params.dim;
  bool ok = state.hitch.size() == n && state.hitch_vel.size() == n;
  for (int i = 0; i < 4; ++i) {
    ok = ok && state.robots[i].size() == n && state.robot_vel[i].size() == n;
  }
  if (!ok) {
    throw DimensionMismatch("state dimension does not match parameters (n=" +
                            std::to_string(n) + ")");
  }
}

Eigen::Matrix2d regularized_gram(const NormalMatrix& N, double reg) {
  return N * N.transpose() + reg * Eigen::Matrix2d::Identity();
}

Vec random_direction(std::mt19937_64& rng, int dim) {
  if (dim == 2) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    const double a = angle(rng);
    Vec d(2);
    d << std::cos(a), std::sin(a);
    return d;
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec d(3);
  do {
    d << gauss(rng), gauss(rng), gauss(rng);
  } while (d.norm() < 1e-12);
  return d.normalized();
}

bool inside_cone(const Vec& d, const std::optional<DirectionCone>& cone) {
  if (!cone) return true;
  const double c = d.dot(cone->axis.normalized());
  return std::acos(std::clamp(c, -1.0, 1.0)) <= cone->half_angle;
}

}  // namespace

void SystemParameters::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
  for (double l : cable_length) {
    if (!(l > 0.0)) throw ConfigError("cable lengths must be positive");
  }
  for (double mi : robot_mass) {
    if (!(mi > 0.0)) throw ConfigError("robot masses must be positive");
  }
  if (!(hitch_mass > 0.0)) throw ConfigError("hitch mass must be positive");
  if (!(damping >= 0.0)) throw ConfigError("damping must be non-negative");
}

SystemState SystemState::zeros(int dim) {
  SystemState s;
  s.hitch = Vec::Zero(dim);
  s.hitch_vel = Vec::Zero(dim);
  for (int i = 0; i < 4; ++i) {
    s.robots[i] = Vec::Zero(dim);
    s.robot_vel[i] = Vec::Zero(dim);
  }
  return s;
}

bool SystemState::is_finite() const {
  bool ok = hitch.allFinite() && hitch_vel.allFinite() && std::isfinite(time);
  for (int i = 0; i < 4; ++i) {
    ok = ok && robots[i].allFinite() && robot_vel[i].allFinite();
  }
  return ok;
}

Eigen::VectorXd SystemState::stacked() const {
  const int n = dim();
  Eigen::VectorXd x(10 * n);
  x.segment(0, n) = hitch;
  for (int i = 0; i < 4; ++i) x.segment((1 + i) * n, n) = robots[i];
  x.segment(5 * n, n) = hitch_vel;
  for (int i = 0; i < 4; ++i) x.segment((6 + i) * n, n) = robot_vel[i];
  return x;
}

SystemState SystemState::from_stacked(const Eigen::VectorXd& x, int dim,
                                      double time) {
  if (x.size() != 10 * dim) {
    throw DimensionMismatch("stacked state must have length 10n");
  }
  SystemState s;
  s.hitch = x.segment(0, dim);
  for (int i = 0; i < 4; ++i) s.robots[i] = x.segment((1 + i) * dim, dim);
  s.hitch_vel = x.segment(5 * dim, dim);
  for (int i = 0; i < 4; ++i) s.robot_vel[i] = x.segment((6 + i) * dim, dim);
  s.time = time;
  return s;
}

Eigen::Vector2d SegmentFrame::velocity_products() const {
  return {dir_rate[0].dot(r_rate[0]) + dir_rate[1].dot(r_rate[1]),
          dir_rate[2].dot(r_rate[2]) + dir_rate[3].dot(r_rate[3])};
}

SegmentFrame segment_frames(const SystemState& state,
                            const SystemParameters& params) {
  check_dim(state, params);
  const int n = params.dim;
  SegmentFrame f;
  for (int i = 0; i < 4; ++i) {
    f.r[i] = state.hitch - state.robots[i];
    f.r_rate[i] = state.hitch_vel - state.robot_vel[i];
    f.length[i] = f.r[i].norm();
    if (!(f.length[i] > kSegmentEpsilon)) throw DegenerateSegment(i);
    f.dir[i] = f.r[i] / f.length[i];
    // (I - d d^T) dr / |r|
    f.dir_rate[i] =
        (f.r_rate[i] - f.dir[i] * f.dir[i].dot(f.r_rate[i])) / f.length[i];
  }
  f.normal12 = f.dir[0] + f.dir[1];
  f.normal34 = f.dir[2] + f.dir[3];
  f.N.resize(2, n);
  f.N.row(0) = f.normal12.transpose();
  f.N.row(1) = f.normal34.transpose();
  return f;
}

Eigen::Vector2d kinematic_residuals(const SystemState& state,
                                    const SystemParameters& params) {
  check_dim(state, params);
  const auto dist = [&](int i) { return (state.hitch - state.robots[i]).norm(); };
  return {dist(0) + dist(1) - params.cable_length[0],
          dist(2) + dist(3) - params.cable_length[1]};
}

ConstraintMatrices constraint_matrices(const SystemState& state,
                                       const SystemParameters& params,
                                       const Points4& robot_accels) {
  const SegmentFrame f = segment_frames(state, params);
  ConstraintMatrices out;
  out.N = f.N;
  const Eigen::Vector2d vp = f.velocity_products();
  out.b(0) = f.dir[0].dot(robot_accels[0]) + f.dir[1].dot(robot_accels[1]) - vp(0);
  out.b(1) = f.dir[2].dot(robot_accels[2]) + f.dir[3].dot(robot_accels[3]) - vp(1);
  return out;
}

bool FeasibilityReport::ok() const {
  for (bool s : segment_ok) {
    if (!s) return false;
  }
  return !normal12_degenerate && !normal34_degenerate;
}

FeasibilityReport feasibility_report(const SystemState& state,
                                     const SystemParameters& params,
                                     double margin) {
  check_dim(state, params);
  FeasibilityReport rep;
  Points4 dir;
  bool dir_ok[4];
  for (int i = 0; i < 4; ++i) {
    const Vec r = state.hitch - state.robots[i];
    rep.length[i] = r.norm();
    const double l = params.segment_cable_length(i);
    rep.segment_ok[i] = rep.length[i] > margin && rep.length[i] < l - margin;
    dir_ok[i] = rep.length[i] > kSegmentEpsilon;
    dir[i] = dir_ok[i] ? Vec(r / rep.length[i]) : Vec(Vec::Zero(params.dim));
  }
  rep.normal12_degenerate =
      !(dir_ok[0] && dir_ok[1]) || (dir[0] + dir[1]).norm() < kNormalEpsilon;
  rep.normal34_degenerate =
      !(dir_ok[2] && dir_ok[3]) || (dir[2] + dir[3]).norm() < kNormalEpsilon;
  return rep;
}

namespace {

// Constraint Jacobian over all positions is [n_c^T | -dir_i^T ...]. Scaled by
// the inverse masses its Gram matrix stays well conditioned even where N
// loses rank, because each cable owns its own pair of robots.
Eigen::Matrix2d mass_weighted_gram(const SegmentFrame& f,
                                   const SystemParameters& params) {
  const double wh = 1.0 / params.hitch_mass;
  Eigen::Matrix2d G = wh * f.N * f.N.transpose();
  for (int i = 0; i < 4; ++i) G(i / 2, i / 2) += 1.0 / params.robot_mass[i];
  return G;
}

// Applies x <- x + W^-1 J^T y over hitch and robots (positions or velocities).
void apply_mass_weighted(const SegmentFrame& f, const SystemParameters& params,
                         const Eigen::Vector2d& y, Vec& hitch, Points4& robots) {
  hitch += (f.N.transpose() * y) / params.hitch_mass;
  for (int i = 0; i < 4; ++i) {
    robots[i] -= f.dir[i] * (y(i / 2) / params.robot_mass[i]);
  }
}

SystemState project_all_bodies(const SystemState& state,
                               const SystemParameters& params,
                               const ProjectionOptions& options) {
  SystemState out = state;
  Eigen::Vector2d g = kinematic_residuals(out, params);
  for (int iter = 0; g.lpNorm<Eigen::Infinity>() >= options.tolerance; ++iter) {
    if (iter == options.max_iterations || !g.allFinite()) {
      throw ProjectionDiverged("kinematic residual " +
                               std::to_string(g.lpNorm<Eigen::Infinity>()) +
                               " after " + std::to_string(iter) +
                               " mass-weighted iterations");
    }
    const SegmentFrame f = segment_frames(out, params);
    const Eigen::Vector2d y = mass_weighted_gram(f, params).ldlt().solve(-g);
    apply_mass_weighted(f, params, y, out.hitch, out.robots);
    g = kinematic_residuals(out, params);
  }
  if (options.time_step > 0.0) {
    out.hitch_vel += (out.hitch - state.hitch) / options.time_step;
    for (int i = 0; i < 4; ++i) {
      out.robot_vel[i] += (out.robots[i] - state.robots[i]) / options.time_step;
    }
  }
  const SegmentFrame f = segment_frames(out, params);
  Eigen::Vector2d rhs;
  rhs(0) = f.dir[0].dot(out.robot_vel[0]) + f.dir[1].dot(out.robot_vel[1]);
  rhs(1) = f.dir[2].dot(out.robot_vel[2]) + f.dir[3].dot(out.robot_vel[3]);
  const Eigen::Vector2d mismatch = rhs - f.N * out.hitch_vel;
  const Eigen::Vector2d y = mass_weighted_gram(f, params).ldlt().solve(mismatch);
  apply_mass_weighted(f, params, y, out.hitch_vel, out.robot_vel);
  return out;
}

}  // namespace

SystemState project_state(const SystemState& state,
                          const SystemParameters& params,
                          const ProjectionOptions& options) {
  if (options.move_robots) return project_all_bodies(state, params, options);
  SystemState out = state;
  Eigen::Vector2d g = kinematic_residuals(out, params);
  double g_norm = g.lpNorm<Eigen::Infinity>();
  double damping = options.regularization;
  int iter = 0;
  while (g_norm >= options.tolerance) {
    if (iter == options.max_iterations || !g.allFinite()) {
      throw ProjectionDiverged("kinematic residual " + std::to_string(g_norm) +
                               " after " + std::to_string(iter) + " iterations");
    }
    const SegmentFrame f = segment_frames(out, params);
    // Damped Gauss-Newton: near cotangent configurations N N^T is close to
    // singular and undamped steps can overshoot.
    while (true) {
      const Eigen::Vector2d y = regularized_gram(f.N, damping).ldlt().solve(-g);
      SystemState trial = out;
      trial.hitch += f.N.transpose() * y;
      const Eigen::Vector2d g_trial = kinematic_residuals(trial, params);
      const double trial_norm = g_trial.lpNorm<Eigen::Infinity>();
      if (trial_norm < g_norm || damping > 1e6) {
        out = std::move(trial);
        g = g_trial;
        g_norm = trial_norm;
        damping = std::max(options.regularization, 0.1 * damping);
        break;
      }
      damping = std::max(10.0 * damping, 1e-12);
    }
    ++iter;
  }

  if (options.time_step > 0.0) {
    out.hitch_vel += (out.hitch - state.hitch) / options.time_step;
  }

  const SegmentFrame f = segment_frames(out, params);
  Eigen::Vector2d rhs;
  rhs(0) = f.dir[0].dot(out.robot_vel[0]) + f.dir[1].dot(out.robot_vel[1]);
  rhs(1) = f.dir[2].dot(out.robot_vel[2]) + f.dir[3].dot(out.robot_vel[3]);
  const Eigen::Vector2d mismatch = rhs - f.N * out.hitch_vel;
  if (options.rank_tolerance > 0.0) {
    // Truncated pseudo-inverse: directions where N is rank deficient carry no
    // first-order velocity constraint.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        Eigen::MatrixXd(f.N), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd coeff = svd.matrixU().transpose() * mismatch;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      coeff(k) = sv(k) > options.rank_tolerance ? coeff(k) / sv(k) : 0.0;
    }
    out.hitch_vel += svd.matrixV() * coeff;
  } else {
    const Eigen::Vector2d y =
        regularized_gram(f.N, options.regularization).ldlt().solve(mismatch);
    out.hitch_vel += f.N.transpose() * y;
  }
  return out;
}

SystemState sample_feasible_state(std::uint64_t seed,
                                  const SamplingBounds& bounds,
                                  const SystemParameters& params,
                                  double margin) {
  params.validate();
  const int n = params.dim;
  if (bounds.lower.size() != n || bounds.upper.size() != n) {
    throw DimensionMismatch("sampling bounds dimension mismatch");
  }
  std::mt19937_64 rng(seed);
  SystemState s = SystemState::zeros(n);
  for (int k = 0; k < n; ++k) {
    std::uniform_real_distribution<double> u(bounds.lower(k), bounds.upper(k));
    s.hitch(k) = u(rng);
  }

  int rejections = 0;
  for (int c = 0; c < 2; ++c) {
    const double l = params.cable_length[c];
    if (!(margin >= 0.0 && 2.0 * margin < l)) {
      throw SamplingFailed("margin leaves no admissible segment length");
    }
    std::uniform_real_distribution<double> split(margin, l - margin);
    const double a = split(rng);
    const double b = l - a;
    Vec d1, d2;
    for (;;) {
      d1 = random_direction(rng, n);
      d2 = random_direction(rng, n);
      const bool ok = (d1 + d2).norm() > kMinSampledNormal &&
                      cross(d1, d2).norm() > kMinWindingSine &&
                      inside_cone(d1, bounds.cones[c]) &&
                      inside_cone(d2, bounds.cones[c]);
      if (ok) break;
      if (++rejections >= kMaxRejections) {
        throw SamplingFailed("no feasible direction pair after " +
                             std::to_string(kMaxRejections) + " draws");
      }
    }
    s.robots[2 * c] = s.hitch - a * d1;
    s.robots[2 * c + 1] = s.hitch - b * d2;
  }
  return s;
}

SystemParameters config_s_params() {
  SystemParameters p;
  p.dim = 3;
  p.cable_length = {4.0, 4.0};
  p.robot_mass = {0.35, 0.35, 0.35, 0.35};
  p.hitch_mass = 0.005;
  p.damping = 0.2;
  return p;
}

SystemState config_s_state() {
  const double h = std::sqrt(1.75);
  SystemState s = SystemState::zeros(3);
  s.hitch << 0.0, 0.0, 1.0;
  s.robots[0] << -1.5, 0.0, 1.0 + h;
  s.robots[1] << 1.5, 0.0, 1.0 + h;
  s.robots[2] << 0.0, -1.5, 1.0 - h;
  s.robots[3] << 0.0, 1.5, 1.0 - h;
  return s;
}

Vec cross(const Vec& a, const Vec& b) {
  if (a.size() == 3) {
    return Eigen::Vector3d(a).cross(Eigen::Vector3d(b));
  }
  Vec z(1);
  z(0) = a(0) * b(1) - a(1) * b(0);
  return z;
}

Vec cross_apply(const Vec& axis, const Vec& v) {
  if (v.size() == 3) {
    return Eigen::Vector3d(axis).cross(Eigen::Vector3d(v));
  }
  Vec out(2);
  out << -axis(0) * v(1), axis(0) * v(0);
  return out;
}

}  // namespace hitch
