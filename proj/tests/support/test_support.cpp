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


#include "test_support.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace hitch::testing {

SystemState random_state(std::mt19937_64& rng, const SystemParameters& params,
                         double vel_scale, double margin) {
  const int n = params.dim;
  SamplingBounds bounds;
  bounds.lower = Vec::Constant(n, -1.0);
  bounds.upper = Vec::Constant(n, 1.0);
  SystemState s = sample_feasible_state(rng(), bounds, params, margin);
  s.hitch_vel = random_vector(rng, n, vel_scale);
  for (auto& v : s.robot_vel) v = random_vector(rng, n, vel_scale);
  return project_state(s, params);
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int size, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(size);
  for (int k = 0; k < size; ++k) v(k) = u(rng);
  return v;
}

namespace {

struct Newton {
  Vec hitch;
  std::array<Vec, 4> robot;
};

Newton newton_accels(const SystemState& s, const SystemParameters& params,
                     const Eigen::VectorXd& u, const Eigen::Vector4d& t,
                     const Vec& hitch_force) {
  const int n = params.dim;
  Newton a;
  a.hitch = hitch_force;
  for (int i = 0; i < 4; ++i) {
    const Vec r = s.hitch - s.robots[i];
    const Vec dir = r / r.norm();
    a.robot[i] = (u.segment(i * n, n) + t(i) * dir) / params.robot_mass[i];
    a.hitch -= t(i) * dir;
  }
  a.hitch /= params.hitch_mass;
  return a;
}

// Second time derivative of |r_a| + |r_b| for each cable.
Eigen::Vector2d length_accel(const SystemState& s, const Newton& a) {
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (int i = 0; i < 4; ++i) {
    const Vec r = s.hitch - s.robots[i];
    const Vec rd = s.hitch_vel - s.robot_vel[i];
    const Vec rdd = a.hitch - a.robot[i];
    const double len = r.norm();
    const double radial = r.dot(rd) / len;
    out(i / 2) += (r.dot(rdd) + rd.squaredNorm() - radial * radial) / len;
  }
  return out;
}

}  // namespace

Eigen::Vector4d oracle_tension(const SystemState& s, const SystemParameters& params,
                               const Eigen::VectorXd& u, const Vec& hitch_force) {
  const auto residual = [&](const Eigen::Vector4d& t) {
    return length_accel(s, newton_accels(s, params, u, t, hitch_force));
  };
  const Eigen::Vector2d r0 = residual(Eigen::Vector4d::Zero());
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  for (int k = 0; k < 4; ++k) {
    A.block<2, 1>(0, k) = residual(Eigen::Vector4d::Unit(k)) - r0;
  }
  rhs.head<2>() = -r0;
  A(2, 0) = 1.0;
  A(2, 1) = -1.0;
  A(3, 2) = 1.0;
  A(3, 3) = -1.0;
  return A.fullPivLu().solve(rhs);
}

Eigen::VectorXd oracle_derivative(const SystemState& s, const SystemParameters& params,
                                  const Eigen::VectorXd& u, const Vec& hitch_force) {
  const int n = params.dim;
  const Eigen::Vector4d t = oracle_tension(s, params, u, hitch_force);
  const Newton a = newton_accels(s, params, u, t, hitch_force);
  Eigen::VectorXd d(10 * n);
  d.segment(0, n) = s.hitch_vel;
  for (int i = 0; i < 4; ++i) d.segment((1 + i) * n, n) = s.robot_vel[i];
  d.segment(5 * n, n) = a.hitch;
  for (int i = 0; i < 4; ++i) d.segment((6 + i) * n, n) = a.robot[i];
  return d;
}

RandomQp random_feasible_qp(std::mt19937_64& rng, int halfspaces) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::uniform_int_distribution<int> kdist(1, 20);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int k = kdist(rng);
  const Eigen::MatrixXd L = random_vector(rng, k * k).reshaped(k, k);
  RandomQp g;
  g.qp.P = L * L.transpose() + (0.05 + unit(rng)) * Eigen::MatrixXd::Identity(k, k);
  g.qp.q = random_vector(rng, k, 10.0);
  const Eigen::VectorXd x0 = random_vector(rng, k);

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> lo, hi;
  int used = 0;
  while (used < halfspaces) {
    const Eigen::VectorXd a = random_vector(rng, k);
    const double ax = a.dot(x0);
    // Some rows are active at x0 so degenerate vertices show up.
    const auto gap = [&] { return unit(rng) < 0.2 ? 0.0 : unit(rng); };
    const double kind = unit(rng);
    double l = -kInf, u = kInf;
    if (kind < 0.35) {
      u = ax + gap();
      used += 1;
    } else if (kind < 0.7) {
      l = ax - gap();
      used += 1;
    } else if (kind < 0.9) {
      l = ax - gap();
      u = ax + gap();
      used += 2;
    } else if (kind < 0.95) {
      l = u = ax;
      used += 2;
    }
    rows.push_back(a);
    lo.push_back(l);
    hi.push_back(u);
    if (kind >= 0.95) used += 1;  // free row, counted so the loop ends
  }
  const int m = static_cast<int>(rows.size());
  g.qp.A.resize(m, k);
  g.qp.lo.resize(m);
  g.qp.hi.resize(m);
  std::vector<Eigen::VectorXd> grows;
  std::vector<double> gh;
  for (int i = 0; i < m; ++i) {
    g.qp.A.row(i) = rows[i].transpose();
    g.qp.lo(i) = lo[i];
    g.qp.hi(i) = hi[i];
    if (std::isfinite(hi[i])) {
      grows.push_back(rows[i]);
      gh.push_back(hi[i]);
    }
    if (std::isfinite(lo[i])) {
      grows.push_back(-rows[i]);
      gh.push_back(-lo[i]);
    }
  }
  g.G.resize(static_cast<int>(grows.size()), k);
  g.h.resize(static_cast<int>(gh.size()));
  for (std::size_t i = 0; i < grows.size(); ++i) {
    g.G.row(static_cast<int>(i)) = grows[i].transpose();
    g.h(static_cast<int>(i)) = gh[i];
  }
  return g;
}

OracleQpResult brute_force_qp(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                              const Eigen::MatrixXd& G, const Eigen::VectorXd& h) {
  const int m = static_cast<int>(G.rows());
  const Eigen::LLT<Eigen::MatrixXd> llt(P);
  const Eigen::VectorXd x_free = llt.solve(-q);
  const Eigen::MatrixXd PinvGt = llt.solve(G.transpose());
  const Eigen::MatrixXd S = G * PinvGt;

  OracleQpResult best;
  best.objective = std::numeric_limits<double>::infinity();
  const auto objective = [&](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(P * x) + q.dot(x);
  };
  std::vector<int> idx;
  for (long mask = 0; mask < (1L << m); ++mask) {
    idx.clear();
    for (int i = 0; i < m; ++i) {
      if (mask & (1L << i)) idx.push_back(i);
    }
    if (static_cast<int>(idx.size()) > P.rows()) continue;
    ++best.subsets;
    Eigen::VectorXd x = x_free;
    if (!idx.empty()) {
      const int k = static_cast<int>(idx.size());
      Eigen::MatrixXd Sk(k, k);
      Eigen::VectorXd rk(k);
      for (int a = 0; a < k; ++a) {
        rk(a) = G.row(idx[a]).dot(x_free) - h(idx[a]);
        for (int b = 0; b < k; ++b) Sk(a, b) = S(idx[a], idx[b]);
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(Sk);
      if (lu.rank() < k) continue;
      const Eigen::VectorXd lambda = lu.solve(rk);
      for (int a = 0; a < k; ++a) x -= PinvGt.col(idx[a]) * lambda(a);
    }
    const Eigen::VectorXd slack = G * x - h;
    if (m > 0 && slack.maxCoeff() > 1e-9 * (1.0 + h.cwiseAbs().maxCoeff())) continue;
    const double f = objective(x);
    if (f < best.objective) {
      best.objective = f;
      best.x = x;
    }
  }
  return best;
}

Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    xp(k) = x(k) + step;
    const double fp = f(xp);
    xp(k) = x(k) - step;
    const double fm = f(xp);
    xp(k) = x(k);
    g(k) = (fp - fm) / (2.0 * step);
  }
  return g;
}

double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

}  // namespace hitch::testing
