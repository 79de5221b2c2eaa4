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

#include "hitch/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hitch/errors.hpp"

namespace hitch {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInfBound = 1e20;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqualityScale = 1e3;
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;

bool finite_lo(double v) { return v > -kInfBound; }
bool finite_hi(double v) { return v < kInfBound; }

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

// Ruiz-equilibrated copy of the problem. Original quantities are recovered as
// x = D x_s, y = E y_s / c, z = z_s / E.
struct ScaledProblem {
  MatrixXd P, A;
  VectorXd q, lo, hi;
  VectorXd D, E, Dinv, Einv;
  double c = 1.0;
};

double clamp_scale(double v) {
  if (v < kMinScaling) return 1.0;
  return std::min(v, kMaxScaling);
}

ScaledProblem scale_problem(const QuadraticProgram& qp, int iterations) {
  const int k = qp.num_vars();
  const int m = qp.num_constraints();
  ScaledProblem s;
  s.P = qp.P;
  s.A = qp.A;
  s.q = qp.q;
  s.D = VectorXd::Ones(k);
  s.E = VectorXd::Ones(m);
  for (int it = 0; it < iterations; ++it) {
    VectorXd d(k), e(m);
    for (int j = 0; j < k; ++j) {
      double nrm = s.P.col(j).lpNorm<Eigen::Infinity>();
      if (m > 0) nrm = std::max(nrm, s.A.col(j).lpNorm<Eigen::Infinity>());
      d(j) = 1.0 / std::sqrt(clamp_scale(nrm));
    }
    for (int i = 0; i < m; ++i) {
      e(i) = 1.0 / std::sqrt(clamp_scale(s.A.row(i).lpNorm<Eigen::Infinity>()));
    }
    s.P = d.asDiagonal() * s.P * d.asDiagonal();
    s.q = d.cwiseProduct(s.q);
    s.A = e.asDiagonal() * s.A * d.asDiagonal();
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);
  }
  double mean_col = 0.0;
  for (int j = 0; j < k; ++j) mean_col += s.P.col(j).lpNorm<Eigen::Infinity>();
  mean_col = k > 0 ? mean_col / k : 1.0;
  const double cost_norm = std::max(mean_col, inf_norm(s.q));
  s.c = 1.0 / clamp_scale(cost_norm);
  s.P *= s.c;
  s.q *= s.c;

  s.lo = qp.lo;
  s.hi = qp.hi;
  for (int i = 0; i < m; ++i) {
    if (finite_lo(s.lo(i))) s.lo(i) *= s.E(i);
    if (finite_hi(s.hi(i))) s.hi(i) *= s.E(i);
  }
  s.Dinv = s.D.cwiseInverse();
  s.Einv = s.E.cwiseInverse();
  return s;
}

VectorXd rho_vector(const ScaledProblem& s, double rho) {
  const auto m = s.lo.size();
  VectorXd r(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool lo_f = finite_lo(s.lo(i));
    const bool hi_f = finite_hi(s.hi(i));
    if (!lo_f && !hi_f) {
      r(i) = kRhoMin;
    } else if (lo_f && hi_f && s.hi(i) - s.lo(i) < 1e-12) {
      r(i) = kRhoEqualityScale * rho;
    } else {
      r(i) = rho;
    }
  }
  return r;
}

VectorXd project_box(const VectorXd& v, const VectorXd& lo, const VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

// Active-set marks: -1 lower bound active, +1 upper bound active, 0 free.
// Equality rows are always marked +1 and may carry either dual sign.
using ActiveSet = std::vector<signed char>;

bool is_equality(const QuadraticProgram& qp, int i) {
  return finite_lo(qp.lo(i)) && finite_hi(qp.hi(i)) && qp.hi(i) - qp.lo(i) < 1e-12;
}

ActiveSet guess_active_set(const QuadraticProgram& qp, const VectorXd& z,
                           const VectorXd& y) {
  const int m = qp.num_constraints();
  ActiveSet set(m, 0);
  for (int i = 0; i < m; ++i) {
    if (is_equality(qp, i)) {
      set[i] = 1;
    } else if (finite_lo(qp.lo(i)) && z(i) - qp.lo(i) < -y(i)) {
      set[i] = -1;
    } else if (finite_hi(qp.hi(i)) && qp.hi(i) - z(i) < y(i)) {
      set[i] = 1;
    }
  }
  return set;
}

// Equality-constrained solve on `set` with a regularized KKT system plus
// iterative refinement against the unregularized one.
bool solve_on_active_set(const QuadraticProgram& qp, const ActiveSet& set,
                         const QpSettings& settings, VectorXd& x_out,
                         VectorXd& y_out) {
  const int k = qp.num_vars();
  const int m = qp.num_constraints();
  std::vector<int> act;
  for (int i = 0; i < m; ++i) {
    if (set[i] != 0) act.push_back(i);
  }
  const int na = static_cast<int>(act.size());
  MatrixXd K = MatrixXd::Zero(k + na, k + na);
  K.topLeftCorner(k, k) = qp.P;
  VectorXd rhs(k + na);
  rhs.head(k) = -qp.q;
  for (int a = 0; a < na; ++a) {
    const int i = act[a];
    K.block(k + a, 0, 1, k) = qp.A.row(i);
    K.block(0, k + a, k, 1) = qp.A.row(i).transpose();
    rhs(k + a) = set[i] < 0 ? qp.lo(i) : qp.hi(i);
  }
  MatrixXd K_reg = K;
  K_reg.topLeftCorner(k, k).diagonal().array() += settings.polish_delta;
  K_reg.bottomRightCorner(na, na).diagonal().array() -= settings.polish_delta;

  const Eigen::PartialPivLU<MatrixXd> lu(K_reg);
  VectorXd sol = lu.solve(rhs);
  for (int r = 0; r < settings.polish_refine_iter; ++r) {
    sol += lu.solve(rhs - K * sol);
  }
  if (!sol.allFinite()) return false;
  x_out = sol.head(k);
  y_out = VectorXd::Zero(m);
  for (int a = 0; a < na; ++a) y_out(act[a]) = sol(k + a);
  return true;
}

// Primal-dual active-set refinement of an ADMM guess: solve on the set, then
// release rows whose multiplier has the wrong sign and add rows the solution
// violates, until the KKT conditions hold or the set repeats.
bool polish(const QuadraticProgram& qp, ActiveSet set, const QpSettings& settings,
            VectorXd& x_out, VectorXd& y_out) {
  const int m = qp.num_constraints();
  const double tol = settings.eps_abs;
  std::vector<ActiveSet> seen;
  for (int round = 0; round < settings.polish_max_rounds; ++round) {
    seen.push_back(set);
    VectorXd x, y;
    if (!solve_on_active_set(qp, set, settings, x, y)) return false;
    if (kkt_satisfied(kkt_residuals(qp, x, y), settings)) {
      x_out = std::move(x);
      y_out = std::move(y);
      return true;
    }
    const VectorXd ax = qp.A * x;
    for (int i = 0; i < m; ++i) {
      if (is_equality(qp, i)) continue;
      if (set[i] < 0 && y(i) > tol) set[i] = 0;
      else if (set[i] > 0 && y(i) < -tol) set[i] = 0;
      else if (set[i] == 0 && finite_lo(qp.lo(i)) && ax(i) < qp.lo(i) - tol) set[i] = -1;
      else if (set[i] == 0 && finite_hi(qp.hi(i)) && ax(i) > qp.hi(i) + tol) set[i] = 1;
    }
    if (std::find(seen.begin(), seen.end(), set) != seen.end()) return false;
  }
  return false;
}


// ---------------------------------------------------------------------------
// Goldfarb-Idnani dual active-set method for positive definite P. Works on
// the constraints n_j^T x >= b_j (equalities n_j^T x = b_j first), keeping
// J = L^-T Q and the upper-triangular R of the active normals, N = Q [R; 0].

struct GiConstraint {
  VectorXd normal;
  double rhs;
  int row;      // row of qp.A
  double sign;  // +1 for a lower bound or equality, -1 for an upper bound
};

// Rotates d = J^T n so that only its first iq + 1 entries are nonzero and
// appends the new column to R. Returns false when the normal is linearly
// dependent on the active ones.
bool gi_add(MatrixXd& R, MatrixXd& J, VectorXd& d, int& iq, double& r_norm) {
  const int n = static_cast<int>(J.rows());
  for (int j = n - 1; j >= iq + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = J(k, j - 1);
      const double t2 = J(k, j);
      J(k, j - 1) = t1 * cc + t2 * ss;
      J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
    }
  }
  ++iq;
  R.col(iq - 1).head(iq) = d.head(iq);
  if (std::abs(d(iq - 1)) <= std::numeric_limits<double>::epsilon() * r_norm) {
    return false;
  }
  r_norm = std::max(r_norm, std::abs(d(iq - 1)));
  return true;
}

void gi_delete(MatrixXd& R, MatrixXd& J, std::vector<int>& active, VectorXd& u,
               int& iq, int id) {
  const int n = static_cast<int>(J.rows());
  int qq = -1;
  for (int i = 0; i < iq; ++i) {
    if (active[i] == id) {
      qq = i;
      break;
    }
  }
  if (qq < 0) return;
  for (int i = qq; i < iq - 1; ++i) {
    active[i] = active[i + 1];
    u(i) = u(i + 1);
    R.col(i) = R.col(i + 1);
  }
  active[iq - 1] = active[iq];
  u(iq - 1) = u(iq);
  active[iq] = -1;
  u(iq) = 0.0;
  R.col(iq - 1).head(iq).setZero();
  --iq;
  for (int j = qq; j < iq; ++j) {
    double cc = R(j, j);
    double ss = R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < iq; ++k) {
      const double t1 = R(j, k);
      const double t2 = R(j + 1, k);
      R(j, k) = t1 * cc + t2 * ss;
      R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = J(k, j);
      const double t2 = J(k, j + 1);
      J(k, j) = t1 * cc + t2 * ss;
      J(k, j + 1) = xny * (J(k, j) + t1) - t2;
    }
  }
}

bool dual_active_set(const QuadraticProgram& qp, const QpSettings& settings,
                     VectorXd& x_out, VectorXd& y_out) {
  const int n = qp.num_vars();
  const int m = qp.num_constraints();
  const Eigen::LLT<MatrixXd> chol(qp.P);
  if (chol.info() != Eigen::Success) return false;
  const MatrixXd L = chol.matrixL();
  if (L.diagonal().minCoeff() <= 1e-12 * std::max(1.0, L.diagonal().maxCoeff())) {
    return false;
  }

  std::vector<GiConstraint> cons;
  int p = 0;
  for (int i = 0; i < m; ++i) {
    if (is_equality(qp, i)) {
      cons.push_back({qp.A.row(i).transpose(), qp.lo(i), i, 1.0});
      ++p;
    }
  }
  for (int i = 0; i < m; ++i) {
    if (is_equality(qp, i)) continue;
    if (finite_lo(qp.lo(i))) cons.push_back({qp.A.row(i).transpose(), qp.lo(i), i, 1.0});
    if (finite_hi(qp.hi(i))) cons.push_back({-qp.A.row(i).transpose(), -qp.hi(i), i, -1.0});
  }
  const int nc = static_cast<int>(cons.size());
  auto violation_tol = [&](int j) {
    return 1e-3 * settings.eps_abs + 1e-14 * std::abs(cons[j].rhs);
  };

  MatrixXd J = chol.matrixU().solve(MatrixXd::Identity(n, n));  // L^-T
  MatrixXd R = MatrixXd::Zero(n, n);
  VectorXd u = VectorXd::Zero(n + 1);
  std::vector<int> active(n + 1, -1);
  VectorXd x = chol.solve(-qp.q);
  double r_norm = 1.0;
  int iq = 0;

  VectorXd d(n), z(n), r(n);
  auto directions = [&](const VectorXd& normal) {
    d = J.transpose() * normal;
    z = J.rightCols(n - iq) * d.tail(n - iq);
    r.head(iq) = R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(d.head(iq));
  };

  for (int j = 0; j < p; ++j) {
    directions(cons[j].normal);
    const double zn = z.dot(cons[j].normal);
    const double t2 = std::abs(zn) > 0.0 ? (cons[j].rhs - cons[j].normal.dot(x)) / zn : 0.0;
    x += t2 * z;
    u(iq) = t2;
    u.head(iq) -= t2 * r.head(iq);
    active[iq] = j;
    if (!gi_add(R, J, d, iq, r_norm)) return false;  // dependent equalities
  }

  std::vector<char> in_set(nc, 0);
  for (int j = 0; j < p; ++j) in_set[j] = 1;
  const int max_steps = 10 * (nc + n) + 100;
  int steps = 0;
  for (;;) {
    // Most violated inactive inequality.
    int ip = -1;
    double worst = 0.0;
    for (int j = p; j < nc; ++j) {
      if (in_set[j]) continue;
      const double sj = cons[j].normal.dot(x) - cons[j].rhs;
      if (sj < -violation_tol(j) && sj < worst) {
        worst = sj;
        ip = j;
      }
    }
    if (ip < 0) break;
    active[iq] = ip;
    u(iq) = 0.0;
    double s_ip = worst;
    for (;;) {
      if (++steps > max_steps) return false;
      directions(cons[ip].normal);
      // Largest dual step keeping the active multipliers non-negative.
      int drop = -1;
      double t1 = std::numeric_limits<double>::infinity();
      for (int k = p; k < iq; ++k) {
        if (r(k) > 0.0 && u(k) / r(k) < t1) {
          t1 = u(k) / r(k);
          drop = active[k];
        }
      }
      const double zn = z.dot(cons[ip].normal);
      const double t2 = z.squaredNorm() > 1e-300 && zn > 0.0
                            ? -s_ip / zn
                            : std::numeric_limits<double>::infinity();
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return false;  // infeasible
      if (!std::isfinite(t2)) {
        u.head(iq) -= t * r.head(iq);
        u(iq) += t;
        in_set[drop] = 0;
        gi_delete(R, J, active, u, iq, drop);
        active[iq] = ip;
        continue;
      }
      x += t * z;
      u.head(iq) -= t * r.head(iq);
      u(iq) += t;
      if (t == t2) {
        if (!gi_add(R, J, d, iq, r_norm)) return false;
        in_set[ip] = 1;
        break;
      }
      in_set[drop] = 0;
      gi_delete(R, J, active, u, iq, drop);
      active[iq] = ip;
      s_ip = cons[ip].normal.dot(x) - cons[ip].rhs;
    }
  }

  VectorXd y = VectorXd::Zero(m);
  for (int k = 0; k < iq; ++k) {
    const GiConstraint& c = cons[active[k]];
    y(c.row) -= c.sign * u(k);
  }
  if (!x.allFinite() || !y.allFinite()) return false;
  x_out = std::move(x);
  y_out = std::move(y);
  return true;
}

}  // namespace

std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Solved: return "solved";
    case QpStatus::MaxIter: return "max_iter";
    case QpStatus::PrimalInfeasible: return "primal_infeasible";
    case QpStatus::DualInfeasible: return "dual_infeasible";
  }
  return "unknown";
}

void QuadraticProgram::validate() const {
  const auto k = q.size();
  const auto m = A.rows();
  if (P.rows() != k || P.cols() != k || (m > 0 && A.cols() != k) ||
      lo.size() != m || hi.size() != m) {
    throw DimensionMismatch("quadratic program dimensions are inconsistent");
  }
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
    throw ConfigError("cost matrix is not symmetric");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (lo(i) > hi(i)) throw ConfigError("constraint lower bound exceeds upper bound");
  }
}

double QuadraticProgram::objective(const VectorXd& x) const {
  return 0.5 * x.dot(P * x) + q.dot(x);
}

KktResiduals kkt_residuals(const QuadraticProgram& qp, const VectorXd& x,
                           const VectorXd& y) {
  if (x.size() != qp.num_vars() || y.size() != qp.num_constraints()) {
    throw DimensionMismatch("primal/dual vector does not match the program");
  }
  KktResiduals r;
  const VectorXd ax = qp.A * x;
  for (int i = 0; i < qp.num_constraints(); ++i) {
    const double below = finite_lo(qp.lo(i)) ? qp.lo(i) - ax(i) : 0.0;
    const double above = finite_hi(qp.hi(i)) ? ax(i) - qp.hi(i) : 0.0;
    r.primal = std::max({r.primal, below, above});

    // A multiplier must sit on the bound its sign selects.
    double slack = 0.0;
    if (y(i) > 0.0) {
      slack = finite_hi(qp.hi(i)) ? std::min(y(i), std::abs(qp.hi(i) - ax(i))) : y(i);
    } else if (y(i) < 0.0) {
      slack = finite_lo(qp.lo(i)) ? std::min(-y(i), std::abs(ax(i) - qp.lo(i))) : -y(i);
    }
    r.complementarity = std::max(r.complementarity, slack);
  }
  const VectorXd px = qp.P * x;
  const VectorXd aty = qp.A.transpose() * y;
  r.dual = inf_norm(px + qp.q + aty);
  r.dual_scale = std::max({inf_norm(px), inf_norm(qp.q), inf_norm(aty)});
  return r;
}

bool kkt_satisfied(const KktResiduals& r, const QpSettings& settings) {
  return r.primal <= settings.eps_abs && r.complementarity <= settings.eps_abs &&
         r.dual <= settings.eps_abs + settings.eps_rel * r.dual_scale;
}

void QpSolver::reset() {
  last_x_.reset();
  last_y_.reset();
  last_rho_ = 0.0;
}

QpSolution QpSolver::solve(const QuadraticProgram& qp, bool warm_start) {
  qp.validate();
  const QpSettings& st = settings_;
  const int k = qp.num_vars();
  const int m = qp.num_constraints();
  const ScaledProblem s = scale_problem(qp, st.scaling_iter);

  double rho = st.rho;
  VectorXd x = VectorXd::Zero(k);
  VectorXd y = VectorXd::Zero(m);
  VectorXd z = VectorXd::Zero(m);
  const bool warm = warm_start && last_x_ && last_x_->size() == k &&
                    last_y_->size() == m;
  if (warm) {
    x = s.Dinv.cwiseProduct(*last_x_);
    y = s.c * s.Einv.cwiseProduct(*last_y_);
    if (last_rho_ > 0.0) rho = last_rho_;
  }
  z = project_box(s.A * x, s.lo, s.hi);

  VectorXd rho_vec = rho_vector(s, rho);
  auto factor = [&]() {
    MatrixXd K = s.P + s.A.transpose() * rho_vec.asDiagonal() * s.A;
    K.diagonal().array() += st.sigma;
    return Eigen::LLT<MatrixXd>(K);
  };
  Eigen::LLT<MatrixXd> llt = factor();

  QpSolution sol;
  sol.status = QpStatus::MaxIter;
  VectorXd x_prev = x, y_prev = y;
  VectorXd unscaled_x, unscaled_y;
  ActiveSet last_polish_guess;

  auto finish = [&](QpStatus status, const VectorXd& xu, const VectorXd& yu,
                    int iters, bool polished) {
    sol.status = status;
    sol.x = xu;
    sol.y = yu;
    sol.iterations = iters;
    sol.polished = polished;
    const KktResiduals r = kkt_residuals(qp, xu, yu);
    sol.primal_res = r.primal;
    sol.dual_res = r.dual;
    if (status == QpStatus::Solved) {
      last_x_ = xu;
      last_y_ = yu;
      last_rho_ = rho;
    } else {
      reset();
    }
    return sol;
  };

  auto try_polish = [&](int iter) -> bool {
    const VectorXd zu = s.Einv.cwiseProduct(z);
    const VectorXd yu = s.E.cwiseProduct(y) / s.c;
    ActiveSet guess = guess_active_set(qp, zu, yu);
    if (guess == last_polish_guess) return false;
    last_polish_guess = guess;
    VectorXd xp, yp;
    if (!polish(qp, std::move(guess), st, xp, yp)) return false;
    finish(QpStatus::Solved, xp, yp, iter, true);
    return true;
  };

  auto try_active_set = [&](int iter) -> bool {
    VectorXd xa, ya;
    if (!dual_active_set(qp, st, xa, ya)) return false;
    if (!kkt_satisfied(kkt_residuals(qp, xa, ya), st)) return false;
    finish(QpStatus::Solved, xa, ya, iter, true);
    return true;
  };

  for (int iter = 1; iter <= st.max_iter; ++iter) {
    if (st.active_set_fallback && iter == st.active_set_after + 1 &&
        try_active_set(st.active_set_after)) {
      return sol;
    }
    x_prev = x;
    y_prev = y;
    const VectorXd rhs =
        st.sigma * x - s.q + s.A.transpose() * (rho_vec.cwiseProduct(z) - y);
    const VectorXd x_tilde = llt.solve(rhs);
    const VectorXd z_tilde = s.A * x_tilde;
    x = st.alpha * x_tilde + (1.0 - st.alpha) * x;
    const VectorXd z_relaxed = st.alpha * z_tilde + (1.0 - st.alpha) * z;
    const VectorXd z_next =
        project_box(z_relaxed + y.cwiseQuotient(rho_vec), s.lo, s.hi);
    y += rho_vec.cwiseProduct(z_relaxed - z_next);
    z = z_next;

    const bool check = iter % st.check_interval == 0 || iter == st.max_iter;
    if (!check) continue;

    const VectorXd ax = s.A * x;
    const VectorXd px = s.P * x;
    const VectorXd aty = s.A.transpose() * y;
    const double prim = inf_norm(s.Einv.cwiseProduct(ax - z));
    const double dual = inf_norm(s.Dinv.cwiseProduct(px + s.q + aty)) / s.c;
    const double eps_prim =
        st.eps_abs + st.eps_rel * std::max(inf_norm(s.Einv.cwiseProduct(ax)),
                                           inf_norm(s.Einv.cwiseProduct(z)));
    const double eps_dual =
        st.eps_abs +
        st.eps_rel / s.c *
            std::max({inf_norm(s.Dinv.cwiseProduct(px)),
                      inf_norm(s.Dinv.cwiseProduct(aty)),
                      inf_norm(s.Dinv.cwiseProduct(s.q))});

    unscaled_x = s.D.cwiseProduct(x);
    unscaled_y = s.E.cwiseProduct(y) / s.c;
    if (prim <= eps_prim && dual <= eps_dual) {
      const KktResiduals r = kkt_residuals(qp, unscaled_x, unscaled_y);
      if (r.primal <= st.eps_abs &&
          r.dual <= st.eps_abs + st.eps_rel * r.dual_scale) {
        if (st.polish && try_polish(iter)) return sol;
        return finish(QpStatus::Solved, unscaled_x, unscaled_y, iter, false);
      }
    }
    const bool polish_due =
        (prim <= st.polish_trigger && dual <= st.polish_trigger) ||
        iter % st.polish_interval == 0;
    if (st.polish && polish_due && try_polish(iter)) {
      return sol;
    }

    // Infeasibility certificates from successive iterate differences.
    VectorXd dy = y - y_prev;
    for (int i = 0; i < m; ++i) {
      if (!finite_hi(s.hi(i))) dy(i) = std::min(dy(i), 0.0);
      if (!finite_lo(s.lo(i))) dy(i) = std::max(dy(i), 0.0);
    }
    const double dy_norm = inf_norm(s.E.cwiseProduct(dy));
    if (dy_norm > std::numeric_limits<double>::min()) {
      double support = 0.0;
      for (int i = 0; i < m; ++i) {
        if (dy(i) > 0.0) support += s.hi(i) * dy(i);
        if (dy(i) < 0.0) support += s.lo(i) * dy(i);
      }
      const double aty_norm = inf_norm(s.Dinv.cwiseProduct(s.A.transpose() * dy));
      if (aty_norm <= st.eps_prim_inf * dy_norm &&
          support <= -st.eps_prim_inf * dy_norm) {
        return finish(QpStatus::PrimalInfeasible, unscaled_x, unscaled_y, iter,
                      false);
      }
    }
    const VectorXd dx = x - x_prev;
    const double dx_norm = inf_norm(s.D.cwiseProduct(dx));
    if (dx_norm > std::numeric_limits<double>::min()) {
      const double tol = st.eps_dual_inf * dx_norm;
      bool certificate = s.q.dot(dx) <= -s.c * tol &&
                         inf_norm(s.Dinv.cwiseProduct(s.P * dx)) <= s.c * tol;
      if (certificate) {
        const VectorXd adx = s.Einv.cwiseProduct(s.A * dx);
        for (int i = 0; i < m && certificate; ++i) {
          if (finite_hi(s.hi(i)) && adx(i) > tol) certificate = false;
          if (finite_lo(s.lo(i)) && adx(i) < -tol) certificate = false;
        }
      }
      if (certificate) {
        return finish(QpStatus::DualInfeasible, unscaled_x, unscaled_y, iter,
                      false);
      }
    }

    if (st.adaptive_rho && iter % st.adaptive_rho_interval == 0) {
      const double prim_scale =
          std::max({inf_norm(ax), inf_norm(z), 1e-30});
      const double dual_scale =
          std::max({inf_norm(px), inf_norm(aty), inf_norm(s.q), 1e-30});
      const double prim_n = inf_norm(ax - z) / prim_scale;
      const double dual_n = inf_norm(px + s.q + aty) / dual_scale;
      double rho_new = rho * std::sqrt(prim_n / std::max(dual_n, 1e-30));
      rho_new = std::clamp(rho_new, kRhoMin, kRhoMax);
      if (rho_new > rho * st.adaptive_rho_tolerance ||
          rho_new < rho / st.adaptive_rho_tolerance) {
        rho = rho_new;
        rho_vec = rho_vector(s, rho);
        llt = factor();
      }
    }
  }

  unscaled_x = s.D.cwiseProduct(x);
  unscaled_y = s.E.cwiseProduct(y) / s.c;
  if (st.polish) {
    last_polish_guess.clear();
    if (try_polish(st.max_iter)) return sol;
  }
  if (st.active_set_fallback && st.active_set_after >= st.max_iter &&
      try_active_set(st.max_iter)) {
    return sol;
  }
  return finish(QpStatus::MaxIter, unscaled_x, unscaled_y, st.max_iter, false);
}

QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings) {
  QpSolver solver(settings);
  return solver.solve(qp, false);
}

}  // namespace hitch
