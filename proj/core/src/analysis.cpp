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

#include "hitch/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hitch/dynamics.hpp"
#include "hitch/errors.hpp"

namespace hitch {
namespace {

// Unit segment directions for a cable whose normal has magnitude `norm`,
// symmetric about `axis` and spread along `spread`.
std::array<Vec, 2> symmetric_pair(const Vec& axis, const Vec& spread, double norm) {
  const double c = 0.5 * norm;  // cos of the half-angle between the pair
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  return {Vec(c * axis + s * spread), Vec(c * axis - s * spread)};
}

Vec unit(int dim, int k, double sign = 1.0) {
  Vec v = Vec::Zero(dim);
  v(k) = sign;
  return v;
}

// Rotation by phi in the plane spanned by the last two axes (about x in 3D).
Vec rotate(const Vec& v, double phi) {
  Vec out = v;
  const auto n = v.size();
  const double a = v(n - 2);
  const double b = v(n - 1);
  out(n - 2) = a * std::cos(phi) - b * std::sin(phi);
  out(n - 1) = a * std::sin(phi) + b * std::cos(phi);
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double e_sum(const SystemState& state, const SystemParameters& params,
             const ReferenceConfiguration& ref) {
  const SegmentFrame f = segment_frames(state, params);
  const double d12 = (state.robots[0] - state.robots[1]).norm();
  const double d34 = (state.robots[2] - state.robots[3]).norm();
  return (ref.hitch - state.hitch).norm() + (ref.normal[0] - f.normal12).norm() +
         (ref.normal[1] - f.normal34).norm() + std::abs(ref.axis[0] - d12) +
         std::abs(ref.axis[1] - d34);
}

SystemState sweep_state(const SystemParameters& params, const SweepSpec& spec,
                        double cross) {
  const int n = params.dim;
  const double nn = spec.normal_norm;
  if (!(nn > 0.0 && nn < 2.0)) throw ConfigError("sweep normal magnitude must lie in (0, 2)");
  const double ratio = cross / (nn * nn);
  if (!(ratio >= 0.0 && ratio <= 1.0 + 1e-12)) {
    throw ConfigError("sweep cross product exceeds |n|^2");
  }
  const double phi = std::asin(std::min(1.0, ratio));
  const Vec up = unit(n, n - 1);
  const Vec down = unit(n, n - 1, -1.0);
  // Cable 12 spreads along x; cable 34 along y in 3D and x in 2D.
  const Vec spread12 = unit(n, 0);
  const Vec spread34 = n == 3 ? unit(n, 1) : unit(n, 0);
  const auto d12 = symmetric_pair(down, spread12, nn);
  const auto d34 = symmetric_pair(up, spread34, nn);

  SystemState s = SystemState::zeros(n);
  s.hitch = Vec::Zero(n);
  const std::array<Vec, 4> dirs = {d12[0], d12[1], rotate(d34[0], phi),
                                   rotate(d34[1], phi)};
  for (int i = 0; i < 4; ++i) {
    s.robots[i] = s.hitch - 0.5 * params.cable_length[cable_of(i)] * dirs[i];
  }
  return s;
}

std::vector<SweepRow> singular_value_sweep(const SystemParameters& params,
                                           const SweepSpec& spec) {
  params.validate();
  if (spec.points < 2) throw ConfigError("sweep needs at least two points");
  const int n = params.dim;
  const double top = spec.normal_norm * spec.normal_norm;
  std::vector<SweepRow> rows;
  rows.reserve(spec.points);
  for (int k = 0; k < spec.points; ++k) {
    const double target = top * k / (spec.points - 1);
    const SystemState s = sweep_state(params, spec, target);
    const InputMatrix b = input_matrix(s, params);
    const Eigen::VectorXd sv_hitch =
        Eigen::JacobiSVD<Eigen::MatrixXd>(b.hitch).singularValues();
    const Eigen::VectorXd sv_full =
        Eigen::JacobiSVD<Eigen::MatrixXd>(b.nonzero).singularValues();
    SweepRow row;
    const SegmentFrame f = segment_frames(s, params);
    row.normal_cross = cross(f.normal12, f.normal34).norm();
    row.sigma_min_hitch = sv_hitch(n - 1);
    row.sigma2_hitch = sv_hitch(n - 2);
    row.sigma_min_nonzero = sv_full(sv_full.size() - 1);
    rows.push_back(row);
  }
  return rows;
}

void TrialSeries::check_consistent() const {
  const std::size_t n = time.size();
  const bool ok = V.size() == n && e_sum.size() == n && delta.size() == n &&
                  cascade.size() == n && hitch_error.size() == n &&
                  tension.size() == n &&
                  model_tension.size() == n && psi.size() == n &&
                  qp_iterations.size() == n && qp_seconds.size() == n;
  if (!ok) throw GridMismatch("trial series have unequal lengths");
}

ScalarStats scalar_stats(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("statistics of an empty sample");
  ScalarStats s;
  s.mean = mean_of(values);
  double var = 0.0;
  for (double x : values) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

const NamedStats& AggregateStats::find(const std::string& name) const {
  for (const auto& s : series) {
    if (s.name == name) return s;
  }
  throw ConfigError("no aggregated series named '" + name + "'");
}

AggregateStats aggregate(const std::vector<TrialSeries>& trials,
                         double terminal_cut) {
  if (trials.empty()) throw ConfigError("cannot aggregate an empty trial list");
  for (const auto& t : trials) {
    t.check_consistent();
    if (t.time != trials.front().time) {
      throw GridMismatch("trials do not share a time grid");
    }
  }
  const auto& grid = trials.front().time;
  const std::size_t steps = grid.size();

  using Extract = std::function<double(const TrialSeries&, std::size_t)>;
  const std::vector<std::pair<std::string, Extract>> extractors = {
      {"V", [](const TrialSeries& t, std::size_t k) { return t.V[k]; }},
      {"e_sum", [](const TrialSeries& t, std::size_t k) { return t.e_sum[k]; }},
      {"delta", [](const TrialSeries& t, std::size_t k) { return t.delta[k]; }},
      {"cascade", [](const TrialSeries& t, std::size_t k) { return t.cascade[k]; }},
      {"tension_min",
       [](const TrialSeries& t, std::size_t k) {
         return *std::min_element(t.tension[k].begin(), t.tension[k].end());
       }},
      {"psi_min",
       [](const TrialSeries& t, std::size_t k) {
         return *std::min_element(t.psi[k].begin(), t.psi[k].end());
       }},
  };

  AggregateStats out;
  out.trials = trials.size();
  out.time = grid;
  out.terminal_cut = terminal_cut;
  std::vector<double> column(trials.size());
  for (const auto& [name, get] : extractors) {
    NamedStats ns;
    ns.name = name;
    auto& p = ns.pointwise;
    p.mean.resize(steps);
    p.std.resize(steps);
    p.min.resize(steps);
    p.max.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      for (std::size_t j = 0; j < trials.size(); ++j) column[j] = get(trials[j], k);
      const ScalarStats s = scalar_stats(column);
      p.mean[k] = s.mean;
      p.std[k] = s.std;
      p.min[k] = s.min;
      p.max[k] = s.max;
    }
    std::vector<double> window_means;
    window_means.reserve(trials.size());
    for (const auto& t : trials) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t k = 0; k < steps; ++k) {
        if (grid[k] > terminal_cut) {
          sum += get(t, k);
          ++count;
        }
      }
      window_means.push_back(count > 0 ? sum / count
                                       : (steps > 0 ? get(t, steps - 1) : 0.0));
    }
    if (steps > 0) ns.terminal = scalar_stats(window_means);
    out.series.push_back(std::move(ns));
  }
  return out;
}

}  // namespace hitch
