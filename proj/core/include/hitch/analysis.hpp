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

// Tracking metrics, the input-matrix singular-value sweep, and Monte-Carlo
// aggregation.

#ifndef HITCH_ANALYSIS_HPP_
#define HITCH_ANALYSIS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hitch/geometry.hpp"
#include "hitch/trajectory.hpp"

namespace hitch {

/// Configuration error |p_ref - p| + |n12_ref - n12| + |n34_ref - n34|
///   + |d12_ref - d12| + |d34_ref - d34|, with d12 = |p1 - p2|.
double e_sum(const SystemState& state, const SystemParameters& params,
             const ReferenceConfiguration& ref);

struct SweepSpec {
  int points = 50;
  double normal_norm = 1.4142135623730951;  // |n12| = |n34|
};

struct SweepRow {
  double normal_cross = 0.0;        // |n12 x n34|
  double sigma2_hitch = 0.0;        // second smallest singular value of B_p
  double sigma_min_hitch = 0.0;     // smallest singular value of B_p
  double sigma_min_nonzero = 0.0;   // smallest singular value of [B_p; B_robot]
};

/// State at rest with both normals of magnitude spec.normal_norm and
/// |n12 x n34| = cross. Cable 12 hangs its hitch below the robots along -z
/// (-y in 2D); cable 34 is tilted from the opposite direction by
/// asin(cross / |n|^2). Every segment has length l / 2.
SystemState sweep_state(const SystemParameters& params, const SweepSpec& spec,
                        double cross);

/// Uniform grid over |n12 x n34| in [0, |n|^2]. Throws DegenerateSegment for
/// unrealizable points.
std::vector<SweepRow> singular_value_sweep(const SystemParameters& params,
                                           const SweepSpec& spec);

/// Closed-loop record of one trial on the control grid.
struct TrialSeries {
  std::uint64_t seed = 0;
  double speed = 0.0;  // reference speed, m/s
  std::vector<double> time;
  std::vector<double> V;
  std::vector<double> e_sum;
  std::vector<double> delta;
  std::vector<double> cascade;  // sqrt(sum_i |p_i_ref - p_i|^2)
  std::vector<double> hitch_error;  // |p_ref - p|
  std::vector<std::array<double, 4>> tension;        // plant tensions
  std::vector<std::array<double, 4>> model_tension;  // controller model
  std::vector<std::array<double, 4>> psi;
  std::vector<int> qp_iterations;
  std::vector<double> qp_seconds;
  double max_qp_primal = 0.0;
  double max_qp_dual = 0.0;

  bool failed = false;
  std::string failure_kind;  // e.g. "ControlInfeasible"
  std::string failure;       // exception message
  double failure_time = 0.0;  // start of the step that failed, s

  std::size_t size() const { return time.size(); }
  /// Throws GridMismatch unless every per-step series has time.size()
  /// entries.
  void check_consistent() const;
};

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> std;  // population convention
  std::vector<double> min;
  std::vector<double> max;
};

struct ScalarStats {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Statistics of one scalar per trial.
ScalarStats scalar_stats(const std::vector<double>& values);

struct NamedStats {
  std::string name;
  SeriesStats pointwise;
  ScalarStats terminal;  // across trials, of each trial's mean over t > t_cut
};

struct AggregateStats {
  std::size_t trials = 0;
  std::vector<double> time;
  double terminal_cut = 0.0;
  std::vector<NamedStats> series;  // V, e_sum, delta, tension_min, psi_min

  const NamedStats& find(const std::string& name) const;
};

/// Pointwise statistics across trials plus terminal-window statistics over
/// t > terminal_cut. Throws ConfigError for an empty list and GridMismatch
/// when time grids differ.
AggregateStats aggregate(const std::vector<TrialSeries>& trials,
                         double terminal_cut);

}  // namespace hitch

#endif  // HITCH_ANALYSIS_HPP_
