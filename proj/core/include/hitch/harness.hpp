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

// Scenario configuration, seeded Monte-Carlo runs and artifact emission.

#ifndef HITCH_HARNESS_HPP_
#define HITCH_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hitch/analysis.hpp"
#include "hitch/controller.hpp"
#include "hitch/geometry.hpp"
#include "hitch/qp.hpp"

namespace hitch {

enum class Experiment {
  Static,            // fixed reference near the initial state
  NoisySlow,         // slow Lissajous reference, Gaussian force noise
  DynamicSpeeds,     // Lissajous reference over a list of speeds
  FeasibilitySweep,  // singular values of the input matrix
  EquilibriumHold,   // nominal input held open loop at CONFIG-S
};

std::string_view to_string(Experiment e);
/// Accepts "static", "noisy_slow", "dynamic_speeds", "feasibility_sweep",
/// "equilibrium_hold". Throws ConfigError otherwise.
Experiment experiment_from_string(std::string_view name);

/// Initial-state distribution: hitch uniform in a box, cable 12 segments
/// within a cone around -z and cable 34 around +z (-y / +y in 2D).
struct InitialStateSpec {
  Vec hitch_lower;
  Vec hitch_upper;
  double margin = 0.8;              // min segment length, m
  double cone_half_angle_deg = 45.0;
};

/// Per-trial reference built from the initial configuration.
struct ReferenceSpec {
  TrajectoryKind trajectory = TrajectoryKind::Static;
  double hitch_offset = 0.5;  // p_ref - p0 uniform in [-a, a]^n
  double axis_jitter = 0.3;   // d_ref - d0 uniform in [-a, a], m
  double axis_min_ratio = 0.55;  // d_ref clamped to [min, max] * l
  double axis_max_ratio = 0.9;
  Eigen::Vector3d amplitude{1.0, 1.0, 0.5};
  Eigen::Vector3d frequency{1.0, 2.0, 3.0};
  Eigen::Vector3d phase{0.0, 1.5707963267948966, 0.0};
};

struct ScenarioConfig {
  Experiment experiment = Experiment::Static;
  int trials = 100;
  std::uint64_t seed = 1;
  double dt = 0.005;
  double duration = 10.0;
  int threads = 0;  // 0 uses the hardware concurrency
  double noise_std = 0.0;  // N per axis
  double speed = 0.0;      // reference speed for single-speed experiments
  std::vector<double> speeds;  // DynamicSpeeds only
  double terminal_cut = 5.0;   // terminal statistics over t > terminal_cut
  double tension_tolerance = 1e-4;  // slack below t_min before a violation
  SystemParameters params;
  ControllerGains gains;
  QpSettings qp;
  InitialStateSpec initial;
  ReferenceSpec reference;
  SweepSpec sweep;
  std::string output_dir = "out";
  int csv_trials = -1;  // per-trial CSVs per group; -1 writes all
  bool timing = false;  // fill the qp_ms CSV column (not reproducible)

  /// Paper protocol for each experiment: dt = 0.005 s, 100 trials,
  /// 10 s / 20 s / 15 s, 5 N noise at 0.1 m/s, speeds 0.1 ... 0.9 m/s.
  static ScenarioConfig defaults(Experiment e);

  /// duration / dt rounded; validate() requires it to be integral.
  int steps() const;
  /// Speeds simulated: `speeds` for DynamicSpeeds, otherwise {speed}.
  std::vector<double> speed_list() const;
  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

/// Command-line overrides; unset fields leave the file value.
struct ConfigOverrides {
  std::optional<std::string> experiment;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<double> speed;
  std::optional<double> noise_std;
  std::optional<std::string> output_dir;
};

/// Parses a JSON scenario. Missing fields take the defaults of the named
/// experiment; unknown keys are rejected. Throws ConfigError.
ScenarioConfig parse_config(std::string_view json_text,
                            const ConfigOverrides& overrides = {});
/// Throws ConfigError when the file cannot be read or parsed.
ScenarioConfig load_config(const std::filesystem::path& path,
                           const ConfigOverrides& overrides = {});
/// Complete configuration as JSON with a fixed key order. parse_config of
/// the result reproduces the configuration.
std::string config_to_json(const ScenarioConfig& config, int indent = 2);

/// splitmix64 finalizer of master + (index + 1) * 0x9E3779B97F4A7C15.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Initial state and reference of a trial, both functions of the seed.
struct TrialSetup {
  SystemState initial;
  ReferenceConfiguration reference;
};

TrialSetup make_trial_setup(const ScenarioConfig& config,
                            std::uint64_t trial_seed);
ReferenceTrajectory make_trajectory(const ScenarioConfig& config,
                                    const ReferenceConfiguration& base,
                                    double speed);

/// One closed-loop trial with steps() + 1 samples at t = k dt. Failures
/// (ControlInfeasible, ProjectionDiverged, NonFiniteState and the like)
/// truncate the series and are recorded, not thrown. EquilibriumHold ignores
/// the seed and holds the nominal input from CONFIG-S.
TrialSeries run_trial(const ScenarioConfig& config, std::uint64_t trial_seed,
                      double speed);

/// Safety events counted over the recorded samples.
struct SafetyCounts {
  long tension_floor = 0;        // plant tension < t_min - tolerance
  long model_tension_floor = 0;  // same test on the controller's model
  long psi_negative = 0;
  long qp_failures = 0;          // trials aborted by ControlInfeasible
  double min_tension = std::numeric_limits<double>::infinity();
  double min_model_tension = std::numeric_limits<double>::infinity();

  SafetyCounts& operator+=(const SafetyCounts& o);
};

SafetyCounts count_safety(const TrialSeries& trial, double t_min,
                          double tension_tolerance);

struct SpeedGroup {
  double speed = 0.0;
  std::vector<TrialSeries> trials;  // indexed by trial number
  std::optional<AggregateStats> stats;  // over completed trials
  SafetyCounts safety;
  int failed = 0;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<SpeedGroup> groups;
  std::vector<SweepRow> sweep;  // FeasibilitySweep only
  double wall_seconds = 0.0;

  int failed_trials() const;
};

/// Runs every trial of every speed on a worker pool. Results do not depend
/// on the number of threads.
ScenarioResult run_scenario(const ScenarioConfig& config);

struct RunArtifacts {
  std::vector<std::filesystem::path> trial_csv;
  std::vector<std::filesystem::path> aggregate_csv;
  std::filesystem::path summary_json;
  std::vector<std::filesystem::path> svg;
  std::filesystem::path manifest;
};

/// Writes CSVs, summary.json, SVG plots and manifest.json under `dir`.
/// Throws ConfigError when there is nothing to emit and IoError when a file
/// cannot be written.
RunArtifacts emit_outputs(const ScenarioResult& result,
                          const std::filesystem::path& dir);

/// CSV of one trial: t, V, e_sum, delta, t1..t4, psi1..psi4, qp_ms.
std::string trial_csv(const TrialSeries& trial, bool timing);
/// Parses trial_csv output back (qp_ms ignored). Throws ConfigError.
TrialSeries parse_trial_csv(std::string_view text);

/// Shortest round-trip decimal representation, '.' separator.
std::string format_double(double value);

/// Git blob object id (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string git_blob_hash(std::string_view content);

}  // namespace hitch

#endif  // HITCH_HARNESS_HPP_
