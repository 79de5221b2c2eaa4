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

#include "hitch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "hitch/dynamics.hpp"
#include "hitch/errors.hpp"

namespace hitch {
namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

// Stream identifiers fed to derive_seed(trial_seed, .).
constexpr std::uint64_t kInitialStream = 0;
constexpr std::uint64_t kReferenceStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::array<double, 4> to_array(const Eigen::Vector4d& v) {
  return {v(0), v(1), v(2), v(3)};
}

double cascade_norm(const Points4& cascade) {
  double s = 0.0;
  for (const auto& c : cascade) s += c.squaredNorm();
  return std::sqrt(s);
}

Vec damping_force(const SystemState& s, const SystemParameters& params) {
  return -params.damping * s.hitch_vel;
}

void record_failure(TrialSeries& ts, std::string kind, const std::exception& e) {
  ts.failed = true;
  ts.failure_kind = std::move(kind);
  ts.failure = e.what();
}

// Nominal input held from CONFIG-S. The recorded V and e_sum are measured
// against the initial configuration.
void hold_equilibrium(const ScenarioConfig& config, TrialSeries& ts) {
  SystemParameters params = config.params;
  if (params.dim != 3) throw ConfigError("equilibrium_hold requires dim = 3");
  SystemState state = config_s_state();
  const ReferenceConfiguration ref = measured_configuration(state, params);
  const auto axes = winding_axes(state, params);
  const Points4 robot_ref = robot_references(ref, axes);
  Points4 zero_vel;
  for (auto& v : zero_vel) v = Vec::Zero(3);
  const Eigen::VectorXd u = nominal_input(state, params, config.gains.t_min);
  Plant plant(params, Disturbance{});
  const Vec zero = Vec::Zero(3);
  const int steps = config.steps();
  for (int k = 0; k <= steps; ++k) {
    state.time = k * config.dt;
    const CompositeErrors err = composite_errors(state, robot_ref, zero_vel, config.gains);
    const BarrierValues bar = barrier_functions(state, params, config.gains.beta);
    ts.time.push_back(state.time);
    ts.V.push_back(lyapunov(err.e, config.gains.kp));
    ts.e_sum.push_back(e_sum(state, params, ref));
    ts.delta.push_back(0.0);
    ts.cascade.push_back(cascade_norm(err.cascade));
    ts.hitch_error.push_back((ref.hitch - state.hitch).norm());
    ts.model_tension.push_back(
        to_array(solve_tension(assemble_tension_system(state, params, zero, zero), u)));
    ts.psi.push_back(bar.psi);
    ts.qp_iterations.push_back(0);
    ts.qp_seconds.push_back(0.0);
    if (k < steps) {
      const StepResult r = plant.step(state, u, config.dt);
      ts.tension.push_back(to_array(r.tension));
      state = r.state;
    } else {
      ts.tension.push_back(to_array(solve_tension(
          assemble_tension_system(state, params, damping_force(state, params), zero), u)));
    }
  }
}

void closed_loop(const ScenarioConfig& config, std::uint64_t seed, double speed,
                 TrialSeries& ts) {
  const SystemParameters& params = config.params;
  const int n = params.dim;
  const TrialSetup setup = make_trial_setup(config, seed);
  Controller controller(params, config.gains,
                        make_trajectory(config, setup.reference, speed), config.qp);
  Disturbance disturbance;
  disturbance.noise_std = config.noise_std;
  disturbance.seed = derive_seed(seed, kNoiseStream);
  Plant plant(params, disturbance);
  const Vec zero = Vec::Zero(n);

  SystemState state = setup.initial;
  const int steps = config.steps();
  for (int k = 0; k <= steps; ++k) {
    state.time = k * config.dt;  // keeps the grid exact
    const ControlOutput out = controller.compute_input(state);
    const ControlDiagnostics& d = out.diag;
    ts.time.push_back(state.time);
    ts.V.push_back(d.V);
    ts.e_sum.push_back(e_sum(state, params, d.reference));
    ts.delta.push_back(out.delta);
    ts.cascade.push_back(cascade_norm(d.errors.cascade));
    ts.hitch_error.push_back((d.reference.hitch - state.hitch).norm());
    ts.model_tension.push_back(to_array(d.model_tension));
    ts.psi.push_back(d.barrier.psi);
    ts.qp_iterations.push_back(d.qp_iterations);
    ts.qp_seconds.push_back(d.solve_seconds);
    ts.max_qp_primal = std::max(ts.max_qp_primal, d.qp_primal);
    ts.max_qp_dual = std::max(ts.max_qp_dual, d.qp_dual);
    if (k < steps) {
      const StepResult r = plant.step(state, out.u, config.dt);
      ts.tension.push_back(to_array(r.tension));
      state = r.state;
    } else {
      ts.tension.push_back(to_array(solve_tension(
          assemble_tension_system(state, params, damping_force(state, params), zero),
          out.u)));
    }
  }
}

// Keeps the identification and failure record, releases the samples.
TrialSeries drop_series(TrialSeries t) {
  TrialSeries kept;
  kept.seed = t.seed;
  kept.speed = t.speed;
  kept.max_qp_primal = t.max_qp_primal;
  kept.max_qp_dual = t.max_qp_dual;
  kept.failed = t.failed;
  kept.failure_kind = std::move(t.failure_kind);
  kept.failure = std::move(t.failure);
  kept.failure_time = t.failure_time;
  return kept;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrialSetup make_trial_setup(const ScenarioConfig& config, std::uint64_t trial_seed) {
  const SystemParameters& params = config.params;
  const int n = params.dim;
  SamplingBounds bounds;
  bounds.lower = config.initial.hitch_lower;
  bounds.upper = config.initial.hitch_upper;
  Vec down = Vec::Zero(n);
  down(n - 1) = -1.0;
  const double half_angle = config.initial.cone_half_angle_deg * kDegToRad;
  bounds.cones = {DirectionCone{down, half_angle}, DirectionCone{-down, half_angle}};

  TrialSetup setup;
  setup.initial = sample_feasible_state(derive_seed(trial_seed, kInitialStream), bounds,
                                        params, config.initial.margin);

  // Reference: hitch shifted within a box, normals antiparallel along the
  // bisector of the initial ones, axis lengths perturbed and clamped.
  std::mt19937_64 rng(derive_seed(trial_seed, kReferenceStream));
  const ReferenceSpec& spec = config.reference;
  std::uniform_real_distribution<double> offset(-spec.hitch_offset, spec.hitch_offset);
  std::uniform_real_distribution<double> jitter(-spec.axis_jitter, spec.axis_jitter);
  const ReferenceConfiguration measured = measured_configuration(setup.initial, params);

  ReferenceConfiguration& ref = setup.reference;
  ref.hitch = measured.hitch;
  for (int k = 0; k < n; ++k) ref.hitch(k) += offset(rng);
  Vec axis = measured.normal[0].normalized() - measured.normal[1].normalized();
  if (axis.norm() < 1e-6) axis = measured.normal[0];
  axis.normalize();
  for (int c = 0; c < 2; ++c) {
    const double l = params.cable_length[c];
    ref.axis[c] = std::clamp(measured.axis[c] + jitter(rng), spec.axis_min_ratio * l,
                             spec.axis_max_ratio * l);
    const double sign = c == 0 ? 1.0 : -1.0;
    ref.normal[c] = sign * consistent_normal_norm(ref.axis[c], l) * axis;
  }
  ref.hitch_rate = Vec::Zero(n);
  ref.validate(params);
  return setup;
}

ReferenceTrajectory make_trajectory(const ScenarioConfig& config,
                                    const ReferenceConfiguration& base, double speed) {
  switch (config.reference.trajectory) {
    case TrajectoryKind::Static:
      return ReferenceTrajectory::fixed(base);
    case TrajectoryKind::Lissajous:
      return ReferenceTrajectory::lissajous(base, speed, config.reference.amplitude,
                                            config.reference.frequency,
                                            config.reference.phase);
    case TrajectoryKind::Linear:
      break;
  }
  throw ConfigError("unsupported reference trajectory");
}

TrialSeries run_trial(const ScenarioConfig& config, std::uint64_t trial_seed,
                      double speed) {
  TrialSeries ts;
  ts.seed = trial_seed;
  ts.speed = speed;
  try {
    if (config.experiment == Experiment::EquilibriumHold) {
      hold_equilibrium(config, ts);
    } else {
      closed_loop(config, trial_seed, speed, ts);
    }
  } catch (const ControlInfeasible& e) {
    record_failure(ts, "ControlInfeasible", e);
  } catch (const ProjectionDiverged& e) {
    record_failure(ts, "ProjectionDiverged", e);
  } catch (const NonFiniteState& e) {
    record_failure(ts, "NonFiniteState", e);
  } catch (const SamplingFailed& e) {
    record_failure(ts, "SamplingFailed", e);
  } catch (const DegenerateWindingPlane& e) {
    record_failure(ts, "DegenerateWindingPlane", e);
  } catch (const DegenerateSegment& e) {
    record_failure(ts, "DegenerateSegment", e);
  } catch (const IllConditionedTensionSystem& e) {
    record_failure(ts, "IllConditionedTensionSystem", e);
  } catch (const ConfigError&) {
    throw;
  } catch (const HitchError& e) {
    record_failure(ts, "HitchError", e);
  }
  // A failure mid-step can leave one series a sample longer.
  const std::size_t len = ts.tension.size();
  if (ts.failed) ts.failure_time = static_cast<double>(len) * config.dt;
  if (ts.time.size() > len) {
    ts.time.resize(len);
    ts.V.resize(len);
    ts.e_sum.resize(len);
    ts.delta.resize(len);
    ts.cascade.resize(len);
    ts.hitch_error.resize(len);
    ts.model_tension.resize(len);
    ts.psi.resize(len);
    ts.qp_iterations.resize(len);
    ts.qp_seconds.resize(len);
  }
  return ts;
}

SafetyCounts count_safety(const TrialSeries& trial, double t_min,
                          double tension_tolerance) {
  SafetyCounts c;
  const double floor = t_min - tension_tolerance;
  for (const auto& t : trial.tension) {
    for (double ti : t) {
      c.tension_floor += ti < floor;
      c.min_tension = std::min(c.min_tension, ti);
    }
  }
  for (const auto& t : trial.model_tension) {
    for (double ti : t) {
      c.model_tension_floor += ti < floor;
      c.min_model_tension = std::min(c.min_model_tension, ti);
    }
  }
  for (const auto& p : trial.psi) {
    for (double pi : p) c.psi_negative += pi < 0.0;
  }
  c.qp_failures = trial.failed && trial.failure_kind == "ControlInfeasible";
  return c;
}

SafetyCounts& SafetyCounts::operator+=(const SafetyCounts& o) {
  tension_floor += o.tension_floor;
  model_tension_floor += o.model_tension_floor;
  psi_negative += o.psi_negative;
  qp_failures += o.qp_failures;
  min_tension = std::min(min_tension, o.min_tension);
  min_model_tension = std::min(min_model_tension, o.min_model_tension);
  return *this;
}

int ScenarioResult::failed_trials() const {
  int f = 0;
  for (const auto& g : groups) f += g.failed;
  return f;
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ScenarioResult result;
  result.config = config;

  if (config.experiment == Experiment::FeasibilitySweep) {
    result.sweep = singular_value_sweep(config.params, config.sweep);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }

  const std::vector<double> speeds = config.speed_list();
  const std::size_t per_group = static_cast<std::size_t>(config.trials);
  for (double s : speeds) {
    SpeedGroup g;
    g.speed = s;
    g.trials.resize(per_group);
    result.groups.push_back(std::move(g));
  }

  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, per_group));

  // Groups run one after another so only the retained series stay in
  // memory.
  for (std::size_t gi = 0; gi < speeds.size(); ++gi) {
    SpeedGroup& g = result.groups[gi];
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const std::size_t ti = next.fetch_add(1);
        if (ti >= per_group) return;
        try {
          g.trials[ti] = run_trial(config, derive_seed(config.seed, ti), speeds[gi]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(per_group);
        }
      }
    };
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    std::vector<TrialSeries> done;
    std::vector<std::size_t> done_index;
    for (std::size_t ti = 0; ti < per_group; ++ti) {
      TrialSeries& t = g.trials[ti];
      g.safety += count_safety(t, config.gains.t_min, config.tension_tolerance);
      if (t.failed) {
        ++g.failed;
      } else {
        done.push_back(std::move(t));
        done_index.push_back(ti);
      }
    }
    if (!done.empty()) g.stats = aggregate(done, config.terminal_cut);
    for (std::size_t k = 0; k < done.size(); ++k) {
      g.trials[done_index[k]] = std::move(done[k]);
    }
    if (config.csv_trials >= 0) {
      for (std::size_t ti = static_cast<std::size_t>(config.csv_trials); ti < per_group;
           ++ti) {
        g.trials[ti] = drop_series(std::move(g.trials[ti]));
      }
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace hitch
