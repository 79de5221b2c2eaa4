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

// hitchsim: command-line front end for the Monte-Carlo harness.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hitch/errors.hpp"
#include "hitch/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

constexpr double kHoldTolerance = 1e-6;

void print_result(const hitch::ScenarioResult& r, const hitch::RunArtifacts& art) {
  std::printf("%s: %zu group(s), %d trial(s) each, %d failed, %.2f s\n",
              std::string(hitch::to_string(r.config.experiment)).c_str(), r.groups.size(),
              r.config.trials, r.failed_trials(), r.wall_seconds);
  for (const auto& g : r.groups) {
    std::printf("  speed %-5g failed %d  tension<t_min %ld (model %ld)  psi<0 %ld  "
                "qp failures %ld",
                g.speed, g.failed, g.safety.tension_floor, g.safety.model_tension_floor,
                g.safety.psi_negative, g.safety.qp_failures);
    if (g.stats) {
      std::printf("  terminal e_sum %.3e  V %.3e", g.stats->find("e_sum").terminal.mean,
                  g.stats->find("V").terminal.mean);
    }
    std::printf("\n");
  }
  if (!r.sweep.empty()) {
    double min_nonzero = INFINITY;
    for (const auto& row : r.sweep) min_nonzero = std::min(min_nonzero, row.sigma_min_nonzero);
    std::printf("  %zu sweep points, min sigma([B_p; B_robot]) = %.4f\n", r.sweep.size(),
                min_nonzero);
  }
  std::printf("  manifest: %s\n", art.manifest.string().c_str());
}

int run(const std::string& path, const hitch::ConfigOverrides& overrides, bool strict,
        bool force_sweep) {
  hitch::ConfigOverrides o = overrides;
  if (force_sweep) o.experiment = "feasibility_sweep";
  const hitch::ScenarioConfig config = hitch::load_config(path, o);
  const hitch::ScenarioResult result = hitch::run_scenario(config);
  const hitch::RunArtifacts art = hitch::emit_outputs(result, config.output_dir);
  print_result(result, art);
  if (strict && result.failed_trials() > 0) {
    std::fprintf(stderr, "error: %d trial(s) failed\n", result.failed_trials());
    return kExitRuntime;
  }
  return kExitOk;
}

int demo_equilibrium(const std::string& out) {
  hitch::ScenarioConfig config =
      hitch::ScenarioConfig::defaults(hitch::Experiment::EquilibriumHold);
  const hitch::TrialSeries t = hitch::run_trial(config, config.seed, 0.0);
  if (t.failed) {
    std::fprintf(stderr, "error: %s\n", t.failure.c_str());
    return kExitRuntime;
  }
  double displacement = 0.0;
  double tension_dev = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    displacement = std::max(displacement, t.hitch_error[k]);
    for (double ti : t.tension[k]) {
      tension_dev = std::max(tension_dev, std::abs(ti - config.gains.t_min));
    }
  }
  std::printf("equilibrium hold, %zu samples over %g s\n", t.size(), config.duration);
  std::printf("  max hitch displacement   %.3e m\n", displacement);
  std::printf("  max |t_i - t_min|        %.3e N\n", tension_dev);
  if (!out.empty()) {
    config.output_dir = out;
    const hitch::ScenarioResult r = hitch::run_scenario(config);
    const hitch::RunArtifacts art = hitch::emit_outputs(r, out);
    std::printf("  manifest: %s\n", art.manifest.string().c_str());
  }
  const bool ok = displacement < kHoldTolerance && tension_dev < kHoldTolerance;
  std::printf("  %s\n", ok ? "held" : "drifted");
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hitch simulator and CLF-HOCBF-QP controller"};
  app.require_subcommand(1);

  std::string config_path;
  hitch::ConfigOverrides overrides;
  bool strict = false;
  std::string experiment, out;
  int trials = 0;
  std::uint64_t seed = 0;
  double dt = 0, duration = 0, speed = 0, noise = 0;

  auto* run_cmd = app.add_subcommand("run", "Run a Monte-Carlo scenario");
  run_cmd->add_option("--config", config_path, "Scenario JSON file")->required();
  auto* o_exp = run_cmd->add_option("--experiment", experiment,
                                    "static | noisy_slow | dynamic_speeds | "
                                    "feasibility_sweep | equilibrium_hold");
  auto* o_trials = run_cmd->add_option("--trials", trials, "Trials per speed");
  auto* o_seed = run_cmd->add_option("--seed", seed, "Master seed");
  auto* o_dt = run_cmd->add_option("--dt", dt, "Control period [s]");
  auto* o_dur = run_cmd->add_option("--duration", duration, "Trial length [s]");
  auto* o_speed = run_cmd->add_option("--speed", speed, "Reference speed [m/s]");
  auto* o_noise = run_cmd->add_option("--noise-std", noise, "Hitch force noise [N]");
  auto* o_out = run_cmd->add_option("--out", out, "Output directory");
  run_cmd->add_flag("--strict", strict, "Exit with 2 when any trial fails");

  auto* sweep_cmd = app.add_subcommand("sweep", "Input-matrix singular-value sweep");
  sweep_cmd->add_option("--config", config_path, "Scenario JSON file")->required();
  auto* s_out = sweep_cmd->add_option("--out", out, "Output directory");

  std::string demo_out;
  auto* demo_cmd =
      app.add_subcommand("demo-equilibrium", "Hold the nominal input at CONFIG-S for 5 s");
  demo_cmd->add_option("--out", demo_out, "Also write artifacts here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*o_exp) overrides.experiment = experiment;
  if (*o_trials) overrides.trials = trials;
  if (*o_seed) overrides.seed = seed;
  if (*o_dt) overrides.dt = dt;
  if (*o_dur) overrides.duration = duration;
  if (*o_speed) overrides.speed = speed;
  if (*o_noise) overrides.noise_std = noise;
  if (*o_out || *s_out) overrides.output_dir = out;

  try {
    if (*run_cmd) return run(config_path, overrides, strict, false);
    if (*sweep_cmd) return run(config_path, overrides, false, true);
    return demo_equilibrium(demo_out);
  } catch (const hitch::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
