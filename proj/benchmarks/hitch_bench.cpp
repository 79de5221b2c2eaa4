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

// Per-step costs of the closed loop at the initial state of a static trial.

#include <benchmark/benchmark.h>

#include "hitch/controller.hpp"
#include "hitch/dynamics.hpp"
#include "hitch/harness.hpp"
#include "hitch/qp.hpp"

namespace {

struct Fixture {
  hitch::ScenarioConfig config = hitch::ScenarioConfig::defaults(hitch::Experiment::Static);
  hitch::TrialSetup setup = hitch::make_trial_setup(config, hitch::derive_seed(20260101, 0));
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

hitch::Controller make_controller(const Fixture& f) {
  return hitch::Controller(f.config.params, f.config.gains,
                           hitch::make_trajectory(f.config, f.setup.reference, 0.0),
                           f.config.qp);
}

void BM_ComputeInputCold(benchmark::State& st) {
  const Fixture& f = fixture();
  hitch::Controller c = make_controller(f);
  for (auto _ : st) benchmark::DoNotOptimize(c.compute_input(f.setup.initial, false));
}
BENCHMARK(BM_ComputeInputCold);

void BM_ComputeInputWarm(benchmark::State& st) {
  const Fixture& f = fixture();
  hitch::Controller c = make_controller(f);
  for (auto _ : st) benchmark::DoNotOptimize(c.compute_input(f.setup.initial, true));
}
BENCHMARK(BM_ComputeInputWarm);

void BM_SolveQp(benchmark::State& st) {
  const Fixture& f = fixture();
  hitch::Controller c = make_controller(f);
  const hitch::ControlOutput out = c.compute_input(f.setup.initial, false);
  const hitch::QuadraticProgram qp =
      hitch::assemble_qp(f.setup.initial, f.config.params, f.config.gains, out.diag.robot_ref,
                         out.diag.robot_vel_ref);
  for (auto _ : st) benchmark::DoNotOptimize(hitch::solve_qp(qp, f.config.qp));
}
BENCHMARK(BM_SolveQp);

void BM_EulerStep(benchmark::State& st) {
  const Fixture& f = fixture();
  hitch::Controller c = make_controller(f);
  const Eigen::VectorXd u = c.compute_input(f.setup.initial, false).u;
  const hitch::Vec zero = hitch::Vec::Zero(f.config.params.dim);
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        hitch::euler_step(f.setup.initial, f.config.params, u, f.config.dt, zero));
  }
}
BENCHMARK(BM_EulerStep);

void BM_OneSecondTrial(benchmark::State& st) {
  hitch::ScenarioConfig config = fixture().config;
  config.duration = 1.0;
  for (auto _ : st) benchmark::DoNotOptimize(hitch::run_trial(config, 7, 0.0));
}
BENCHMARK(BM_OneSecondTrial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
