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

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "hitch/errors.hpp"
#include "hitch/harness.hpp"
#include "json.hpp"

namespace hitch {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kStepTolerance = 1e-9;  // relative, for duration / dt

// Rejects keys outside `allowed` so typos do not silently fall back to
// defaults.
void check_keys(const Json& obj, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw ConfigError(std::string(where) + " must be a JSON object");
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || item.key() == a;
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const Json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

Vec read_vec(const Json& obj, const char* key, const Vec& fallback) {
  if (!obj.contains(key)) return fallback;
  std::vector<double> v;
  read(obj, key, v);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <std::size_t N>
void read_array(const Json& obj, const char* key, std::array<double, N>& out) {
  if (!obj.contains(key)) return;
  std::vector<double> v;
  read(obj, key, v);
  if (v.size() != N) {
    throw ConfigError(std::string("'") + key + "' needs " + std::to_string(N) +
                      " entries");
  }
  std::copy(v.begin(), v.end(), out.begin());
}

void read_vec3(const Json& obj, const char* key, Eigen::Vector3d& out) {
  if (!obj.contains(key)) return;
  std::vector<double> v;
  read(obj, key, v);
  if (v.size() != 3) throw ConfigError(std::string("'") + key + "' needs 3 entries");
  out = Eigen::Vector3d(v[0], v[1], v[2]);
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }
std::vector<double> to_std(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

// Dimension-dependent defaults.
void reset_for_dim(ScenarioConfig& c, int dim) {
  c.params.dim = dim;
  const double gamma = c.gains.gamma;
  const ControllerGains fresh = ControllerGains::defaults(dim, c.dt);
  c.gains.kp = fresh.kp;
  c.gains.kp_cas = fresh.kp_cas;
  c.gains.gamma = gamma;
  c.initial.hitch_lower = Vec::Constant(dim, -1.0);
  c.initial.hitch_upper = Vec::Constant(dim, 1.0);
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Static: return "static";
    case Experiment::NoisySlow: return "noisy_slow";
    case Experiment::DynamicSpeeds: return "dynamic_speeds";
    case Experiment::FeasibilitySweep: return "feasibility_sweep";
    case Experiment::EquilibriumHold: return "equilibrium_hold";
  }
  return "unknown";
}

Experiment experiment_from_string(std::string_view name) {
  for (auto e : {Experiment::Static, Experiment::NoisySlow, Experiment::DynamicSpeeds,
                 Experiment::FeasibilitySweep, Experiment::EquilibriumHold}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

ScenarioConfig ScenarioConfig::defaults(Experiment e) {
  ScenarioConfig c;
  c.experiment = e;
  c.params = config_s_params();
  c.gains = ControllerGains::defaults(c.params.dim, c.dt);
  reset_for_dim(c, c.params.dim);
  switch (e) {
    case Experiment::Static:
      c.duration = 10.0;
      c.terminal_cut = 5.0;
      break;
    case Experiment::NoisySlow:
      c.duration = 20.0;
      c.noise_std = 5.0;
      c.speed = 0.1;
      c.terminal_cut = 10.0;
      c.reference.trajectory = TrajectoryKind::Lissajous;
      break;
    case Experiment::DynamicSpeeds:
      c.duration = 15.0;
      c.terminal_cut = 10.0;
      c.speeds = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
      c.reference.trajectory = TrajectoryKind::Lissajous;
      break;
    case Experiment::FeasibilitySweep:
      c.trials = 1;
      c.duration = c.dt;
      c.terminal_cut = 0.0;
      break;
    case Experiment::EquilibriumHold:
      c.trials = 1;
      c.duration = 5.0;
      c.terminal_cut = 0.0;
      break;
  }
  return c;
}

int ScenarioConfig::steps() const {
  return static_cast<int>(std::llround(duration / dt));
}

std::vector<double> ScenarioConfig::speed_list() const {
  if (experiment == Experiment::DynamicSpeeds) return speeds;
  return {speed};
}

void ScenarioConfig::validate() const {
  params.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ConfigError("duration must be positive");
  }
  const double ratio = duration / dt;
  if (std::abs(ratio - std::round(ratio)) > kStepTolerance * std::max(1.0, ratio) ||
      std::llround(ratio) < 1) {
    throw ConfigError("duration / dt must be a positive integer");
  }
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  if (!(speed >= 0.0)) throw ConfigError("speed must be non-negative");
  if (experiment == Experiment::DynamicSpeeds && speeds.empty()) {
    throw ConfigError("dynamic_speeds needs a non-empty speed list");
  }
  for (double s : speeds) {
    if (!(s >= 0.0)) throw ConfigError("speeds must be non-negative");
  }
  if (!(terminal_cut >= 0.0)) throw ConfigError("terminal_cut must be non-negative");
  if (!(tension_tolerance >= 0.0)) {
    throw ConfigError("tension_tolerance must be non-negative");
  }
  gains.validate(params.dim);
  if (std::abs(gains.dt - dt) > 0.0) throw ConfigError("gains.dt must equal dt");
  const int n = params.dim;
  if (initial.hitch_lower.size() != n || initial.hitch_upper.size() != n) {
    throw ConfigError("initial hitch box must have one entry per axis");
  }
  if (!(initial.hitch_lower.array() <= initial.hitch_upper.array()).all()) {
    throw ConfigError("initial hitch box has lower > upper");
  }
  if (!(initial.margin > 0.0)) throw ConfigError("initial margin must be positive");
  if (!(initial.cone_half_angle_deg > 0.0 && initial.cone_half_angle_deg <= 180.0)) {
    throw ConfigError("cone half-angle must lie in (0, 180] degrees");
  }
  if (!(reference.hitch_offset >= 0.0) || !(reference.axis_jitter >= 0.0)) {
    throw ConfigError("reference perturbations must be non-negative");
  }
  if (!(reference.axis_min_ratio > 0.0 &&
        reference.axis_min_ratio <= reference.axis_max_ratio &&
        reference.axis_max_ratio < 1.0)) {
    throw ConfigError("reference axis ratios must satisfy 0 < min <= max < 1");
  }
  if (sweep.points < 2) throw ConfigError("sweep needs at least two points");
  if (!(sweep.normal_norm > 0.0 && sweep.normal_norm < 2.0)) {
    throw ConfigError("sweep normal magnitude must lie in (0, 2)");
  }
  if (!(qp.eps_abs > 0.0) || qp.max_iter < 1) {
    throw ConfigError("qp tolerances must be positive");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (csv_trials < -1) throw ConfigError("csv_trials must be -1 or non-negative");
}

ScenarioConfig parse_config(std::string_view json_text,
                            const ConfigOverrides& overrides) {
  Json doc;
  try {
    doc = Json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(doc, "scenario",
             {"experiment", "trials", "seed", "dt", "duration", "threads", "noise_std",
              "speed", "speeds", "terminal_cut", "tension_tolerance", "params", "gains",
              "qp", "initial", "reference", "sweep", "output_dir", "csv_trials",
              "timing"});

  std::string name = "static";
  read(doc, "experiment", name);
  if (overrides.experiment) name = *overrides.experiment;
  ScenarioConfig c = ScenarioConfig::defaults(experiment_from_string(name));

  read(doc, "trials", c.trials);
  read(doc, "seed", c.seed);
  read(doc, "dt", c.dt);
  read(doc, "duration", c.duration);
  read(doc, "threads", c.threads);
  read(doc, "noise_std", c.noise_std);
  read(doc, "speed", c.speed);
  read(doc, "speeds", c.speeds);
  read(doc, "terminal_cut", c.terminal_cut);
  read(doc, "tension_tolerance", c.tension_tolerance);
  read(doc, "output_dir", c.output_dir);
  read(doc, "csv_trials", c.csv_trials);
  read(doc, "timing", c.timing);

  if (doc.contains("params")) {
    const Json& p = doc["params"];
    check_keys(p, "params",
               {"dim", "cable_length", "robot_mass", "hitch_mass", "damping"});
    int dim = c.params.dim;
    read(p, "dim", dim);
    if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
    if (dim != c.params.dim) reset_for_dim(c, dim);
    read_array(p, "cable_length", c.params.cable_length);
    read_array(p, "robot_mass", c.params.robot_mass);
    read(p, "hitch_mass", c.params.hitch_mass);
    read(p, "damping", c.params.damping);
  }
  if (doc.contains("gains")) {
    const Json& g = doc["gains"];
    check_keys(g, "gains",
               {"kp", "kp_cas", "gamma", "alpha", "beta", "lambda", "t_min", "f_max"});
    c.gains.kp = read_vec(g, "kp", c.gains.kp);
    c.gains.kp_cas = read_vec(g, "kp_cas", c.gains.kp_cas);
    read(g, "gamma", c.gains.gamma);
    read(g, "alpha", c.gains.alpha);
    read(g, "beta", c.gains.beta);
    read(g, "lambda", c.gains.lambda);
    read(g, "t_min", c.gains.t_min);
    read(g, "f_max", c.gains.f_max);
  }
  if (doc.contains("qp")) {
    const Json& q = doc["qp"];
    check_keys(q, "qp", {"rho", "sigma", "alpha", "max_iter", "eps_abs", "eps_rel",
                         "polish", "adaptive_rho"});
    read(q, "rho", c.qp.rho);
    read(q, "sigma", c.qp.sigma);
    read(q, "alpha", c.qp.alpha);
    read(q, "max_iter", c.qp.max_iter);
    read(q, "eps_abs", c.qp.eps_abs);
    read(q, "eps_rel", c.qp.eps_rel);
    read(q, "polish", c.qp.polish);
    read(q, "adaptive_rho", c.qp.adaptive_rho);
  }
  if (doc.contains("initial")) {
    const Json& i = doc["initial"];
    check_keys(i, "initial",
               {"hitch_lower", "hitch_upper", "margin", "cone_half_angle_deg"});
    c.initial.hitch_lower = read_vec(i, "hitch_lower", c.initial.hitch_lower);
    c.initial.hitch_upper = read_vec(i, "hitch_upper", c.initial.hitch_upper);
    read(i, "margin", c.initial.margin);
    read(i, "cone_half_angle_deg", c.initial.cone_half_angle_deg);
  }
  if (doc.contains("reference")) {
    const Json& r = doc["reference"];
    check_keys(r, "reference",
               {"trajectory", "hitch_offset", "axis_jitter", "axis_min_ratio",
                "axis_max_ratio", "amplitude", "frequency", "phase"});
    if (r.contains("trajectory")) {
      std::string kind;
      read(r, "trajectory", kind);
      c.reference.trajectory = trajectory_kind_from_string(kind);
      if (c.reference.trajectory == TrajectoryKind::Linear) {
        throw ConfigError("linear references are not supported by the harness");
      }
    }
    read(r, "hitch_offset", c.reference.hitch_offset);
    read(r, "axis_jitter", c.reference.axis_jitter);
    read(r, "axis_min_ratio", c.reference.axis_min_ratio);
    read(r, "axis_max_ratio", c.reference.axis_max_ratio);
    read_vec3(r, "amplitude", c.reference.amplitude);
    read_vec3(r, "frequency", c.reference.frequency);
    read_vec3(r, "phase", c.reference.phase);
  }
  if (doc.contains("sweep")) {
    const Json& s = doc["sweep"];
    check_keys(s, "sweep", {"points", "normal_norm"});
    read(s, "points", c.sweep.points);
    read(s, "normal_norm", c.sweep.normal_norm);
  }

  if (overrides.trials) c.trials = *overrides.trials;
  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.dt) c.dt = *overrides.dt;
  if (overrides.duration) c.duration = *overrides.duration;
  if (overrides.speed) {
    c.speed = *overrides.speed;
    if (c.experiment == Experiment::DynamicSpeeds) c.speeds = {*overrides.speed};
  }
  if (overrides.noise_std) c.noise_std = *overrides.noise_std;
  if (overrides.output_dir) c.output_dir = *overrides.output_dir;

  c.gains.dt = c.dt;
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path,
                           const ConfigOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

std::string config_to_json(const ScenarioConfig& c, int indent) {
  Json j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["dt"] = c.dt;
  j["duration"] = c.duration;
  j["threads"] = c.threads;
  j["noise_std"] = c.noise_std;
  j["speed"] = c.speed;
  j["speeds"] = c.speeds;
  j["terminal_cut"] = c.terminal_cut;
  j["tension_tolerance"] = c.tension_tolerance;
  j["params"] = {{"dim", c.params.dim},
                 {"cable_length", c.params.cable_length},
                 {"robot_mass", c.params.robot_mass},
                 {"hitch_mass", c.params.hitch_mass},
                 {"damping", c.params.damping}};
  j["gains"] = {{"kp", to_std(c.gains.kp)},       {"kp_cas", to_std(c.gains.kp_cas)},
                {"gamma", c.gains.gamma},         {"alpha", c.gains.alpha},
                {"beta", c.gains.beta},           {"lambda", c.gains.lambda},
                {"t_min", c.gains.t_min},         {"f_max", c.gains.f_max}};
  j["qp"] = {{"rho", c.qp.rho},           {"sigma", c.qp.sigma},
             {"alpha", c.qp.alpha},       {"max_iter", c.qp.max_iter},
             {"eps_abs", c.qp.eps_abs},   {"eps_rel", c.qp.eps_rel},
             {"polish", c.qp.polish},     {"adaptive_rho", c.qp.adaptive_rho}};
  j["initial"] = {{"hitch_lower", to_std(c.initial.hitch_lower)},
                  {"hitch_upper", to_std(c.initial.hitch_upper)},
                  {"margin", c.initial.margin},
                  {"cone_half_angle_deg", c.initial.cone_half_angle_deg}};
  j["reference"] = {{"trajectory", std::string(to_string(c.reference.trajectory))},
                    {"hitch_offset", c.reference.hitch_offset},
                    {"axis_jitter", c.reference.axis_jitter},
                    {"axis_min_ratio", c.reference.axis_min_ratio},
                    {"axis_max_ratio", c.reference.axis_max_ratio},
                    {"amplitude", to_std(c.reference.amplitude)},
                    {"frequency", to_std(c.reference.frequency)},
                    {"phase", to_std(c.reference.phase)}};
  j["sweep"] = {{"points", c.sweep.points}, {"normal_norm", c.sweep.normal_norm}};
  j["output_dir"] = c.output_dir;
  j["csv_trials"] = c.csv_trials;
  j["timing"] = c.timing;
  return j.dump(indent);
}

}  // namespace hitch
