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

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>

#include "hitch/errors.hpp"
#include "hitch/harness.hpp"
#include "json.hpp"

namespace hitch {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::ordered_json;

constexpr int kSummarySchemaVersion = 1;
constexpr std::size_t kMaxPlotPoints = 800;
constexpr double kLogFloor = 1e-16;
constexpr const char* kTrialHeader =
    "t,V,e_sum,delta,t1,t2,t3,t4,psi1,psi2,psi3,psi4,qp_ms";

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "'");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Json stats_json(const ScalarStats& s) {
  return Json{{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

Json safety_json(const SafetyCounts& c) {
  // No samples leaves the minima infinite; they serialize as null.
  const auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(); };
  return Json{{"tension_floor_violations", c.tension_floor},
              {"model_tension_floor_violations", c.model_tension_floor},
              {"psi_violations", c.psi_negative},
              {"qp_failures", c.qp_failures},
              {"min_tension", finite_or_null(c.min_tension)},
              {"min_model_tension", finite_or_null(c.min_model_tension)}};
}

// ---------------------------------------------------------------- SVG ----

struct Line {
  std::string label;
  std::vector<double> y;
  std::string color;
};

struct Band {
  std::vector<double> lower;
  std::vector<double> upper;
  std::string color;
};

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool log_y)
      : title_(std::move(title)),
        xlabel_(std::move(xlabel)),
        ylabel_(std::move(ylabel)),
        log_y_(log_y) {}

  void set_x(std::vector<double> x) { x_ = std::move(x); }
  void add_band(Band b) { bands_.push_back(std::move(b)); }
  void add_line(Line l) { lines_.push_back(std::move(l)); }

  std::string render() const {
    const auto idx = sample_indices();
    double xmin = x_.empty() ? 0.0 : x_.front();
    double xmax = x_.empty() ? 1.0 : x_.back();
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    double ymin = INFINITY;
    double ymax = -INFINITY;
    auto extend = [&](const std::vector<double>& v) {
      for (std::size_t i : idx) {
        const double t = tr(v[i]);
        if (std::isfinite(t)) {
          ymin = std::min(ymin, t);
          ymax = std::max(ymax, t);
        }
      }
    };
    for (const auto& b : bands_) {
      extend(b.lower);
      extend(b.upper);
    }
    for (const auto& l : lines_) extend(l.y);
    if (!std::isfinite(ymin)) {
      ymin = 0.0;
      ymax = 1.0;
    }
    if (log_y_) {
      ymin = std::floor(ymin);
      ymax = std::ceil(ymax);
    }
    if (!(ymax > ymin)) ymax = ymin + 1.0;

    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * kPlotW; };
    auto py = [&](double y) { return kTop + (1.0 - (y - ymin) / (ymax - ymin)) * kPlotH; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">"
      << title_ << "</text>\n";
    s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kPlotW
      << "\" height=\"" << kPlotH << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = xmin + (xmax - xmin) * k / 4.0;
      const double yv = ymin + (ymax - ymin) * k / 4.0;
      s << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << kTop + kPlotH + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << label(xv, false) << "</text>\n";
      s << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt(py(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << label(yv, log_y_) << "</text>\n";
    }
    s << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kHeight - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xlabel_ << "</text>\n";
    s << "<text x=\"16\" y=\"" << kTop + kPlotH / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 "
      << kTop + kPlotH / 2 << ")\">" << ylabel_ << "</text>\n";

    for (const auto& b : bands_) {
      s << "<polygon fill=\"" << b.color << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
      for (std::size_t i : idx) s << fmt(px(x_[i])) << ',' << fmt(py(clip(tr(b.upper[i]), ymin))) << ' ';
      for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
        s << fmt(px(x_[*it])) << ',' << fmt(py(clip(tr(b.lower[*it]), ymin))) << ' ';
      }
      s << "\"/>\n";
    }
    int legend = 0;
    for (const auto& l : lines_) {
      s << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i : idx) s << fmt(px(x_[i])) << ',' << fmt(py(clip(tr(l.y[i]), ymin))) << ' ';
      s << "\"/>\n";
      s << "<text x=\"" << kLeft + kPlotW - 8 << "\" y=\"" << kTop + 16 + 14 * legend++
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
        << l.color << "\">" << l.label << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
  }

 private:
  static constexpr int kWidth = 640;
  static constexpr int kHeight = 400;
  static constexpr int kLeft = 70;
  static constexpr int kTop = 32;
  static constexpr int kPlotW = 550;
  static constexpr int kPlotH = 320;

  double tr(double v) const {
    if (!log_y_) return v;
    return std::log10(std::max(v, kLogFloor));
  }

  static double clip(double v, double lo) { return std::isfinite(v) ? v : lo; }

  // to_chars keeps the output independent of the C locale.
  static std::string fixed(double v, int precision) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return std::string(buf, r.ptr);
  }

  static std::string fmt(double v) { return fixed(v, 1); }

  static std::string label(double v, bool log) {
    if (log) return "1e" + fixed(v, 0);
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 3);
    return std::string(buf, r.ptr);
  }

  std::vector<std::size_t> sample_indices() const {
    std::vector<std::size_t> idx;
    const std::size_t n = x_.size();
    if (n == 0) return idx;
    const std::size_t stride = std::max<std::size_t>(1, (n + kMaxPlotPoints - 1) / kMaxPlotPoints);
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
  }

  std::string title_;
  std::string xlabel_;
  std::string ylabel_;
  bool log_y_;
  std::vector<double> x_;
  std::vector<Band> bands_;
  std::vector<Line> lines_;
};

std::string band_plot(const AggregateStats& stats, const std::string& name,
                      const std::string& title, bool log_y) {
  const SeriesStats& p = stats.find(name).pointwise;
  std::vector<double> lo(p.mean.size());
  std::vector<double> hi(p.mean.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] = p.mean[i] - p.std[i];
    hi[i] = p.mean[i] + p.std[i];
  }
  SvgPlot plot(title, "t [s]", name, log_y);
  plot.set_x(stats.time);
  plot.add_band({p.min, p.max, "#9ecae1"});
  plot.add_band({lo, hi, "#3182bd"});
  plot.add_line({"mean", p.mean, "#08519c"});
  return plot.render();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "normal_cross,sigma2_hitch,sigma_min_hitch,sigma_min_nonzero\n";
  for (const auto& r : rows) {
    s += format_double(r.normal_cross) + ',' + format_double(r.sigma2_hitch) + ',' +
         format_double(r.sigma_min_hitch) + ',' + format_double(r.sigma_min_nonzero) + '\n';
  }
  return s;
}

std::string aggregate_csv(const AggregateStats& stats) {
  std::string s = "t";
  for (const auto& ns : stats.series) {
    for (const char* k : {"mean", "std", "min", "max"}) s += ',' + ns.name + '_' + k;
  }
  s += '\n';
  for (std::size_t i = 0; i < stats.time.size(); ++i) {
    s += format_double(stats.time[i]);
    for (const auto& ns : stats.series) {
      const auto& p = ns.pointwise;
      for (double v : {p.mean[i], p.std[i], p.min[i], p.max[i]}) {
        s += ',';
        s += format_double(v);
      }
    }
    s += '\n';
  }
  return s;
}

std::string terminal_csv(const ScenarioResult& r) {
  std::string s = "speed,trials,failed,e_sum_mean,e_sum_std,e_sum_min,e_sum_max,V_mean,"
                  "tension_floor_violations,model_tension_floor_violations,psi_violations,"
                  "qp_failures\n";
  for (const auto& g : r.groups) {
    s += format_double(g.speed) + ',' + std::to_string(g.trials.size()) + ',' +
         std::to_string(g.failed);
    if (g.stats) {
      const ScalarStats e = g.stats->find("e_sum").terminal;
      const ScalarStats v = g.stats->find("V").terminal;
      for (double x : {e.mean, e.std, e.min, e.max, v.mean}) s += ',' + format_double(x);
    } else {
      s += ",,,,,";
    }
    s += ',' + std::to_string(g.safety.tension_floor) + ',' +
         std::to_string(g.safety.model_tension_floor) + ',' +
         std::to_string(g.safety.psi_negative) + ',' + std::to_string(g.safety.qp_failures) +
         '\n';
  }
  return s;
}

Json group_json(const SpeedGroup& g, const fs::path& prefix) {
  Json j;
  j["speed"] = g.speed;
  j["trials"] = g.trials.size();
  j["completed"] = g.trials.size() - static_cast<std::size_t>(g.failed);
  j["failed"] = g.failed;
  j["safety"] = safety_json(g.safety);
  Json failures = Json::array();
  for (std::size_t i = 0; i < g.trials.size(); ++i) {
    const auto& t = g.trials[i];
    if (!t.failed) continue;
    failures.push_back({{"trial", i},
                        {"seed", t.seed},
                        {"kind", t.failure_kind},
                        {"message", t.failure},
                        {"failed_at", t.failure_time}});
  }
  j["failures"] = failures;
  j["directory"] = prefix.generic_string();
  if (g.stats) {
    j["terminal_cut"] = g.stats->terminal_cut;
    j["time"] = g.stats->time;
    Json series = Json::object();
    for (const auto& ns : g.stats->series) {
      series[ns.name] = {{"mean", ns.pointwise.mean},
                         {"std", ns.pointwise.std},
                         {"min", ns.pointwise.min},
                         {"max", ns.pointwise.max},
                         {"terminal", stats_json(ns.terminal)}};
    }
    j["series"] = series;
  } else {
    j["terminal_cut"] = nullptr;
    j["time"] = Json::array();
    j["series"] = Json::object();
  }
  return j;
}

fs::path group_prefix(const ScenarioResult& r, const SpeedGroup& g) {
  if (r.groups.size() == 1) return {};
  return fs::path("speed_" + format_double(g.speed));
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw IoError("cannot allocate digest context");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoError("SHA-1 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

std::string trial_csv(const TrialSeries& trial, bool timing) {
  trial.check_consistent();
  std::string s = kTrialHeader;
  s += '\n';
  for (std::size_t k = 0; k < trial.size(); ++k) {
    s += format_double(trial.time[k]);
    for (double v : {trial.V[k], trial.e_sum[k], trial.delta[k]}) s += ',' + format_double(v);
    for (double v : trial.tension[k]) s += ',' + format_double(v);
    for (double v : trial.psi[k]) s += ',' + format_double(v);
    s += ',';
    if (timing) s += format_double(trial.qp_seconds[k] * 1e3);
    s += '\n';
  }
  return s;
}

TrialSeries parse_trial_csv(std::string_view text) {
  TrialSeries t;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      if (line != kTrialHeader) throw ConfigError("unexpected trial CSV header");
      header = false;
      continue;
    }
    std::vector<double> f;
    std::size_t a = 0;
    for (int col = 0; col < 13; ++col) {
      std::size_t b = line.find(',', a);
      if (b == std::string_view::npos) b = line.size();
      const std::string_view cell = line.substr(a, b - a);
      if (col < 12) {
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
          throw ConfigError("malformed number '" + std::string(cell) + "' in trial CSV");
        }
        f.push_back(v);
      }
      if (b == line.size() && col < 12) throw ConfigError("short row in trial CSV");
      a = b + 1;
    }
    t.time.push_back(f[0]);
    t.V.push_back(f[1]);
    t.e_sum.push_back(f[2]);
    t.delta.push_back(f[3]);
    t.tension.push_back({f[4], f[5], f[6], f[7]});
    t.psi.push_back({f[8], f[9], f[10], f[11]});
    t.cascade.push_back(0.0);
    t.hitch_error.push_back(0.0);
    t.model_tension.push_back({0.0, 0.0, 0.0, 0.0});
    t.qp_iterations.push_back(0);
    t.qp_seconds.push_back(0.0);
  }
  if (header) throw ConfigError("empty trial CSV");
  return t;
}

RunArtifacts emit_outputs(const ScenarioResult& result, const fs::path& dir) {
  const ScenarioConfig& cfg = result.config;
  const bool sweep = cfg.experiment == Experiment::FeasibilitySweep;
  if (!sweep && result.groups.empty()) throw ConfigError("no trials to emit");
  if (sweep && result.sweep.empty()) throw ConfigError("no sweep rows to emit");
  for (const auto& g : result.groups) {
    if (g.trials.empty()) throw ConfigError("no trials to emit");
  }

  RunArtifacts art;
  struct Entry {
    std::size_t bytes;
    std::string blob;
  };
  std::map<std::string, Entry> written;  // relative path, sorted
  auto emit = [&](const fs::path& rel, const std::string& content) {
    write_file(dir / rel, content);
    written[rel.generic_string()] = {content.size(), git_blob_hash(content)};
    return dir / rel;
  };

  const Json config_echo = Json::parse(config_to_json(cfg));
  Json summary;
  summary["schema_version"] = kSummarySchemaVersion;
  summary["experiment"] = std::string(to_string(cfg.experiment));
  summary["config"] = config_echo;

  SafetyCounts total;
  Json groups = Json::array();
  for (const auto& g : result.groups) {
    const fs::path prefix = group_prefix(result, g);
    const std::size_t limit = cfg.csv_trials < 0
                                  ? g.trials.size()
                                  : std::min<std::size_t>(g.trials.size(), cfg.csv_trials);
    for (std::size_t i = 0; i < limit; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "trial_%04zu.csv", i);
      art.trial_csv.push_back(emit(prefix / "trials" / name, trial_csv(g.trials[i], cfg.timing)));
    }
    if (g.stats) {
      art.aggregate_csv.push_back(emit(prefix / "aggregate.csv", aggregate_csv(*g.stats)));
      const std::string tag =
          result.groups.size() > 1 ? " (" + format_double(g.speed) + " m/s)" : "";
      art.svg.push_back(emit(prefix / "V.svg",
                             band_plot(*g.stats, "V", "Lyapunov function" + tag, true)));
      art.svg.push_back(emit(prefix / "e_sum.svg",
                             band_plot(*g.stats, "e_sum", "Configuration error" + tag, false)));
    }
    total += g.safety;
    groups.push_back(group_json(g, prefix));
  }
  summary["trials_per_group"] = cfg.trials;
  summary["failed_trials"] = result.failed_trials();
  summary["safety"] = safety_json(total);
  summary["groups"] = groups;

  Json sweep_rows = Json::array();
  for (const auto& r : result.sweep) {
    sweep_rows.push_back({{"normal_cross", r.normal_cross},
                          {"sigma2_hitch", r.sigma2_hitch},
                          {"sigma_min_hitch", r.sigma_min_hitch},
                          {"sigma_min_nonzero", r.sigma_min_nonzero}});
  }
  summary["sweep"] = sweep_rows;
  if (sweep) {
    art.aggregate_csv.push_back(emit("sweep.csv", sweep_csv(result.sweep)));
    std::vector<double> x, s2, smin;
    for (const auto& r : result.sweep) {
      x.push_back(r.normal_cross);
      s2.push_back(r.sigma2_hitch);
      smin.push_back(r.sigma_min_nonzero);
    }
    SvgPlot plot("Input matrix singular values", "|n12 x n34|", "singular value", false);
    plot.set_x(x);
    plot.add_line({"second smallest of B_p", s2, "#08519c"});
    plot.add_line({"smallest of [B_p; B_robot]", smin, "#e6550d"});
    art.svg.push_back(emit("sweep.svg", plot.render()));
  }
  if (cfg.experiment == Experiment::DynamicSpeeds) {
    art.aggregate_csv.push_back(emit("terminal_by_speed.csv", terminal_csv(result)));
  }
  art.summary_json = emit("summary.json", summary.dump() + '\n');

  // The manifest lists every file above; its timings make it the one
  // artifact that differs between identical runs.
  Json files = Json::array();
  std::string listing;
  for (const auto& [path, entry] : written) {
    files.push_back({{"path", path}, {"bytes", entry.bytes}, {"blob", entry.blob}});
    listing += entry.blob + "  " + path + '\n';
  }
  Json manifest;
  manifest["tool"] = "hitchsim";
  manifest["config"] = config_echo;
  manifest["files"] = files;
  manifest["content_hash"] = git_blob_hash(listing);
  manifest["timings"] = {{"wall_seconds", result.wall_seconds},
                         {"trials", static_cast<long>(result.groups.size()) * cfg.trials}};
  art.manifest = dir / "manifest.json";
  write_file(art.manifest, manifest.dump(2) + '\n');
  return art;
}

}  // namespace hitch
