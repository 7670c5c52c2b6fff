#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlas/config.hpp"
#include "nlas/io.hpp"
#include "nlas/scenario.hpp"

namespace nlas {

namespace fs = std::filesystem;

/// Files of one output directory. Single-run scenarios use series.csv,
/// comparisons one series_<law>.csv per run.
struct ArtifactPaths {
  fs::path dir;

  fs::path summary() const { return dir / "summary.json"; }
  fs::path report() const { return dir / "report.txt"; }
  fs::path series(const std::string& tag, bool multi) const {
    return dir / (multi ? "series_" + tag + ".csv" : std::string("series.csv"));
  }
  fs::path snapshots(const std::string& tag) const { return dir / "snapshots" / tag; }
};

inline std::string snapshot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%06zu.txt", i);
  return buf;
}

namespace detail {

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

inline std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::string report_text(const std::vector<Report>& reports) {
  std::ostringstream os;
  for (const Report& r : reports) write_report(os, r);
  return os.str();
}

inline void write_artifacts(const RunConfig& c, const ScenarioOutcome& out) {
  const ArtifactPaths paths{c.output_dir};
  fs::create_directories(paths.dir);
  const bool multi = out.runs.size() > 1;
  for (const NamedRun& r : out.runs) {
    if (c.emit_series) detail::write_file(paths.series(r.tag(), multi), series_text(r.series));
    if (c.emit_snapshots) {
      const fs::path d = paths.snapshots(r.tag());
      fs::remove_all(d);
      fs::create_directories(d);
      for (std::size_t i = 0; i < r.traj.snapshots.size(); ++i) {
        std::ostringstream os;
        write_snapshot(os, r.traj.snapshots[i], r.law);
        detail::write_file(d / snapshot_name(i), os.str());
      }
    }
  }
  if (c.emit_report) detail::write_file(paths.report(), report_text(out.reports));
  detail::write_file(paths.summary(), summary_json(c, out).dump(2) + "\n");
}

/// Result of re-reading an output directory and re-running every checker.
struct Verification {
  RunConfig config;
  ScenarioOutcome outcome;
  Report artifacts;  // consistency of the files themselves
  int exit_code = 0;
};

inline Verification verify_artifacts(const fs::path& dir, int threads = 1) {
  const ArtifactPaths paths{dir};
  Verification v;
  v.artifacts.name = "artifacts";
  const auto summary = nlohmann::json::parse(detail::read_file(paths.summary()));
  nlohmann::json cfg = summary.at("config");
  cfg["threads"] = threads;
  cfg["output_dir"] = dir.string();
  v.config = config_from_json(cfg);
  if (!v.config.emit_series || !v.config.emit_snapshots)
    throw ConfigError("emit", "verify needs both series and snapshots");

  const auto& runs = summary.at("runs");
  const bool multi = runs.size() > 1;
  for (const auto& jr : runs) {
    NamedRun r;
    const std::string tag = jr.at("law").get<std::string>();
    const fs::path sp = paths.series(tag, multi);
    {
      std::ifstream is(sp, std::ios::binary);
      if (!is) throw std::runtime_error("cannot read " + sp.string());
      r.series = read_series(is, sp.string());
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(paths.snapshots(tag)))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no snapshots for " + tag);
    for (std::size_t i = 0; i < files.size(); ++i) {
      std::ifstream is(files[i], std::ios::binary);
      VelocityLaw law;
      r.traj.snapshots.push_back(read_snapshot(is, &law, files[i].string()));
      if (i == 0) r.law = law;
    }
    const std::string term = jr.at("termination").get<std::string>();
    for (Termination t : {Termination::TEnd, Termination::BlowupX1, Termination::StepUnderflow,
                          Termination::MarkerCrossing})
      if (termination_name(t) == term) r.traj.termination = t;
    r.traj.accepted_steps = jr.at("accepted_steps").get<std::size_t>();
    if (jr.at("first_coalescence_t").is_number()) r.traj.first_coalescence_t = jr["first_coalescence_t"].get<double>();

    // The series must be exactly what the snapshots produce.
    const std::vector<DiagRecord> fresh = records(r.traj, r.law, threads);
    const double t_end = r.traj.snapshots.back().t;
    v.artifacts.holds("row_count." + tag, t_end, fresh.size() == r.series.size());
    for (std::size_t i = 0; i < std::min(fresh.size(), r.series.size()); ++i)
      v.artifacts.holds("series_matches_snapshots." + tag, r.series[i].t, fresh[i] == r.series[i]);
    const bool ratio_law = r.law.kind != LawKind::Local && r.law.kind != LawKind::AlphaPatch &&
                           v.config.scenario != Scenario::Custom;
    if (ratio_law)
      for (std::size_t i = 1; i < r.series.size(); ++i)
        v.artifacts.holds("series_ratio_increasing." + tag, r.series[i].t, r.series[i].ratio > r.series[i - 1].ratio);
    r.traj.records = r.series;
    v.outcome.runs.push_back(std::move(r));
  }
  evaluate_scenario(v.config, v.outcome);
  v.exit_code = v.outcome.exit_code;
  if (!v.artifacts.passed() && v.exit_code == exit_code::ok) v.exit_code = exit_code::check_failed;
  return v;
}

}  // namespace nlas
