#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlas/config.hpp"
#include "nlas/diagnostics.hpp"
#include "nlas/evolve.hpp"
#include "nlas/profiles.hpp"

namespace nlas {

struct NamedRun {
  VelocityLaw law;
  Trajectory traj;
  std::vector<DiagRecord> series;

  std::string tag() const { return std::string(law_name(law.kind)); }
};

struct ScenarioOutcome {
  std::vector<NamedRun> runs;
  std::vector<Report> reports;
  std::vector<FitResult> fits;  // parallel to fit_runs
  std::vector<std::string> fit_runs;
  bool numerical_failure = false;
  int exit_code = 0;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int usage = 2;
inline constexpr int numerical = 3;
}  // namespace exit_code

inline MarkerField build_profile(const RunConfig& c) {
  const bool patch = c.scenario == Scenario::PatchBlowup || c.law.kind == LawKind::AlphaPatch;
  MarkerField f = patch ? build_patch_profile(c.profile) : build_euler_profile(c.profile);
  return c.amplitude == 1.0 ? f : scaled(std::move(f), c.amplitude);
}

/// Laws run by a scenario, primary first.
inline std::vector<VelocityLaw> scenario_laws(const RunConfig& c) {
  switch (c.scenario) {
    case Scenario::LocalComparison: return {VelocityLaw::euler_log(), VelocityLaw::local()};
    case Scenario::HyperbolicApprox: return {VelocityLaw::odd_euler(), VelocityLaw::hyperbolic_approx()};
    default: return {c.law};
  }
}

/// A failed run counts as numerical failure unless it already reached its
/// milestone: x2/x1 growth to the square of its initial value for the
/// log-kernel laws, or x1 reaching eps_blowup for the patch law.
inline bool failed_before_milestone(const NamedRun& r) {
  const Termination t = r.traj.termination;
  if (t != Termination::StepUnderflow && t != Termination::MarkerCrossing) return false;
  const bool ratio_law = r.law.is_euler() || r.law.kind == LawKind::HyperbolicApprox;
  if (ratio_law && r.series.size() >= 2 && r.series.back().log_ratio >= 2.0 * r.series.front().log_ratio) return false;
  return true;
}

/// Re-run every checker of the scenario on existing runs (the runs may have
/// been read back from disk).
inline void evaluate_scenario(const RunConfig& c, ScenarioOutcome& out) {
  out.reports.clear();
  out.fits.clear();
  out.fit_runs.clear();
  out.numerical_failure = false;
  const int threads = c.step.threads;
  auto fit = [&](const NamedRun& r, Quantity q, FitModel m) {
    try {
      out.fits.push_back(fit_growth(r.series, q, m));
      out.fit_runs.push_back(r.tag() + "." + std::string(quantity_name(q)));
    } catch (const FitError&) {
    }
  };
  for (const NamedRun& r : out.runs) {
    out.numerical_failure = out.numerical_failure || failed_before_milestone(r);
    InvariantOptions io;
    io.threads = threads;
    io.allow_coincident = c.step.coalesce;
    io.structure = c.amplitude > 0.0;
    io.ratio_increasing = c.scenario != Scenario::Custom && r.law.kind != LawKind::Local && r.law.kind != LawKind::AlphaPatch;
    Report inv = check_invariants(r.traj, r.law, io);
    inv.name += "." + r.tag();
    out.reports.push_back(std::move(inv));
  }
  const NamedRun& main = out.runs.front();
  switch (c.scenario) {
    case Scenario::EulerGrowth: {
      Report growth;
      growth.name = "ratio_growth";
      try {
        const FitResult f = fit_growth(main.series, Quantity::Ratio, FitModel::DoubleExponential);
        growth.at_least("double_exp_r2", f.t_hi, f.r_squared, 0.98);
        growth.at_least("double_exp_rate", f.t_hi, f.C2, 0.0);
        if (!(f.C2 > 0.0)) growth.checks.back().pass = false;
      } catch (const FitError& e) {
        growth.holds("double_exp_fit", main.series.back().t, false);
        growth.notes.push_back(e.what());
      }
      out.reports.push_back(std::move(growth));
      fit(main, Quantity::Ratio, FitModel::DoubleExponential);
      fit(main, Quantity::Ratio, FitModel::Exponential);
      fit(main, Quantity::GradSup, FitModel::DoubleExponential);
      out.reports.push_back(lemma_report(main.traj, main.series, threads));
      out.reports.push_back(ux_bound_check(main.series));
      out.reports.push_back(gradient_envelope_check(main.series));
      out.reports.push_back(
          support_bound_check(main.series, calibrate_support_constant(main.traj.snapshots.front(), main.law, threads)));
      break;
    }
    case Scenario::PatchBlowup:
      out.reports.push_back(patch_bounds(main.traj, {c.law.gamma(), c.profile.M, threads}));
      break;
    case Scenario::LocalComparison:
      try {
        out.reports.push_back(growth_discrimination(out.runs[0].series, out.runs[1].series));
      } catch (const FitError& e) {
        Report r;
        r.name = "growth_discrimination";
        r.holds("fits", 0.0, false);
        r.notes.push_back(e.what());
        out.reports.push_back(std::move(r));
      }
      for (const NamedRun& r : out.runs) {
        fit(r, Quantity::GradSup, FitModel::Exponential);
        fit(r, Quantity::GradSup, FitModel::DoubleExponential);
      }
      break;
    case Scenario::HyperbolicApprox:
      try {
        out.reports.push_back(hyperbolic_compare_report(out.runs[0].series, out.runs[1].series));
      } catch (const FitError& e) {
        Report r;
        r.name = "hyperbolic_approx";
        r.holds("fits", 0.0, false);
        r.notes.push_back(e.what());
        out.reports.push_back(std::move(r));
      }
      for (const NamedRun& r : out.runs) fit(r, Quantity::Ratio, FitModel::DoubleExponential);
      break;
    case Scenario::Custom: {
      if (main.law.is_euler() && support_D(main.traj.snapshots.front()) <= 1.0) {
        out.reports.push_back(
            support_bound_check(main.series, calibrate_support_constant(main.traj.snapshots.front(), main.law, threads)));
      }
      break;
    }
  }
  bool all = true;
  for (const Report& r : out.reports) all = all && r.passed();
  out.exit_code = out.numerical_failure ? exit_code::numerical : (all ? exit_code::ok : exit_code::check_failed);
}

inline ScenarioOutcome run_scenario(const RunConfig& c) {
  validate(c);
  ScenarioOutcome out;
  const MarkerField profile = build_profile(c);
  for (const VelocityLaw& law : scenario_laws(c)) {
    NamedRun r;
    r.law = law;
    r.traj = run(profile, law, c.step);
    r.series = records(r.traj, law, c.step.threads);
    r.traj.records = r.series;
    out.runs.push_back(std::move(r));
  }
  evaluate_scenario(c, out);
  return out;
}

/// Machine-readable summary. Free of timings, thread counts and the output
/// path, so identical configs give identical documents.
inline nlohmann::ordered_json summary_json(const RunConfig& c, const ScenarioOutcome& out) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg = to_json(c);
  cfg.erase("threads");
  cfg.erase("output_dir");
  j["config"] = cfg;
  j["exit_code"] = out.exit_code;
  j["numerical_failure"] = out.numerical_failure;
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  for (const NamedRun& r : out.runs) {
    const MarkerField& last = r.traj.snapshots.back();
    nlohmann::ordered_json jr;
    jr["law"] = r.tag();
    jr["termination"] = termination_name(r.traj.termination);
    jr["accepted_steps"] = r.traj.accepted_steps;
    jr["snapshots"] = r.traj.snapshots.size();
    jr["t_final"] = last.t;
    jr["x1_final"] = last.x1();
    jr["x2_final"] = last.x2();
    jr["first_coalescence_t"] = num(r.traj.first_coalescence_t);
    j["runs"].push_back(jr);
  }
  j["fits"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < out.fits.size(); ++i) {
    const FitResult& f = out.fits[i];
    nlohmann::ordered_json jf;
    jf["series"] = out.fit_runs[i];
    jf["model"] = model_name(f.model);
    jf["C1"] = num(f.C1);
    jf["C2"] = num(f.C2);
    jf["r_squared"] = num(f.r_squared);
    jf["t_lo"] = f.t_lo;
    jf["t_hi"] = f.t_hi;
    jf["samples"] = f.samples;
    j["fits"].push_back(jf);
  }
  for (const Report& r : out.reports) {
    nlohmann::ordered_json jr;
    jr["name"] = r.name;
    jr["passed"] = r.passed();
    jr["degenerate"] = r.degenerate;
    jr["failures"] = r.failures();
    jr["worst"] = nlohmann::ordered_json::array();
    for (const Check& w : r.worst()) {
      nlohmann::ordered_json jc;
      jc["check"] = w.name;
      jc["t"] = num(w.t);
      jc["value"] = num(w.value);
      jc["bound"] = num(w.bound);
      jc["margin"] = num(w.margin);
      jc["pass"] = w.pass;
      if (w.advisory) jc["advisory"] = true;
      jr["worst"].push_back(jc);
    }
    jr["notes"] = r.notes;
    j["reports"].push_back(jr);
  }
  return j;
}

}  // namespace nlas
