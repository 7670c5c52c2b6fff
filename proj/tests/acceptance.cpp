// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "nlas/config.hpp"
#include "nlas/diagnostics.hpp"
#include "nlas/io.hpp"
#include "nlas/kernels.hpp"
#include "nlas/quadrature.hpp"
#include "nlas/scenario.hpp"

using namespace nlas;

namespace {

int failures = 0;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void verdict(int id, const char* title, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Report* find_report(const ScenarioOutcome& out, const std::string& name) {
  for (const Report& r : out.reports)
    if (r.name == name) return &r;
  return nullptr;
}

// Smallest margin among the checks with the given name.
std::string worst(const Report& r, const std::string& check) {
  const Check* w = nullptr;
  for (const Check& c : r.checks)
    if (c.name == check && (!w || c.margin < w->margin)) w = &c;
  if (!w) return check + " absent";
  return fmt("%s min margin %.3g at t=%.6g", check.c_str(), w->margin, w->t);
}

bool named_checks_pass(const Report& r, const std::vector<std::string>& names) {
  for (const std::string& n : names) {
    bool seen = false;
    for (const Check& c : r.checks)
      if (c.name == n) {
        seen = true;
        if (!c.pass) return false;
      }
    if (!seen) return false;
  }
  return true;
}

void quadrature_exactness() {
  Stopwatch sw;
  std::mt19937_64 rng(20261014);
  std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.01, 2.0), g(0.1, 0.9), unit(0.0, 1.0);
  double err_log = 0.0, err_pow = 0.0;
  int inside = 0;
  for (int i = 0; i < 200; ++i) {
    const double y0 = u(rng);
    const Segment s{y0, y0 + w(rng), u(rng), u(rng)};
    const bool in = i % 2 == 0;
    const double x = in ? s.y0 + (s.y1 - s.y0) * unit(rng) : 1.5 * u(rng);
    inside += in;
    if (i < 100) {
      const double ref = reference_integrate(
          [&](double c, double d) { return s.at(c + d) * std::log(std::abs((c - x) + d)); }, s.y0, s.y1, 1e-10, {x});
      err_log = std::max(err_log, std::abs(segment_log_velocity(x, s) - ref));
    } else {
      const double gamma = g(rng);
      const double ref = reference_integrate(
          [&](double c, double d) { return s.at(c + d) * std::pow(std::abs((c - x) + d), -gamma); }, s.y0, s.y1,
          1e-10, {x});
      err_pow = std::max(err_pow, std::abs(segment_power_velocity(x, s, gamma) - ref));
    }
  }
  const double t = sw.seconds();
  verdict(1, "quadrature exactness", err_log <= 1e-8 && err_pow <= 1e-8 && t < 5.0,
          fmt("max |err| log %.3g, power %.3g over 100+100 cases (%d with x inside), %.2f s", err_log, err_pow, inside,
              t));
}

void law_equivalence() {
  Stopwatch sw;
  ProfileSpec spec = default_euler_spec();
  spec.n_markers = 1024;
  const MarkerField profile = build_euler_profile(spec);
  const MarkerField trapezoid = mirror_half(std::vector<double>{0.0, 0.15, 0.55, 1.0},
                                            std::vector<double>{0.0, 1.0, 1.0, 0.0}, 0.0, 1, 2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> logx(std::log(1e-5), std::log(1.2));
  double rel = 0.0;
  for (int k = 0; k < 20; ++k) {
    const MarkerField& f = k % 2 ? trapezoid : profile;
    const double x = std::exp(logx(rng));
    const double a = velocity(VelocityLaw::euler_log(), f, x);
    const double b = velocity(VelocityLaw::odd_euler(), f, x);
    rel = std::max(rel, std::abs(a - b) / std::max(std::abs(b), 1e-300));
  }
  const double t = sw.seconds();
  verdict(2, "law equivalence", rel <= 1e-6 && t < 5.0, fmt("max relative difference %.3g at 20 points, %.2f s", rel, t));
}

void hilbert_consistency() {
  Stopwatch sw;
  // Markers at 0, 0.2, 0.6 and 1; sample points stay 0.1 away from them and
  // avoid zeros of u''', where round-off at h = 1e-5 would dominate.
  const MarkerField f =
      mirror_half(std::vector<double>{0.0, 0.2, 0.6, 1.0}, std::vector<double>{0.0, 1.0, 1.0, 0.0}, 0.0, 1, 2);
  const double hs[] = {1e-2, 1e-3, 1e-4, 1e-5};
  double worst_order = INFINITY;
  for (double x : {0.3, 0.35, 0.5, 0.75, 0.85}) {
    const double ref = hilbert_transform_at(f, x);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double h : hs) {
      const double fd =
          (velocity(VelocityLaw::euler_log(), f, x + h) - velocity(VelocityLaw::euler_log(), f, x - h)) / (2.0 * h);
      const double lx = std::log(h), ly = std::log(std::abs(fd - ref));
      sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    const double order = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
    worst_order = std::min(worst_order, order);
  }
  const double t = sw.seconds();
  verdict(3, "Hilbert consistency", worst_order >= 1.9 && t < 10.0,
          fmt("lowest observed order %.3f over 5 points, %.2f s", worst_order, t));
}

struct Scenarios {
  RunConfig euler_cfg = scenario_defaults(Scenario::EulerGrowth);
  RunConfig patch_cfg = scenario_defaults(Scenario::PatchBlowup);
  ScenarioOutcome euler, patch;
  double euler_s = 0.0, patch_s = 0.0;
};

void double_exponential_growth(const Scenarios& s) {
  const NamedRun& r = s.euler.runs.front();
  bool increasing = true;
  for (std::size_t k = 1; k < r.series.size(); ++k) increasing = increasing && r.series[k].ratio > r.series[k - 1].ratio;
  try {
    const FitResult fit = fit_growth(r.series, Quantity::Ratio, FitModel::DoubleExponential, default_window(r.series));
    verdict(4, "double-exponential growth",
            fit.C2 > 0.0 && fit.r_squared >= 0.98 && increasing && s.euler_s <= 300.0,
            fmt("N=%zu %s at t=%.4g, C2=%.4g r2=%.5f, ratio %s, %.1f s", s.euler_cfg.profile.n_markers,
                std::string(termination_name(r.traj.termination)).c_str(), r.traj.snapshots.back().t, fit.C2,
                fit.r_squared, increasing ? "strictly increasing" : "NOT increasing", s.euler_s));
  } catch (const FitError& e) {
    verdict(4, "double-exponential growth", false, std::string("fit failed: ") + e.what());
  }
}

void decomposition(const Scenarios& s) {
  const Report* r = find_report(s.euler, "ratio_decomposition");
  if (!r) return verdict(5, "ratio decomposition", false, "report missing");
  verdict(5, "ratio decomposition", r->passed() && !r->degenerate,
          fmt("%zu checks, %zu failed; %s; %s", r->checks.size(), r->failures(), worst(*r, "II_lower").c_str(),
              worst(*r, "rate_vs_finite_difference").c_str()));
}

void patch_blowup(const Scenarios& s) {
  const Report* r = find_report(s.patch, "patch_blowup");
  if (!r) return verdict(6, "alpha-patch blowup", false, "report missing");
  const NamedRun& run = s.patch.runs.front();
  const bool ok =
      named_checks_pass(*r, {"terminates_blowup_x1", "intermediate", "blowup_time", "separation"}) && s.patch_s <= 300.0;
  verdict(6, "alpha-patch blowup", ok,
          fmt("%s at t=%.6g (1.1 T0 = %.6g), %s, %s, full report %s, %.1f s",
              std::string(termination_name(run.traj.termination)).c_str(), run.traj.snapshots.back().t,
              1.1 * patch::blowup_time_bound(0.5, run.traj.snapshots.front().x1()), worst(*r, "intermediate").c_str(),
              worst(*r, "separation").c_str(), r->passed() ? "pass" : "FAIL", s.patch_s));
}

void discrimination() {
  Stopwatch sw;
  const RunConfig c = scenario_defaults(Scenario::LocalComparison);
  const ScenarioOutcome out = run_scenario(c);
  const Report* r = find_report(out, "growth_discrimination");
  if (!r) return verdict(7, "model discrimination", false, "report missing");
  std::string notes;
  for (const std::string& n : r->notes) notes += "; " + n;
  verdict(7, "model discrimination", r->passed() && !r->degenerate, fmt("%.1f s", sw.seconds()) + notes);
}

void invariants(const Scenarios& s) {
  bool ok = true;
  std::string detail;
  for (const ScenarioOutcome* out : {&s.euler, &s.patch})
    for (const Report& r : out->reports)
      if (r.name.rfind("invariants.", 0) == 0) {
        ok = ok && r.passed();
        detail += fmt("%s%s %zu checks %s", detail.empty() ? "" : ", ", r.name.c_str(), r.checks.size(),
                      r.passed() ? "pass" : "FAIL");
      }
  verdict(8, "invariant suite", ok && !detail.empty(), detail);
}

void determinism(const Scenarios& s) {
  bool ok = true;
  std::string detail;
  for (const auto& [cfg, out] : {std::pair{&s.euler_cfg, &s.euler}, std::pair{&s.patch_cfg, &s.patch}}) {
    const NamedRun& base = out->runs.front();
    const std::string ref = series_text(base.series);
    for (int threads : {2, 8}) {
      Stopwatch sw;
      StepControl ctl = cfg->step;
      ctl.threads = threads;
      const Trajectory traj = run(build_profile(*cfg), base.law, ctl);
      const bool same = series_text(records(traj, base.law, threads)) == ref;
      ok = ok && same;
      detail += fmt("%s%s@%d %s (%.0f s)", detail.empty() ? "" : ", ", std::string(scenario_name(cfg->scenario)).c_str(),
                    threads, same ? "identical" : "DIFFERS", sw.seconds());
    }
  }
  verdict(9, "determinism", ok, detail);
}

}  // namespace

int main() {
  quadrature_exactness();
  law_equivalence();
  hilbert_consistency();

  Scenarios s;
  {
    Stopwatch sw;
    s.euler = run_scenario(s.euler_cfg);
    s.euler_s = sw.seconds();
  }
  double_exponential_growth(s);
  decomposition(s);
  if (const Report* h = find_report(s.euler, "hilbert_bound")) {
    std::size_t advisory_fail = 0;
    for (const Check& c : h->checks) advisory_fail += c.advisory && !c.pass;
    std::printf("[INFO] Hilbert bound: explicit constant %s; calibrated constant (advisory) exceeded at %zu of %zu records\n",
                named_checks_pass(*h, {"explicit_constant"}) ? "holds" : "VIOLATED", advisory_fail,
                h->checks.size() / 2);
  }
  {
    Stopwatch sw;
    s.patch = run_scenario(s.patch_cfg);
    s.patch_s = sw.seconds();
  }
  patch_blowup(s);
  discrimination();
  invariants(s);
  determinism(s);

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
