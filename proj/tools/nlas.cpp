// nlas: run, verify and compare the nonlocal active scalar scenarios.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlas/artifacts.hpp"
#include "nlas/config.hpp"
#include "nlas/scenario.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string scenario;
  std::string out;
  std::optional<int> threads;
  std::optional<int> snapshot_stride;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file");
  sub->add_option("--scenario", c.scenario, "scenario name when no config file is given");
  sub->add_option("--out", c.out, "output directory (overrides output_dir)");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--snapshot-stride", c.snapshot_stride, "record every k-th accepted step")->check(CLI::PositiveNumber);
}

// Precedence: config file < NLAS_* environment < command-line flags.
nlas::RunConfig load_config(const Common& c) {
  nlohmann::json j = nlohmann::json::object();
  if (!c.config_path.empty()) {
    std::ifstream is(c.config_path, std::ios::binary);
    if (!is) throw nlas::ConfigError("", "cannot read " + c.config_path);
    std::stringstream ss;
    ss << is.rdbuf();
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw nlas::ConfigError("", c.config_path + ": " + e.what());
    }
  }
  if (!c.scenario.empty()) j["scenario"] = c.scenario;
  nlas::apply_env_overrides(j);
  if (!c.out.empty()) j["output_dir"] = c.out;
  if (c.threads) j["threads"] = *c.threads;
  if (c.snapshot_stride) j["snapshot_stride"] = *c.snapshot_stride;
  return nlas::config_from_json(j);
}

void print_outcome(const nlas::ScenarioOutcome& out) {
  for (const nlas::NamedRun& r : out.runs) {
    const nlas::MarkerField& last = r.traj.snapshots.back();
    std::printf("%-18s %-14s t=%.6g steps=%zu x1=%.6g x2=%.6g\n", r.tag().c_str(),
                std::string(nlas::termination_name(r.traj.termination)).c_str(), last.t, r.traj.accepted_steps,
                last.x1(), last.x2());
  }
  for (const nlas::Report& r : out.reports) {
    const std::size_t f = r.failures();
    std::printf("%-32s %s", r.name.c_str(), r.passed() ? "pass" : "FAIL");
    if (f) std::printf(" (%zu failed checks)", f);
    if (r.degenerate) std::printf(" (degenerate)");
    std::printf("\n");
  }
}

int do_run(const Common& c, bool compare_only) {
  const nlas::RunConfig cfg = load_config(c);
  if (compare_only && cfg.scenario != nlas::Scenario::LocalComparison &&
      cfg.scenario != nlas::Scenario::HyperbolicApprox) {
    std::cerr << "compare: scenario must be local_comparison or hyperbolic_approx\n";
    return nlas::exit_code::usage;
  }
  const nlas::ScenarioOutcome out = nlas::run_scenario(cfg);
  nlas::write_artifacts(cfg, out);
  print_outcome(out);
  if (compare_only)
    for (const nlas::Report& r : out.reports)
      if (r.name == "growth_discrimination" || r.name == "hyperbolic_approx")
        for (const std::string& n : r.notes) std::printf("  %s\n", n.c_str());
  std::printf("exit %d\n", out.exit_code);
  return out.exit_code;
}

int do_verify(const std::string& dir, int threads) {
  const nlas::Verification v = nlas::verify_artifacts(dir, threads);
  std::printf("%-32s %s\n", v.artifacts.name.c_str(), v.artifacts.passed() ? "pass" : "FAIL");
  for (const nlas::Check& ch : v.artifacts.checks)
    if (!ch.pass) std::printf("  %s at t=%.17g\n", ch.name.c_str(), ch.t);
  print_outcome(v.outcome);
  std::printf("exit %d\n", v.exit_code);
  return v.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal active scalar experiments"};
  app.require_subcommand(1);

  Common run_opts, cmp_opts;
  CLI::App* run = app.add_subcommand("run", "run a scenario and write its artifacts");
  add_common(run, run_opts);
  CLI::App* cmp = app.add_subcommand("compare", "run a comparison scenario");
  add_common(cmp, cmp_opts);

  std::string verify_dir;
  int verify_threads = 1;
  CLI::App* ver = app.add_subcommand("verify", "re-read an output directory and re-run every checker");
  ver->add_option("--out", verify_dir, "output directory of a previous run")->required();
  ver->add_option("--threads", verify_threads, "worker threads")->check(CLI::PositiveNumber);

  std::string defaults_scenario = "euler_growth";
  CLI::App* def = app.add_subcommand("print-defaults", "print the default config of a scenario");
  def->add_option("--scenario", defaults_scenario, "scenario name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : nlas::exit_code::usage;
  }

  try {
    if (*run) return do_run(run_opts, false);
    if (*cmp) return do_run(cmp_opts, true);
    if (*ver) return do_verify(verify_dir, verify_threads);
    if (*def) {
      std::cout << nlas::to_json(nlas::scenario_defaults(nlas::parse_scenario(defaults_scenario))).dump(2) << '\n';
      return 0;
    }
  } catch (const nlas::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return nlas::exit_code::usage;
  } catch (const nlas::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return nlas::exit_code::check_failed;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "summary error: " << e.what() << '\n';
    return nlas::exit_code::check_failed;
  } catch (const nlas::ContractViolation& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return nlas::exit_code::numerical;
  } catch (const nlas::QuadratureError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return nlas::exit_code::numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nlas::exit_code::usage;
  }
  return nlas::exit_code::usage;
}
