#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nlas/error.hpp"
#include "nlas/evolve.hpp"
#include "nlas/kernels.hpp"
#include "nlas/profiles.hpp"

namespace nlas {

enum class Scenario { EulerGrowth, PatchBlowup, LocalComparison, HyperbolicApprox, Custom };

inline std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::EulerGrowth: return "euler_growth";
    case Scenario::PatchBlowup: return "patch_blowup";
    case Scenario::LocalComparison: return "local_comparison";
    case Scenario::HyperbolicApprox: return "hyperbolic_approx";
    case Scenario::Custom: return "custom";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  for (Scenario k : {Scenario::EulerGrowth, Scenario::PatchBlowup, Scenario::LocalComparison,
                     Scenario::HyperbolicApprox, Scenario::Custom})
    if (scenario_name(k) == s) return k;
  throw ConfigError("scenario", "unknown scenario '" + std::string(s) + "'");
}

struct RunConfig {
  Scenario scenario = Scenario::EulerGrowth;
  VelocityLaw law;        // primary law; for custom runs taken from the config
  double amplitude = 1.0;  // multiplies the profile values (custom only)
  ProfileSpec profile;
  StepControl step;
  std::string output_dir = "out";
  bool emit_series = true;
  bool emit_snapshots = true;
  bool emit_report = true;
};

/// Flat config keys, in the order print-defaults lists them.
inline constexpr std::array<std::string_view, 24> kConfigKeys = {
    "scenario", "law",        "alpha",        "a",          "amplitude",       "x1_0",     "x2_0",
    "M",        "support_bound", "ramp",      "n_markers",  "grading",         "dt_init",  "cfl",
    "dt_min",   "eps_blowup", "t_end",        "snapshot_stride", "threads",    "coalesce", "coalesce_gap",
    "coalesce_floor", "output_dir", "emit"};

namespace detail {

using json = nlohmann::json;

inline const json& require_type(const json& v, std::string_view key, json::value_t t, const char* what) {
  const bool ok = t == json::value_t::number_float ? v.is_number() : v.type() == t;
  if (!ok) throw ConfigError(std::string(key), std::string("expected ") + what);
  return v;
}

inline double get_number(const json& v, std::string_view key) {
  return require_type(v, key, json::value_t::number_float, "a number").get<double>();
}

inline long long get_integer(const json& v, std::string_view key) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  throw ConfigError(std::string(key), "expected an integer");
}

inline std::string get_string(const json& v, std::string_view key) {
  return require_type(v, key, json::value_t::string, "a string").get<std::string>();
}

inline bool get_bool(const json& v, std::string_view key) {
  return require_type(v, key, json::value_t::boolean, "true or false").get<bool>();
}

}  // namespace detail

/// Defaults of a scenario; patch geometry follows alpha (and x1_0 when given).
inline RunConfig scenario_defaults(Scenario s, double alpha = 0.5) {
  RunConfig c;
  c.scenario = s;
  switch (s) {
    case Scenario::EulerGrowth:
    case Scenario::LocalComparison:
    case Scenario::HyperbolicApprox:
    case Scenario::Custom:
      c.profile = default_euler_spec();
      c.law = s == Scenario::HyperbolicApprox ? VelocityLaw::odd_euler() : VelocityLaw::euler_log();
      // The strain rate grows with x2/x1, so the run ends once dt would fall
      // below dt_min; x1 is allowed to shrink to far below 1e-6.
      c.step.dt_min = 5e-3;
      c.step.eps_blowup = 1e-300;
      break;
    case Scenario::PatchBlowup:
      c.profile = default_patch_spec(alpha);
      c.law = VelocityLaw::alpha_patch(alpha);
      c.step.coalesce = true;
      c.step.coalesce_gap = 1e-4;
      break;
  }
  return c;
}

inline void validate(const RunConfig& c) {
  switch (c.scenario) {
    case Scenario::EulerGrowth:
    case Scenario::LocalComparison:
    case Scenario::HyperbolicApprox: validate_euler(c.profile); break;
    case Scenario::PatchBlowup: validate_patch(c.profile); break;
    case Scenario::Custom:
      if (c.law.kind == LawKind::AlphaPatch) validate_patch(c.profile);
      else validate_euler(c.profile);
      break;
  }
  if (!(std::abs(c.amplitude) <= 1.0 && c.amplitude != 0.0)) throw ConfigError("amplitude", "must satisfy 0 < |amplitude| <= 1");
  if (c.scenario != Scenario::Custom && c.amplitude != 1.0) throw ConfigError("amplitude", "only custom runs may rescale the profile");
  validate(c.step);
  if (c.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

/// Build a RunConfig from a flat JSON object. "scenario" is required, custom
/// runs also require "law"; unknown keys are errors.
inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::json;
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), it.key()) == kConfigKeys.end())
      throw ConfigError(it.key(), "unknown key");
    if (it->is_structured() || it->is_null()) throw ConfigError(it.key(), "values must be strings, numbers or booleans");
  }
  if (!j.contains("scenario")) throw ConfigError("scenario", "missing required key");
  const Scenario sc = parse_scenario(detail::get_string(j["scenario"], "scenario"));
  const double alpha = j.contains("alpha") ? detail::get_number(j["alpha"], "alpha") : 0.5;
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha", "requires 0 < alpha < 1");
  RunConfig c = scenario_defaults(sc, alpha);

  if (sc == Scenario::PatchBlowup && j.contains("x1_0")) {
    // Re-derive the patch geometry from the given x1_0 unless pinned.
    const double g = 1.0 - alpha;
    c.profile.x1_0 = detail::get_number(j["x1_0"], "x1_0");
    if (!(c.profile.x1_0 > 0.0)) throw ConfigError("x1_0", "must be positive");
    const double M = j.contains("M") ? detail::get_number(j["M"], "M") : c.profile.M;
    c.profile.x2_0 = patch::far_position(g, c.profile.x1_0, M);
    c.profile.support_bound = 2.0 * c.profile.x2_0;
  }
  if (sc == Scenario::Custom && !j.contains("law")) throw ConfigError("law", "missing required key for custom runs");

  double a = j.contains("a") ? detail::get_number(j["a"], "a") : 0.0;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = *it;
    if (k == "scenario" || k == "alpha" || k == "a") continue;
    if (k == "law") {
      const LawKind kind = parse_law_kind(detail::get_string(v, k));
      if (sc != Scenario::Custom) throw ConfigError(k, "is fixed by the scenario; use scenario=custom");
      switch (kind) {
        case LawKind::AlphaPatch: c.law = VelocityLaw::alpha_patch(alpha); break;
        case LawKind::BoundaryLayer: c.law = VelocityLaw::boundary_layer(a); break;
        default: c.law = VelocityLaw{kind};
      }
    } else if (k == "amplitude") c.amplitude = detail::get_number(v, k);
    else if (k == "x1_0") c.profile.x1_0 = detail::get_number(v, k);
    else if (k == "x2_0") c.profile.x2_0 = detail::get_number(v, k);
    else if (k == "M") c.profile.M = detail::get_number(v, k);
    else if (k == "support_bound") c.profile.support_bound = detail::get_number(v, k);
    else if (k == "ramp") c.profile.ramp_kind = parse_ramp_kind(detail::get_string(v, k));
    else if (k == "n_markers") {
      const long long n = detail::get_integer(v, k);
      if (n < 64) throw ConfigError(k, "must be at least 64");
      c.profile.n_markers = static_cast<std::size_t>(n);
    } else if (k == "grading") c.profile.grading = detail::get_number(v, k);
    else if (k == "dt_init") c.step.dt_init = detail::get_number(v, k);
    else if (k == "cfl") c.step.cfl = detail::get_number(v, k);
    else if (k == "dt_min") c.step.dt_min = detail::get_number(v, k);
    else if (k == "eps_blowup") c.step.eps_blowup = detail::get_number(v, k);
    else if (k == "t_end") c.step.t_end = detail::get_number(v, k);
    else if (k == "snapshot_stride") c.step.snapshot_stride = static_cast<int>(detail::get_integer(v, k));
    else if (k == "threads") c.step.threads = static_cast<int>(detail::get_integer(v, k));
    else if (k == "coalesce") c.step.coalesce = detail::get_bool(v, k);
    else if (k == "coalesce_gap") c.step.coalesce_gap = detail::get_number(v, k);
    else if (k == "coalesce_floor") c.step.coalesce_floor = detail::get_number(v, k);
    else if (k == "output_dir") c.output_dir = detail::get_string(v, k);
    else if (k == "emit") {
      c.emit_series = c.emit_snapshots = c.emit_report = false;
      const std::string s = detail::get_string(v, k);
      std::size_t start = 0;
      while (start <= s.size()) {
        const std::size_t p = std::min(s.find(',', start), s.size());
        const std::string item = s.substr(start, p - start);
        if (item == "series") c.emit_series = true;
        else if (item == "snapshots") c.emit_snapshots = true;
        else if (item == "report") c.emit_report = true;
        else if (!item.empty()) throw ConfigError(k, "unknown artifact '" + item + "'");
        start = p + 1;
      }
    }
  }
  if (c.law.kind == LawKind::BoundaryLayer && !(c.law.a > 0.0)) throw ConfigError("a", "BoundaryLayer requires a > 0");
  validate(c);
  return c;
}

/// Parse a config document (JSON text).
inline RunConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

/// Overlay NLAS_<KEY> environment variables (upper-cased key names) onto a
/// config object. Values are read as JSON scalars when they parse, else as
/// strings.
template <class Getenv>
void apply_env_overrides(nlohmann::json& j, Getenv&& getenv_fn) {
  for (std::string_view key : kConfigKeys) {
    std::string var = "NLAS_";
    for (char ch : key) var += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    const char* raw = getenv_fn(var.c_str());
    if (!raw) continue;
    nlohmann::json v = nlohmann::json::parse(raw, nullptr, false);
    if (v.is_discarded() || v.is_structured()) v = std::string(raw);
    j[std::string(key)] = v;
  }
}

inline void apply_env_overrides(nlohmann::json& j) {
  apply_env_overrides(j, [](const char* n) { return std::getenv(n); });
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario_name(c.scenario);
  if (c.scenario == Scenario::Custom) j["law"] = law_name(c.law.kind);
  j["alpha"] = c.law.alpha;
  if (c.law.kind == LawKind::BoundaryLayer) j["a"] = c.law.a;
  if (c.scenario == Scenario::Custom) j["amplitude"] = c.amplitude;
  j["x1_0"] = c.profile.x1_0;
  j["x2_0"] = c.profile.x2_0;
  j["M"] = c.profile.M;
  j["support_bound"] = c.profile.support_bound;
  j["ramp"] = ramp_name(c.profile.ramp_kind);
  j["n_markers"] = c.profile.n_markers;
  j["grading"] = c.profile.grading;
  j["dt_init"] = c.step.dt_init;
  j["cfl"] = c.step.cfl;
  j["dt_min"] = c.step.dt_min;
  j["eps_blowup"] = c.step.eps_blowup;
  j["t_end"] = c.step.t_end;
  j["snapshot_stride"] = c.step.snapshot_stride;
  j["threads"] = c.step.threads;
  j["coalesce"] = c.step.coalesce;
  j["coalesce_gap"] = c.step.coalesce_gap;
  j["coalesce_floor"] = c.step.coalesce_floor;
  j["output_dir"] = c.output_dir;
  std::string emit;
  for (auto [on, name] : {std::pair{c.emit_series, "series"}, {c.emit_snapshots, "snapshots"}, {c.emit_report, "report"}})
    if (on) emit += (emit.empty() ? "" : ",") + std::string(name);
  j["emit"] = emit;
  return j;
}

}  // namespace nlas
