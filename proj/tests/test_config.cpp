#include <map>
#include <string>

#include <gtest/gtest.h>

#include "nlas/config.hpp"

using namespace nlas;

namespace {

std::string error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST(ParseConfig, MinimalEulerDefaults) {
  const RunConfig c = parse_config(R"({"scenario": "euler_growth"})");
  EXPECT_EQ(c.scenario, Scenario::EulerGrowth);
  EXPECT_EQ(c.law.kind, LawKind::EulerLog);
  EXPECT_EQ(c.profile.x1_0, 1e-3);
  EXPECT_EQ(c.profile.x2_0, 0.5);
  EXPECT_EQ(c.profile.M, 16.0);
  EXPECT_EQ(c.profile.n_markers, 4096u);
  EXPECT_TRUE(c.emit_series && c.emit_snapshots && c.emit_report);
}

TEST(ParseConfig, SmallMIsRejectedWithReason) {
  try {
    parse_config(R"({"scenario": "euler_growth", "M": 4})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "M");
    EXPECT_NE(std::string(e.what()).find("M > 8"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, UnknownKeyNamed) {
  try {
    parse_config(R"({"scenario": "euler_growth", "alpha_": 0.5})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "alpha_");
    EXPECT_NE(std::string(e.what()).find("alpha_"), std::string::npos);
  }
}

TEST(ParseConfig, RequiredKeysAndTypes) {
  EXPECT_EQ(error_field(R"({"n_markers": 512})"), "scenario");
  EXPECT_EQ(error_field(R"({"scenario": "custom"})"), "law");
  EXPECT_EQ(error_field(R"({"scenario": "euler_growth", "law": "local"})"), "law");
  EXPECT_EQ(error_field(R"({"scenario": "bogus"})"), "scenario");
  EXPECT_EQ(error_field(R"({"scenario": "euler_growth", "n_markers": "many"})"), "n_markers");
  EXPECT_EQ(error_field(R"({"scenario": "euler_growth", "n_markers": 100.5})"), "n_markers");
  EXPECT_EQ(error_field(R"({"scenario": "euler_growth", "coalesce": 1})"), "coalesce");
  EXPECT_EQ(error_field(R"({"scenario": "euler_growth", "ramp": {"kind": "cosine"}})"), "ramp");
  EXPECT_EQ(error_field(R"({"scenario": "euler_growth", "emit": "series,plots"})"), "emit");
  EXPECT_EQ(error_field(R"({"scenario": "custom", "law": "boundary_layer"})"), "a");
  EXPECT_EQ(error_field(R"({"scenario": "euler_growth", "threads": 0})"), "threads");
  EXPECT_EQ(error_field(R"({"scenario": "euler_growth", "amplitude": 0.5})"), "amplitude");
  EXPECT_EQ(error_field(R"({"scenario": "patch_blowup", "alpha": 1.5})"), "alpha");
  EXPECT_EQ(error_field("[1, 2]"), "");
}

TEST(ParseConfig, SyntaxErrorsCarryPosition) {
  try {
    parse_config("{\n  \"scenario\": \"euler_growth\",\n  \"M\" 4\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, PatchGeometryFollowsX1) {
  const RunConfig d = parse_config(R"({"scenario": "patch_blowup"})");
  EXPECT_EQ(d.profile.x1_0, 0.25);
  EXPECT_TRUE(d.step.coalesce);
  EXPECT_EQ(d.law.kind, LawKind::AlphaPatch);
  const RunConfig c = parse_config(R"({"scenario": "patch_blowup", "x1_0": 0.125})");
  EXPECT_EQ(c.profile.x1_0, 0.125);
  EXPECT_LT(c.profile.x2_0, d.profile.x2_0);
  EXPECT_EQ(c.profile.support_bound, 2.0 * c.profile.x2_0);
  const RunConfig a = parse_config(R"({"scenario": "patch_blowup", "alpha": 0.3})");
  EXPECT_DOUBLE_EQ(a.law.alpha, 0.3);
  EXPECT_NE(a.profile.M, d.profile.M);
}

TEST(ParseConfig, CustomLaws) {
  const RunConfig c = parse_config(R"({"scenario": "custom", "law": "boundary_layer", "a": 0.1, "amplitude": -1})");
  EXPECT_EQ(c.law.kind, LawKind::BoundaryLayer);
  EXPECT_EQ(c.law.a, 0.1);
  EXPECT_EQ(c.amplitude, -1.0);
  const RunConfig p = parse_config(R"({"scenario": "custom", "law": "alpha_patch", "alpha": 0.4, "x1_0": 0.1,
                                       "x2_0": 10, "M": 4, "support_bound": 20})");
  EXPECT_EQ(p.law, VelocityLaw::alpha_patch(0.4));
}

TEST(ParseConfig, EmitSubset) {
  const RunConfig c = parse_config(R"({"scenario": "euler_growth", "emit": "report,series"})");
  EXPECT_TRUE(c.emit_series);
  EXPECT_FALSE(c.emit_snapshots);
  EXPECT_TRUE(c.emit_report);
}

TEST(EnvOverrides, UpperCasedKeysParsedAsScalars) {
  const std::map<std::string, std::string> env{
      {"NLAS_N_MARKERS", "512"}, {"NLAS_RAMP", "cosine"}, {"NLAS_COALESCE", "true"}, {"NLAS_OTHER", "1"}};
  nlohmann::json j = {{"scenario", "euler_growth"}, {"n_markers", 1024}};
  apply_env_overrides(j, [&](const char* n) -> const char* {
    auto it = env.find(n);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  const RunConfig c = config_from_json(j);
  EXPECT_EQ(c.profile.n_markers, 512u);
  EXPECT_EQ(c.profile.ramp_kind, RampKind::Cosine);
  EXPECT_TRUE(c.step.coalesce);
}

TEST(ToJson, RoundTripsEveryScenario) {
  for (const char* s : {"euler_growth", "patch_blowup", "local_comparison", "hyperbolic_approx"}) {
    const RunConfig c = parse_config(std::string(R"({"scenario": ")") + s + R"(", "n_markers": 300, "cfl": 0.25})");
    const RunConfig back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
    EXPECT_EQ(back.profile, c.profile) << s;
    EXPECT_EQ(back.step, c.step) << s;
    EXPECT_EQ(back.law, c.law) << s;
    EXPECT_EQ(back.output_dir, c.output_dir) << s;
  }
  const RunConfig c = parse_config(R"({"scenario": "custom", "law": "boundary_layer", "a": 0.2, "amplitude": 0.5})");
  const RunConfig back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(back.law, c.law);
  EXPECT_EQ(back.amplitude, 0.5);
}

TEST(ToJson, KeysAreKnown) {
  const auto j = to_json(scenario_defaults(Scenario::Custom));
  for (auto it = j.begin(); it != j.end(); ++it)
    EXPECT_NE(std::find(kConfigKeys.begin(), kConfigKeys.end(), it.key()), kConfigKeys.end()) << it.key();
}
