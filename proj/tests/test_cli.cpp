#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "nlas/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("nlas_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(NLAS_EXE) + " " + args + " > " + (scratch() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& json) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << json;
  return p;
}

std::string small_euler(const fs::path& out) {
  return "run --config " + write_config("euler.json", R"({"scenario": "euler_growth", "n_markers": 256})").string() +
         " --out " + out.string();
}

}  // namespace

TEST(Cli, EulerRunVerifyAndTamper) {
  const fs::path out = scratch() / "euler";
  ASSERT_EQ(cli(small_euler(out)), 0) << slurp(scratch() / "last.log");
  for (const char* f : {"summary.json", "report.txt", "series.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_TRUE(fs::is_directory(out / "snapshots"));

  std::ifstream is(out / "series.csv");
  auto series = nlas::read_series(is);
  ASSERT_GT(series.size(), 10u);
  for (std::size_t k = 1; k < series.size(); ++k) EXPECT_GT(series[k].ratio, series[k - 1].ratio);

  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["exit_code"], 0);
  EXPECT_EQ(summary["runs"][0]["termination"], "StepUnderflow");
  EXPECT_FALSE(summary["config"].contains("threads"));

  EXPECT_EQ(cli("verify --out " + out.string()), 0) << slurp(scratch() / "last.log");
  series[series.size() / 2].ratio *= 0.5;
  std::ofstream(out / "series.csv", std::ios::binary) << nlas::series_text(series);
  EXPECT_EQ(cli("verify --out " + out.string()), 1);
  EXPECT_NE(slurp(scratch() / "last.log").find("series_matches_snapshots"), std::string::npos);
}

TEST(Cli, ThreadCountDoesNotChangeArtifacts) {
  const fs::path a = scratch() / "t1", b = scratch() / "t2";
  ASSERT_EQ(cli(small_euler(a) + " --threads 1"), 0);
  ASSERT_EQ(cli(small_euler(b) + " --threads 2"), 0);
  EXPECT_EQ(slurp(a / "series.csv"), slurp(b / "series.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
}

TEST(Cli, PatchRunBlowsUp) {
  const fs::path out = scratch() / "patch";
  const fs::path cfg = write_config("patch.json", R"({"scenario": "patch_blowup", "n_markers": 256})");
  ASSERT_EQ(cli("run --config " + cfg.string() + " --out " + out.string()), 0) << slurp(scratch() / "last.log");
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["runs"][0]["termination"], "BlowupX1");
}

TEST(Cli, UsageErrors) {
  const fs::path bad = write_config("bad.json", R"({"scenario": "euler_growth", "M": 4})");
  EXPECT_EQ(cli("run --config " + bad.string() + " --out " + (scratch() / "bad").string()), 2);
  EXPECT_NE(slurp(scratch() / "last.log").find("M > 8"), std::string::npos);
  const fs::path typo = write_config("typo.json", R"({"scenario": "euler_growth", "alpha_": 0.5})");
  EXPECT_EQ(cli("run --config " + typo.string()), 2);
  EXPECT_NE(slurp(scratch() / "last.log").find("alpha_"), std::string::npos);
  EXPECT_EQ(cli("compare --scenario euler_growth --out " + (scratch() / "cmp").string()), 2);
  EXPECT_EQ(cli("run --config " + (scratch() / "missing.json").string()), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("verify --out " + (scratch() / "nowhere").string()), 2);
}

TEST(Cli, PrintDefaultsParsesBack) {
  ASSERT_EQ(cli("print-defaults --scenario patch_blowup"), 0);
  const auto j = nlohmann::json::parse(slurp(scratch() / "last.log"));
  EXPECT_EQ(j["scenario"], "patch_blowup");
  EXPECT_EQ(j["x1_0"], 0.25);
}

TEST(Cli, SampleConfigsParse) {
  for (const auto& e : fs::directory_iterator(NLAS_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    const auto j = nlohmann::json::parse(slurp(e.path()));
    EXPECT_TRUE(j.contains("scenario")) << e.path();
  }
}
