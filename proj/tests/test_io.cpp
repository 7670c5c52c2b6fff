#include <bit>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fields.hpp"
#include "nlas/diagnostics.hpp"
#include "nlas/io.hpp"

using namespace nlas;

TEST(FormatDouble, RoundTripsBitExact) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20000; ++i) {
    const double v = std::bit_cast<double>(rng());
    if (!std::isfinite(v)) continue;
    double back = 0.0;
    ASSERT_TRUE(parse_double(format_double(v), back)) << format_double(v);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back), std::bit_cast<std::uint64_t>(v));
  }
  for (double v : {0.0, -0.0, 1e-320, std::numeric_limits<double>::max(), 0.1}) {
    double back = 1.0;
    ASSERT_TRUE(parse_double(format_double(v), back));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back), std::bit_cast<std::uint64_t>(v));
  }
}

TEST(FormatDouble, LocaleIndependentShape) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  double v;
  EXPECT_FALSE(parse_double("1,5", v));
  EXPECT_FALSE(parse_double("", v));
  EXPECT_FALSE(parse_double("2x", v));
}

TEST(Snapshot, RoundTripIsExact) {
  MarkerField f = build_euler_profile(test::small_euler_spec(200));
  f.t = 0.123456789012345678;
  for (std::size_t i = 0; i < f.size(); ++i) f.positions[i] *= 1.0 + 1e-13 * static_cast<double>(i % 7);
  f = mirror_half(f.half_positions(), f.half_values(), f.t, f.idx_x1 - f.center(), f.idx_x2 - f.center());
  const VelocityLaw law = VelocityLaw::boundary_layer(0.037);
  std::stringstream ss;
  write_snapshot(ss, f, law);
  VelocityLaw back_law;
  const MarkerField g = read_snapshot(ss, &back_law);
  EXPECT_EQ(g, f);
  EXPECT_EQ(back_law, law);
}

TEST(Snapshot, MalformedInputsReportLine) {
  std::stringstream a("nlas-snapshot 1\nt 0\nlaw euler_log\nalpha 0.5\na 0\nidx_x1 1\nidx_x2 2\nmarkers 2\n0 0\n1 oops\n");
  try {
    read_snapshot(a);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":10:"), std::string::npos) << e.what();
  }
  std::stringstream b("nlas-snapshot 1\nt 0\nlaw vortex\n");
  EXPECT_THROW(read_snapshot(b), FormatError);
  std::stringstream c("something else\n");
  EXPECT_THROW(read_snapshot(c), FormatError);
  std::stringstream d("nlas-snapshot 1\nt 0\nlaw euler_log\nalpha 0.5\na 0\nidx_x1 1\nidx_x2 2\nmarkers 3\n0 0\n");
  EXPECT_THROW(read_snapshot(d), FormatError);
}

TEST(Series, RoundTripAndHeader) {
  StepControl ctl;
  ctl.t_end = 0.3;
  const Trajectory traj = run(build_euler_profile(test::small_euler_spec()), VelocityLaw::euler_log(), ctl);
  const auto series = records(traj, VelocityLaw::euler_log());
  const std::string text = series_text(series);
  EXPECT_EQ(text.substr(0, text.find('\n')), kSeriesHeader);
  EXPECT_EQ(text.back(), '\n');
  std::stringstream ss(text);
  EXPECT_EQ(read_series(ss), series);
}

TEST(Series, RejectsBadRows) {
  std::stringstream a("t,x1\n");
  EXPECT_THROW(read_series(a), FormatError);
  std::stringstream b(std::string(kSeriesHeader) + "\n1,2,3\n");
  EXPECT_THROW(read_series(b), FormatError);
  std::stringstream c(std::string(kSeriesHeader) + "\n1,2,3,4,5,6,7,8,nan?\n");
  EXPECT_THROW(read_series(c), FormatError);
}

TEST(ReportText, OneLinePerCheck) {
  Report r;
  r.name = "demo";
  r.at_most("upper", 0.5, 1.0, 2.0);
  r.at_least("lower", 1.0, 1.0, 2.0);
  r.at_most("soft", 1.5, 3.0, 2.0);
  r.checks.back().advisory = true;
  std::ostringstream os;
  write_report(os, r);
  EXPECT_EQ(os.str(),
            "demo.upper 0.5 1 2 1 pass\n"
            "demo.lower 1 1 2 -1 fail\n"
            "demo.soft 1.5 3 2 -1 advisory-fail\n");
}
