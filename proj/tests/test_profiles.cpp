#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "fields.hpp"
#include "nlas/error.hpp"
#include "nlas/profiles.hpp"

using namespace nlas;

// Frozen high-precision values (mpmath, 50 digits) at gamma = 1/2.
constexpr double kVelocityConstant = 0.73205080756887729353;  // sqrt(3) - 1
constexpr double kBlowupTimeQuarter = 1.3660254037844386468;
constexpr double kFarSpeedConstant = 5.6568542494923801952;
constexpr double kSeparationTarget = 0.36602540378443864676;

TEST(Ramp, EndpointsAndMidpoint) {
  for (RampKind k : {RampKind::SmoothstepQuintic, RampKind::Cosine}) {
    EXPECT_EQ(ramp(0.0, k), 0.0);
    EXPECT_EQ(ramp(1.0, k), 1.0);
    EXPECT_NEAR(ramp(0.5, k), 0.5, 1e-15);
  }
  EXPECT_EQ(ramp(0.5), 0.5);
}

TEST(Ramp, MonotoneAndFlatAtEnds) {
  for (RampKind k : {RampKind::SmoothstepQuintic, RampKind::Cosine}) {
    double prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double v = ramp(i / 1000.0, k);
      EXPECT_GE(v, prev);
      prev = v;
    }
    EXPECT_LT(ramp(1e-4, k), 1e-7);
    EXPECT_GT(ramp(1.0 - 1e-4, k), 1.0 - 1e-7);
  }
}

TEST(RampKind, NamesRoundTrip) {
  for (RampKind k : {RampKind::SmoothstepQuintic, RampKind::Cosine}) EXPECT_EQ(parse_ramp_kind(ramp_name(k)), k);
  EXPECT_THROW(parse_ramp_kind("linear"), ConfigError);
}

TEST(EulerProfile, Structure) {
  const ProfileSpec s = test::small_euler_spec(512);
  const MarkerField f = build_euler_profile(s);
  ASSERT_TRUE(is_odd(f));
  EXPECT_EQ(f.x1(), s.x1_0);
  EXPECT_EQ(f.x2(), s.x2_0);
  EXPECT_EQ(f.positions.back(), s.support_bound);
  EXPECT_EQ(f.size(), 2 * s.n_markers + 1);
  EXPECT_TRUE(strictly_increasing(f.positions));
  const std::size_t c = f.center();
  for (std::size_t i = c; i + 1 < f.size(); ++i) {
    const double x = f.positions[i + 1];
    const double v0 = f.values[i], v1 = f.values[i + 1];
    if (x <= s.x1_0) EXPECT_GE(v1, v0);
    else if (x <= s.x2_0) EXPECT_EQ(v1, 1.0);
    else EXPECT_LE(v1, v0);
    EXPECT_GE(v1, 0.0);
    EXPECT_LE(v1, 1.0);
  }
  EXPECT_EQ(sup_abs(f), 1.0);
}

TEST(EulerProfile, Reproducible) {
  const ProfileSpec s = test::small_euler_spec(300);
  EXPECT_EQ(build_euler_profile(s), build_euler_profile(s));
}

TEST(EulerProfile, Defaults) {
  const ProfileSpec s = default_euler_spec();
  EXPECT_EQ(s.x1_0, 1e-3);
  EXPECT_EQ(s.x2_0, 0.5);
  EXPECT_EQ(s.M, 16.0);
  EXPECT_EQ(s.support_bound, 1.0);
  EXPECT_EQ(s.n_markers, 4096u);
}

namespace {

std::string euler_error_field(ProfileSpec s) {
  try {
    build_euler_profile(s);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(EulerProfile, ConstraintErrorsNameTheField) {
  ProfileSpec s = test::small_euler_spec();
  s.M = 4.0;
  EXPECT_EQ(euler_error_field(s), "M");
  s = test::small_euler_spec();
  s.M = 1000.0;  // M x1_0 > x2_0
  EXPECT_EQ(euler_error_field(s), "M");
  s = test::small_euler_spec();
  s.support_bound = 1.5;
  EXPECT_EQ(euler_error_field(s), "support_bound");
  s = test::small_euler_spec();
  s.x2_0 = 1e-4;
  EXPECT_EQ(euler_error_field(s), "x2_0");
  s = test::small_euler_spec();
  s.x1_0 = 0.0;
  EXPECT_EQ(euler_error_field(s), "x1_0");
  s = test::small_euler_spec();
  s.n_markers = 10;
  EXPECT_EQ(euler_error_field(s), "n_markers");
}

TEST(PatchConstants, MatchOracle) {
  EXPECT_NEAR(patch::velocity_constant(0.5), kVelocityConstant, 1e-15);
  EXPECT_NEAR(patch::blowup_time_bound(0.5, 0.25), kBlowupTimeQuarter, 1e-15);
  EXPECT_NEAR(patch::far_speed_constant(0.5), kFarSpeedConstant, 1e-14);
}

TEST(PatchProfile, DefaultGeometry) {
  const ProfileSpec s = default_patch_spec(0.5);
  EXPECT_EQ(s.x1_0, 0.25);
  // Smallest admissible M (to 1e-6) for the separation argument.
  EXPECT_LE(patch::separation_defect(0.5, s.M), kSeparationTarget);
  EXPECT_GT(patch::separation_defect(0.5, s.M - 1e-4), kSeparationTarget);
  EXPECT_NEAR(s.M, 7.497596, 1e-6);
  // x2_0 = M x1_0 2^k, the first one that stays separated up to T0.
  const double k = std::log2(s.x2_0 / (s.M * s.x1_0));
  EXPECT_NEAR(k, std::round(k), 1e-12);
  const double T0 = patch::blowup_time_bound(0.5, s.x1_0);
  const double Cp = patch::far_speed_constant(0.5);
  EXPECT_LT(s.M * s.x1_0, s.x2_0 * (1.0 - Cp * std::pow(s.x2_0, -0.5) * T0));
  const double half = 0.5 * s.x2_0;
  EXPECT_GE(s.M * s.x1_0, half * (1.0 - Cp * std::pow(half, -0.5) * T0));
  EXPECT_EQ(s.support_bound, 2.0 * s.x2_0);
}

TEST(PatchProfile, BuildsAndValidates) {
  const MarkerField f = build_patch_profile(test::small_patch_spec(256));
  EXPECT_TRUE(is_odd(f));
  EXPECT_EQ(f.x1(), 0.25);
  ProfileSpec bad = test::small_patch_spec();
  bad.support_bound = 3.0 * bad.x2_0;
  EXPECT_THROW(build_patch_profile(bad), ConfigError);
  bad = test::small_patch_spec();
  bad.M = 1000.0;
  EXPECT_THROW(build_patch_profile(bad), ConfigError);
}

TEST(Scaled, FlipsSignKeepsOddness) {
  const MarkerField f = build_euler_profile(test::small_euler_spec());
  const MarkerField g = scaled(f, -1.0);
  EXPECT_TRUE(is_odd(g));
  EXPECT_EQ(g.positions, f.positions);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(g.values[i], -f.values[i]);
}
