#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "nlas/error.hpp"
#include "nlas/field.hpp"

namespace nlas {

enum class RampKind { SmoothstepQuintic, Cosine };

inline std::string_view ramp_name(RampKind k) {
  return k == RampKind::Cosine ? "cosine" : "smoothstep_quintic";
}

inline RampKind parse_ramp_kind(std::string_view s) {
  if (s == "smoothstep_quintic") return RampKind::SmoothstepQuintic;
  if (s == "cosine") return RampKind::Cosine;
  throw ConfigError("ramp", "unknown ramp kind '" + std::string(s) + "'");
}

/// Monotone ramp from 0 to 1 with vanishing slope at both ends.
inline double ramp(double t, RampKind kind = RampKind::SmoothstepQuintic) {
  assert(t >= 0.0 && t <= 1.0);
  t = std::clamp(t, 0.0, 1.0);
  if (kind == RampKind::Cosine) return 0.5 * (1.0 - std::cos(std::numbers::pi * t));
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// Odd plateau data: increasing on [0, x1_0], identically 1 on [x1_0, x2_0],
/// decreasing to 0 on [x2_0, support_bound].
struct ProfileSpec {
  double x1_0 = 1e-3;
  double x2_0 = 0.5;
  double M = 16.0;
  double support_bound = 1.0;
  RampKind ramp_kind = RampKind::SmoothstepQuintic;
  std::size_t n_markers = 4096;  // markers on (0, support_bound]
  double grading = 2.0;

  bool operator==(const ProfileSpec&) const = default;
};

namespace detail {

inline void check_common(const ProfileSpec& s) {
  if (!(s.x1_0 > 0.0)) throw ConfigError("x1_0", "must be positive");
  if (!(s.x2_0 > s.x1_0)) throw ConfigError("x2_0", "must exceed x1_0");
  if (!(s.support_bound > s.x2_0)) throw ConfigError("support_bound", "must exceed x2_0");
  if (s.n_markers < 64) throw ConfigError("n_markers", "must be at least 64");
  if (!(s.grading >= 1.0)) throw ConfigError("grading", "must be >= 1");
}

}  // namespace detail

inline void validate_euler(const ProfileSpec& s) {
  detail::check_common(s);
  if (!(s.M > 8.0)) throw ConfigError("M", "double-exponential growth requires M > 8");
  if (!(s.M * s.x1_0 <= s.x2_0)) throw ConfigError("M", "requires M * x1_0 <= x2_0");
  if (!(s.x2_0 < 1.0)) throw ConfigError("x2_0", "must be < 1");
  if (!(s.support_bound <= 1.0)) throw ConfigError("support_bound", "Euler data must be supported in [-1, 1]");
}

inline void validate_patch(const ProfileSpec& s) {
  detail::check_common(s);
  if (!(s.M > 1.0)) throw ConfigError("M", "must exceed 1");
  if (!(s.M * s.x1_0 < s.x2_0)) throw ConfigError("M", "requires M * x1_0 < x2_0");
  if (!(s.support_bound <= 2.0 * s.x2_0))
    throw ConfigError("support_bound", "patch data must be supported in [-2 x2_0, 2 x2_0]");
}

/// Half-line marker layout: 40% of the markers on the ramp (graded toward 0
/// with exponent `grading`), 25% log-uniform on the plateau, the rest uniform
/// on the tail. x1_0, x2_0 and support_bound are markers exactly.
inline MarkerField build_plateau(const ProfileSpec& s) {
  const std::size_t n = s.n_markers;
  const std::size_t n_ramp = (n * 2) / 5;
  const std::size_t n_plateau = n / 4;
  const std::size_t n_tail = n - n_ramp - n_plateau;

  std::vector<double> pos{0.0}, val{0.0};
  pos.reserve(n + 1);
  val.reserve(n + 1);
  for (std::size_t i = 1; i <= n_ramp; ++i) {
    const double xi = static_cast<double>(i) / static_cast<double>(n_ramp);
    const double x = i == n_ramp ? s.x1_0 : s.x1_0 * std::pow(xi, s.grading);
    pos.push_back(x);
    val.push_back(i == n_ramp ? 1.0 : ramp(x / s.x1_0, s.ramp_kind));
  }
  const double log_span = std::log(s.x2_0 / s.x1_0);
  for (std::size_t i = 1; i <= n_plateau; ++i) {
    const double xi = static_cast<double>(i) / static_cast<double>(n_plateau);
    pos.push_back(i == n_plateau ? s.x2_0 : s.x1_0 * std::exp(log_span * xi));
    val.push_back(1.0);
  }
  const double tail = s.support_bound - s.x2_0;
  for (std::size_t i = 1; i <= n_tail; ++i) {
    const double xi = static_cast<double>(i) / static_cast<double>(n_tail);
    pos.push_back(i == n_tail ? s.support_bound : s.x2_0 + tail * xi);
    val.push_back(i == n_tail ? 0.0 : ramp(1.0 - xi, s.ramp_kind));
  }
  if (!strictly_increasing(pos)) throw ConfigError("n_markers", "marker layout is degenerate for this spec");
  return mirror_half(pos, val, 0.0, n_ramp, n_ramp + n_plateau);
}

inline MarkerField build_euler_profile(const ProfileSpec& s) {
  validate_euler(s);
  return build_plateau(s);
}

inline MarkerField build_patch_profile(const ProfileSpec& s) {
  validate_patch(s);
  return build_plateau(s);
}

/// Multiply every value by `amplitude` (|amplitude| <= 1 keeps the bound).
inline MarkerField scaled(MarkerField f, double amplitude) {
  for (double& v : f.values) v = v * amplitude + 0.0;
  return f;
}

// ---------------------------------------------------------------------------
// Explicit constants of the alpha-patch blowup argument
// ---------------------------------------------------------------------------
namespace patch {

/// C with u(x1) <= -C x1^(1-gamma) while M x1 <= x2:
/// (1/(1-gamma)) * (3^(1-gamma) - 1) / 2.
inline double velocity_constant(double gamma) {
  const double p = 1.0 - gamma;
  return 0.5 * (std::pow(3.0, p) - 1.0) / p;
}

/// sup over 0 < r <= 1/M of r^-(1-gamma) |(1-r)^(1-gamma) - (1+r)^(1-gamma)|.
inline double separation_defect(double gamma, double M) {
  const double p = 1.0 - gamma;
  double worst = 0.0;
  const double r_max = 1.0 / M;
  for (int i = 0; i <= 400; ++i) {
    const double r = r_max * std::pow(1e-8, static_cast<double>(i) / 400.0);
    const double f = std::pow(1.0 - r, p) - std::pow(1.0 + r, p);
    worst = std::max(worst, std::abs(f) * std::pow(r, -p));
  }
  return worst;
}

/// Smallest M > 2 whose separation defect is at most half of 3^(1-gamma) - 1.
inline double separation_factor(double gamma) {
  const double target = 0.5 * (std::pow(3.0, 1.0 - gamma) - 1.0);
  double lo = 2.0, hi = 4.0;
  if (separation_defect(gamma, lo) <= target) return lo;
  while (separation_defect(gamma, hi) > target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (separation_defect(gamma, mid) > target ? lo : hi) = mid;
  }
  return std::ceil(hi * 1e6) / 1e6;
}

/// Latest time by which x1 reaches the origin: x1_0^gamma / (C gamma).
inline double blowup_time_bound(double gamma, double x1_0) {
  return std::pow(x1_0, gamma) / (velocity_constant(gamma) * gamma);
}

/// Bound |u(x2)| <= C' x2_0^(1-gamma) for support in [-2 x2_0, 2 x2_0].
inline double far_speed_constant(double gamma) {
  const double p = 1.0 - gamma;
  return 2.0 * std::pow(2.0, p) / p;
}

/// Smallest x2_0 = M x1_0 2^k with M x1_0 < x2_0 (1 - C' x2_0^-gamma T0).
inline double far_position(double gamma, double x1_0, double M) {
  const double T0 = blowup_time_bound(gamma, x1_0);
  const double Cp = far_speed_constant(gamma);
  double x2 = M * x1_0;
  for (int k = 0; k < 200; ++k) {
    x2 *= 2.0;
    if (M * x1_0 < x2 * (1.0 - Cp * std::pow(x2, -gamma) * T0)) return x2;
  }
  throw ConfigError("x2_0", "no admissible far position found");
}

}  // namespace patch

inline ProfileSpec default_euler_spec() { return ProfileSpec{}; }

inline ProfileSpec default_patch_spec(double alpha = 0.5) {
  const double gamma = 1.0 - alpha;
  ProfileSpec s;
  s.x1_0 = 0.25;
  s.M = patch::separation_factor(gamma);
  s.x2_0 = patch::far_position(gamma, s.x1_0, s.M);
  s.support_bound = 2.0 * s.x2_0;
  return s;
}

}  // namespace nlas
