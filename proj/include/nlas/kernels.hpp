#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "nlas/error.hpp"
#include "nlas/field.hpp"
#include "nlas/parallel.hpp"

namespace nlas {

enum class LawKind { EulerLog, OddEuler, AlphaPatch, Local, HyperbolicApprox, BoundaryLayer };

/// Biot-Savart law selector. alpha is used by AlphaPatch only, a by
/// BoundaryLayer only. All normalization constants are 1.
struct VelocityLaw {
  LawKind kind = LawKind::EulerLog;
  double alpha = 0.5;
  double a = 0.0;

  static VelocityLaw euler_log() { return {LawKind::EulerLog}; }
  static VelocityLaw odd_euler() { return {LawKind::OddEuler}; }
  static VelocityLaw local() { return {LawKind::Local}; }
  static VelocityLaw hyperbolic_approx() { return {LawKind::HyperbolicApprox}; }
  static VelocityLaw alpha_patch(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha", "AlphaPatch requires 0 < alpha < 1");
    return {LawKind::AlphaPatch, alpha, 0.0};
  }
  static VelocityLaw boundary_layer(double a) {
    if (!(a > 0.0)) throw ConfigError("a", "BoundaryLayer requires a > 0");
    return {LawKind::BoundaryLayer, 0.5, a};
  }

  double gamma() const { return 1.0 - alpha; }

  /// Laws whose formula is only defined through the odd reduction.
  bool requires_odd() const {
    return kind == LawKind::OddEuler || kind == LawKind::AlphaPatch ||
           kind == LawKind::HyperbolicApprox;
  }
  bool is_euler() const { return kind == LawKind::EulerLog || kind == LawKind::OddEuler; }

  bool operator==(const VelocityLaw&) const = default;
};

inline std::string_view law_name(LawKind k) {
  switch (k) {
    case LawKind::EulerLog: return "euler_log";
    case LawKind::OddEuler: return "odd_euler";
    case LawKind::AlphaPatch: return "alpha_patch";
    case LawKind::Local: return "local";
    case LawKind::HyperbolicApprox: return "hyperbolic_approx";
    case LawKind::BoundaryLayer: return "boundary_layer";
  }
  return "unknown";
}

inline LawKind parse_law_kind(std::string_view s) {
  for (LawKind k : {LawKind::EulerLog, LawKind::OddEuler, LawKind::AlphaPatch, LawKind::Local,
                    LawKind::HyperbolicApprox, LawKind::BoundaryLayer})
    if (law_name(k) == s) return k;
  throw ConfigError("law", "unknown law '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Pointwise kernels
// ---------------------------------------------------------------------------

/// K(s) = (1/s) log|(s+1)/(s-1)|, evaluated as 2 atanh(min(s,1/s)) / s.
inline double kernel_K(double s) {
  if (!(s > 0.0)) throw std::domain_error("kernel_K: s must be positive");
  if (s == 1.0) throw std::domain_error("kernel_K: logarithmic singularity at s = 1");
  if (s < 1.0) return 2.0 * std::atanh(s) / s;
  return 2.0 * std::atanh(1.0 / s) / s;
}

/// k(x,y) = |y-x|^-gamma - |y+x|^-gamma, the odd alpha-patch kernel.
inline double kernel_alpha(double x, double y, double gamma) {
  if (!(x > 0.0 && y > 0.0)) throw std::domain_error("kernel_alpha: x, y must be positive");
  if (x == y) throw std::domain_error("kernel_alpha: singular at x = y");
  return std::pow(std::abs(y - x), -gamma) - std::pow(y + x, -gamma);
}

namespace detail {

inline double xlogabs(double t) { return t == 0.0 ? 0.0 : t * std::log(std::abs(t)); }

/// atanh(z)/z - 1 style series helpers, valid for u = z^2 <= 1/64.
inline double atanh_series(double u) {  // sum u^k / (2k+1)
  double sum = 0.0;
  for (int k = 11; k >= 0; --k) sum = sum * u + 1.0 / (2 * k + 1);
  return sum;
}
inline double atanh_tail_series(double u) {  // sum_{k>=1} u^{k-1} / (2k+1)
  double sum = 0.0;
  for (int k = 12; k >= 1; --k) sum = sum * u + 1.0 / (2 * k + 1);
  return sum;
}
inline double log1m_series(double u) {  // log(1 - u)
  double sum = 0.0;
  for (int k = 12; k >= 1; --k) sum = sum * u + 1.0 / k;
  return -u * sum;
}

/// (rho - log1p(rho)) / rho, accurate for small rho.
inline double log1p_defect(double rho) {
  if (rho < 1e-3) return rho * (0.5 - rho * (1.0 / 3.0 - rho * (0.25 - rho * 0.2)));
  return (rho - std::log1p(rho)) / rho;
}

}  // namespace detail

/// Exact value of the integral of w(y) log|y - x| over the segment, w affine.
inline double segment_log_velocity(double x, const Segment& seg) {
  validate(seg);
  const double t0 = seg.y0 - x;
  const double t1 = seg.y1 - x;
  const double s = seg.slope();
  const double A = seg.w0 - s * t0;
  auto P0 = [](double t) { return detail::xlogabs(t) - t; };
  auto P1 = [](double t) { return 0.5 * t * detail::xlogabs(t) - 0.25 * t * t; };
  return A * (P0(t1) - P0(t0)) + s * (P1(t1) - P1(t0));
}

/// Exact value of the integral of w(y) |y - x|^-gamma over the segment.
inline double segment_power_velocity(double x, const Segment& seg, double gamma) {
  validate(seg);
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::domain_error("segment_power_velocity: need 0 < gamma < 1");
  const double p = 1.0 - gamma;
  const double q = 2.0 - gamma;
  const double t0 = seg.y0 - x;
  const double t1 = seg.y1 - x;
  const double s = seg.slope();
  const double A = seg.w0 - s * t0;
  auto R0 = [p](double t) { return std::copysign(std::pow(std::abs(t), p), t) / p; };
  auto R1 = [q](double t) { return std::pow(std::abs(t), q) / q; };
  return A * (R0(t1) - R0(t0)) + s * (R1(t1) - R1(t0));
}

/// Integral of w(y) log(1 + a^2/(y-x)^2) over the segment.
inline double segment_boundary_layer(double x, const Segment& seg, double a) {
  validate(seg);
  const double t0 = seg.y0 - x;
  const double t1 = seg.y1 - x;
  const double s = seg.slope();
  const double A = seg.w0 - s * t0;
  const double a2 = a * a;
  auto L = [a2](double t) { return t == 0.0 ? 0.0 : std::log1p(a2 / (t * t)); };
  auto B0 = [&](double t) { return t * L(t) + 2.0 * a * std::atan(t / a); };
  auto B1 = [&](double t) { return 0.5 * t * t * L(t) + 0.5 * a2 * std::log(t * t + a2); };
  return A * (B0(t1) - B0(t0)) + s * (B1(t1) - B1(t0));
}

// ---------------------------------------------------------------------------
// Half-line evaluator for odd fields
// ---------------------------------------------------------------------------

/// Velocity of an odd field from its nonnegative half, in the scaled variable
/// eta = y/x. Segments far from x (eta < 1/8 or eta > 8) use series forms of
/// the antiderivatives so the result keeps relative accuracy as x -> 0, where
/// the full-line sum cancels catastrophically.
///
/// For Local the positive-half formula -int_0^x omega is used and the result
/// mirrored, i.e. the odd extension of the law on x >= 0.
class OddHalfEvaluator {
 public:
  OddHalfEvaluator(const VelocityLaw& law, std::span<const double> pos, std::span<const double> val)
      : law_(law), pos_(pos.begin(), pos.end()), val_(val.begin(), val.end()) {
    if (pos_.empty() || pos_.front() != 0.0 || val_.front() != 0.0)
      throw ContractViolation("half-line field must start with the marker (0, 0)");
    if (pos_.size() != val_.size()) throw ContractViolation("half-line field: length mismatch");
    if (!nondecreasing(pos_)) throw ContractViolation("half-line field: positions out of order");
    build_segments();
    switch (law_.kind) {
      case LawKind::Local: build_prefix(); break;
      case LawKind::HyperbolicApprox: build_suffix(); break;
      case LawKind::AlphaPatch: build_power(); build_far(law_.gamma()); break;
      case LawKind::EulerLog:
      case LawKind::OddEuler: build_far(0.0); break;
      case LawKind::BoundaryLayer: full_ = mirror_half(pos_, val_, 0.0, 0, 0); break;
    }
  }

  /// u at half-line marker i.
  double at_marker(std::size_t i) const {
    if (i == 0) return 0.0;
    switch (law_.kind) {
      case LawKind::Local: return -prefix_[i];
      case LawKind::HyperbolicApprox: return -pos_[i] * suffix_[i];
      default: return at(pos_[i]);
    }
  }

  /// u at any x >= 0.
  double at(double x) const {
    if (std::isnan(x)) throw ContractViolation("velocity: x is NaN");
    if (x < 0.0) return -at(-x);
    if (x == 0.0) return 0.0;
    switch (law_.kind) {
      case LawKind::EulerLog:
      case LawKind::OddEuler: return log_velocity(x);
      case LawKind::AlphaPatch: return power_velocity(x);
      case LawKind::Local: return local_at(x);
      case LawKind::HyperbolicApprox: return hyperbolic_at(x);
      case LawKind::BoundaryLayer: return boundary_layer_at(x);
    }
    return 0.0;
  }

  /// u_x = H omega at x >= 0 (Euler laws only); even in x. At a marker the
  /// field must be continuous.
  double hilbert_at(double x) const {
    if (!law_.is_euler()) throw ContractViolation("hilbert_at requires an Euler law");
    if (std::isnan(x)) throw ContractViolation("hilbert_at: x is NaN");
    x = std::abs(x);
    if (segs_.empty()) return 0.0;
    if (x == 0.0) {
      double sum = 0.0;
      for (const ActiveSegment& sg : segs_) sum += inverse_moment(nodes_[sg.n0], nodes_[sg.n1], sg.w0, sg.w1);
      return -2.0 * sum;
    }
    const Range r = far_range(x);
    double h = 0.0;
    if (r.below > 0) {
      const double b = seg_y1_[r.below - 1];
      h += 2.0 / x * odd_series(kOnes.data(), &below_[r.below * kMoments], b / x);
    }
    if (r.above < segs_.size()) h += above_ux(x, r.above);
    if (r.below < r.above) h += hilbert_near(x, r);
    return h;
  }

  std::size_t size() const { return pos_.size(); }

 private:
  struct ActiveSegment {
    std::size_t n0, n1;  // node indices
    double w0, w1, dy, lr;
  };

  static constexpr double kBelow = 0.125;
  static constexpr double kAbove = 8.0;

  void build_segments() {
    for (std::size_t i = 0; i + 1 < pos_.size(); ++i) {
      const double w0 = val_[i], w1 = val_[i + 1];
      if ((w0 == 0.0 && w1 == 0.0) || pos_[i] == pos_[i + 1]) continue;
      if (w0 == w1 && !segs_.empty() && segs_.back().w0 == segs_.back().w1 && segs_.back().w1 == w0 &&
          nodes_[segs_.back().n1] == pos_[i]) {
        nodes_[segs_.back().n1] = pos_[i + 1];
        continue;
      }
      if (nodes_.empty() || nodes_.back() != pos_[i]) nodes_.push_back(pos_[i]);
      nodes_.push_back(pos_[i + 1]);
      segs_.push_back({nodes_.size() - 2, nodes_.size() - 1, w0, w1, 0.0, 0.0});
    }
    for (auto& s : segs_) {
      const double y0 = nodes_[s.n0], y1 = nodes_[s.n1];
      s.dy = y1 - y0;
      s.lr = y0 > 0.0 ? std::log1p(s.dy / y0) : std::numeric_limits<double>::infinity();
    }
    log_nodes_.resize(nodes_.size());
    for (std::size_t j = 0; j < nodes_.size(); ++j)
      log_nodes_[j] = nodes_[j] > 0.0 ? std::log(nodes_[j]) : -std::numeric_limits<double>::infinity();
  }

  // ---- far field -----------------------------------------------------------
  // Segments lying entirely in eta <= 1/8 or eta >= 8 enter through odd power
  // moments of the kernel expansion. Prefix sums of int y^k w (below) and
  // suffix sums of int y^-(k+shift) w (above) are stored rescaled by the
  // innermost endpoint so nothing overflows as markers cluster at 0.

  static constexpr int kMoments = 9;  // k = 1, 3, ..., 17

  struct Range {
    std::size_t below, above;  // segs_[0, below) below, segs_[above, end) above
  };

  Range far_range(double x) const {
    const auto b = std::upper_bound(seg_y1_.begin(), seg_y1_.end(), x * kBelow) - seg_y1_.begin();
    const auto a = std::lower_bound(seg_y0_.begin(), seg_y0_.end(), x * kAbove) - seg_y0_.begin();
    return {static_cast<std::size_t>(b), static_cast<std::size_t>(std::max(a, b))};
  }

  template <class F>
  static double gauss10(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
  }

  /// y1^-k int_{y0}^{y1} y^k w dy (the integrand is a polynomial of degree <= 18).
  static double below_moment(const ActiveSegment& s, double y0, double y1, int k) {
    const double r0 = y0 / y1;
    const double dw = s.w1 - s.w0;
    auto f = [&](double t) { return std::pow(t, k) * (s.w0 + dw * ((t - r0) / (1.0 - r0))); };
    return y1 * gauss10(f, r0, 1.0);
  }

  /// y0^e int_{y0}^{y1} y^-e w dy for e >= 1, via t = y0/y.
  static double above_moment(const ActiveSegment& s, double y0, double e) {
    const double lrho = -s.lr;  // log(y0/y1)
    const double rho = std::exp(lrho);
    const double dw = s.w1 - s.w0;
    const double c = dw * (y0 / s.dy);  // = dw rho / (1 - rho)
    if (rho > 0.75) {
      auto f = [&](double t) { return std::pow(t, e - 3.0) * (s.w0 * t + c * (1.0 - t)); };
      return y0 * gauss10(f, rho, 1.0);
    }
    auto I = [lrho](double m) {  // int_rho^1 t^m dt
      return m == -1.0 ? -lrho : -std::expm1((m + 1.0) * lrho) / (m + 1.0);
    };
    const double i2 = I(e - 2.0);
    return y0 * (s.w0 * i2 + (c == 0.0 ? 0.0 : c * (I(e - 3.0) - i2)));
  }

  void build_far(double shift) {
    const std::size_t n = segs_.size();
    seg_y0_.resize(n);
    seg_y1_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      seg_y0_[j] = nodes_[segs_[j].n0];
      seg_y1_[j] = nodes_[segs_[j].n1];
    }
    below_.assign((n + 1) * kMoments, 0.0);
    above_.assign((n + 1) * kMoments, 0.0);
    above_shift_.assign(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double r = j == 0 ? 0.0 : seg_y1_[j - 1] / seg_y1_[j];
      const double r2 = r * r;
      double rk = r;
      for (int m = 0; m < kMoments; ++m, rk *= r2)
        below_[(j + 1) * kMoments + m] =
            rk * below_[j * kMoments + m] + below_moment(segs_[j], seg_y0_[j], seg_y1_[j], 2 * m + 1);
    }
    for (std::size_t j = n; j-- > 0;) {
      const double y0 = seg_y0_[j];
      if (!(y0 > 0.0)) break;  // never above any x > 0
      const double r = j + 1 < n ? y0 / seg_y0_[j + 1] : 0.0;
      const double rs = shift == 0.0 ? 1.0 : std::pow(r, shift);
      const double r2 = r * r;
      double rk = r;
      for (int m = 0; m < kMoments; ++m, rk *= r2)
        above_[j * kMoments + m] = rk * rs * above_[(j + 1) * kMoments + m] +
                                   above_moment(segs_[j], y0, 2 * m + 1 + shift);
      above_shift_[j] = shift == 0.0 ? 1.0 : std::pow(y0, -shift);
    }
  }

  /// sum_m coef[m] z^(2m+1) mom[m].
  static double odd_series(const double* coef, const double* mom, double z) {
    const double z2 = z * z;
    double sum = 0.0;
    for (int m = kMoments - 1; m >= 0; --m) sum = sum * z2 + coef[m] * mom[m];
    return sum * z;
  }

  static constexpr std::array<double, kMoments> kOnes = {1, 1, 1, 1, 1, 1, 1, 1, 1};

  /// -2 sum_m x^(2m) int y^-(2m+1) w over segs_[j, end).
  double above_ux(double x, std::size_t j) const {
    const double a = seg_y0_[j];
    const double z2 = (x / a) * (x / a);
    double sum = 0.0;
    for (int m = kMoments - 1; m >= 0; --m) sum = sum * z2 + above_[j * kMoments + m];
    return -2.0 / a * sum;
  }

  double hilbert_near(double x, Range r) const {
    thread_local std::vector<double> lm, lp;
    const std::size_t n_lo = segs_[r.below].n0, n_hi = segs_[r.above - 1].n1;
    lm.resize(n_hi - n_lo + 1);
    lp.resize(n_hi - n_lo + 1);
    for (std::size_t j = n_lo; j <= n_hi; ++j) {
      const double d = std::abs(nodes_[j] - x);
      lm[j - n_lo] = d == 0.0 ? 0.0 : std::log(d);  // cancels between neighbours
      lp[j - n_lo] = std::log(nodes_[j] + x);
    }
    double h = 0.0;
    for (std::size_t k = r.below; k < r.above; ++k) {
      const ActiveSegment& s = segs_[k];
      const double y0 = nodes_[s.n0];
      const double sl = (s.w1 - s.w0) / s.dy;
      const double A = s.w0 + sl * (x - y0);
      const double B = s.w0 - sl * (x + y0);
      h -= A * (lm[s.n1 - n_lo] - lm[s.n0 - n_lo]) + B * (lp[s.n1 - n_lo] - lp[s.n0 - n_lo]) + 2.0 * (s.w1 - s.w0);
    }
    return h;
  }

  // ---- log kernel log|(y-x)/(y+x)| --------------------------------------
  struct LogNode {
    int branch;  // 0 below, 1 near, 2 above
    double F0, F1;
    double F0r, F1r;  // above only: F0 + 2 log(eta), F1 + 2 eta
  };

  static LogNode log_node(double eta, double log_eta) {
    LogNode n{};
    if (eta <= kBelow) {
      const double u = eta * eta;
      const double g = -2.0 * eta * detail::atanh_series(u);
      n.branch = 0;
      n.F0 = eta * g - detail::log1m_series(u);
      n.F1 = 0.5 * u * g + eta * u * detail::atanh_tail_series(u);
    } else if (eta >= kAbove) {
      const double z = 1.0 / eta;
      const double u = z * z;
      const double S = detail::atanh_series(u);
      const double T = detail::atanh_tail_series(u);
      n.branch = 2;
      n.F0r = -2.0 * S - detail::log1m_series(u);
      n.F1r = z * (S - T);
      n.F0 = n.F0r - 2.0 * log_eta;
      n.F1 = n.F1r - 2.0 * eta;
    } else {
      n.branch = 1;
      if (eta == 1.0) {
        n.F0 = -2.0 * std::numbers::ln2;
        n.F1 = -1.0;
      } else {
        const double lm = std::log(std::abs(eta - 1.0));
        const double lp = std::log(eta + 1.0);
        n.F0 = (eta - 1.0) * lm - (eta + 1.0) * lp;
        n.F1 = 0.5 * (eta - 1.0) * (eta + 1.0) * (lm - lp) - eta;
      }
    }
    return n;
  }

  static constexpr std::array<double, kMoments> kLogCoef = {
      -2.0, -2.0 / 3, -2.0 / 5, -2.0 / 7, -2.0 / 9, -2.0 / 11, -2.0 / 13, -2.0 / 15, -2.0 / 17};

  /// x times the integral over (0, inf) of w(x eta) log|(eta-1)/(eta+1)| d eta.
  double log_velocity(double x) const {
    const Range r = far_range(x);
    double u = 0.0;
    if (r.below > 0)
      u += odd_series(kLogCoef.data(), &below_[r.below * kMoments], seg_y1_[r.below - 1] / x);
    if (r.above < segs_.size())
      u += odd_series(kLogCoef.data(), &above_[r.above * kMoments], x / seg_y0_[r.above]);
    if (r.below < r.above) u += x * log_near(x, r);
    return u;
  }

  double log_near(double x, Range r) const {
    thread_local std::vector<LogNode> nodes;
    const std::size_t n_lo = segs_[r.below].n0, n_hi = segs_[r.above - 1].n1;
    nodes.resize(n_hi - n_lo + 1);
    const double log_x = std::log(x);
    for (std::size_t j = n_lo; j <= n_hi; ++j)
      nodes[j - n_lo] = log_node(nodes_[j] / x, log_nodes_[j] - log_x);
    double sum = 0.0;
    for (std::size_t k = r.below; k < r.above; ++k) {
      const ActiveSegment& s = segs_[k];
      const LogNode& a = nodes[s.n0 - n_lo];
      const LogNode& b = nodes[s.n1 - n_lo];
      const double eta0 = nodes_[s.n0] / x;
      const double deta = s.dy / x;
      const double slope = (s.w1 - s.w0) / deta;
      double dF0, moment;
      if (a.branch == 2 && b.branch == 2) {
        dF0 = (b.F0r - a.F0r) - 2.0 * s.lr;
        const double rho = s.dy / nodes_[s.n0];
        moment = (b.F1r - a.F1r) - eta0 * (b.F0r - a.F0r) - 2.0 * deta * detail::log1p_defect(rho);
      } else {
        dF0 = b.F0 - a.F0;
        moment = (b.F1 - a.F1) - eta0 * dF0;
      }
      sum += s.w0 * dF0 + slope * moment;
    }
    return sum;
  }

  // ---- power kernel |eta-1|^-gamma - (eta+1)^-gamma -----------------------
  void build_power() {
    const double gamma = law_.gamma();
    p_ = 1.0 - gamma;
    q_ = 2.0 - gamma;
    sqrt_ = (p_ == 0.5);
    auto binom = [](double r, std::array<double, kTerms>& c) {
      c[0] = 1.0;
      for (int k = 1; k < kTerms; ++k) c[k] = c[k - 1] * (r - (k - 1)) / k;
    };
    binom(p_, cp_);
    binom(q_, cq_);
    std::array<double, kTerms> cm{};
    binom(-gamma, cm);
    for (int m = 0; m < kMoments; ++m) pow_coef_[m] = 2.0 * cm[2 * m + 1];
    pow_nodes_.resize(nodes_.size());
    for (std::size_t j = 0; j < nodes_.size(); ++j) pow_nodes_[j] = powp(nodes_[j]);
  }

  double powp(double v) const { return sqrt_ ? std::sqrt(v) : std::pow(v, p_); }

  static constexpr int kTerms = 24;

  static void even_odd(const std::array<double, kTerms>& c, double z, double& ev, double& od) {
    ev = 0.0;
    od = 0.0;
    const double u = z * z;
    for (int k = kTerms - 2; k >= 0; k -= 2) ev = ev * u + c[k];
    for (int k = kTerms - 1; k >= 1; k -= 2) od = od * u + c[k];
    od *= z;
  }

  struct PowNode {
    double F0, F1;
  };

  PowNode pow_node(double eta, double eta_p) const {
    double ev, od;
    if (eta <= kBelow) {
      even_odd(cp_, eta, ev, od);
      double evq, odq;
      even_odd(cq_, eta, evq, odq);
      return {-2.0 * ev / p_, -2.0 * odq / q_ + 2.0 * od / p_};
    }
    if (eta >= kAbove) {
      const double z = 1.0 / eta;
      even_odd(cp_, z, ev, od);
      double evq, odq;
      even_odd(cq_, z, evq, odq);
      return {-2.0 * eta_p * od / p_, -2.0 * eta * eta_p * odq / q_ + 2.0 * eta_p * ev / p_};
    }
    const double dm = eta - 1.0;
    const double am = powp(std::abs(dm));
    const double ap = powp(eta + 1.0);
    const double sm = std::copysign(am, dm);
    return {(sm - ap) / p_, std::abs(dm) * am / q_ + sm / p_ - (eta + 1.0) * ap / q_ + ap / p_};
  }

  /// -x^(1-gamma) times the integral over (0, inf) of
  /// w(x eta) [|eta-1|^-gamma - (eta+1)^-gamma] d eta.
  double power_velocity(double x) const {
    const Range r = far_range(x);
    double u = 0.0;
    if (r.below > 0)
      u += odd_series(pow_coef_.data(), &below_[r.below * kMoments], seg_y1_[r.below - 1] / x) *
           std::pow(x, -law_.gamma());
    if (r.above < segs_.size())
      u += odd_series(pow_coef_.data(), &above_[r.above * kMoments], x / seg_y0_[r.above]) *
           above_shift_[r.above];
    if (r.below < r.above) u -= powp(x) * power_near(x, r);
    return u;
  }

  double power_near(double x, Range r) const {
    thread_local std::vector<PowNode> nodes;
    const std::size_t n_lo = segs_[r.below].n0, n_hi = segs_[r.above - 1].n1;
    nodes.resize(n_hi - n_lo + 1);
    const double xp = powp(x);
    for (std::size_t j = n_lo; j <= n_hi; ++j)
      nodes[j - n_lo] = pow_node(nodes_[j] / x, pow_nodes_[j] / xp);
    double sum = 0.0;
    for (std::size_t k = r.below; k < r.above; ++k) {
      const ActiveSegment& s = segs_[k];
      const PowNode& a = nodes[s.n0 - n_lo];
      const PowNode& b = nodes[s.n1 - n_lo];
      const double eta0 = nodes_[s.n0] / x;
      const double deta = s.dy / x;
      const double slope = (s.w1 - s.w0) / deta;
      const double dF0 = b.F0 - a.F0;
      sum += s.w0 * dF0 + slope * ((b.F1 - a.F1) - eta0 * dF0);
    }
    return sum;
  }

  // ---- local and hyperbolic-approximation laws ----------------------------
  void build_prefix() {
    prefix_.assign(pos_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < pos_.size(); ++i)
      prefix_[i + 1] = prefix_[i] + 0.5 * (val_[i] + val_[i + 1]) * (pos_[i + 1] - pos_[i]);
  }

  double local_at(double x) const {
    auto it = std::upper_bound(pos_.begin(), pos_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - pos_.begin()) - 1;
    if (i + 1 >= pos_.size()) return -prefix_.back();
    const double wx = Segment{pos_[i], pos_[i + 1], val_[i], val_[i + 1]}.at(x);
    return -(prefix_[i] + 0.5 * (val_[i] + wx) * (x - pos_[i]));
  }

  /// Integral of w(y)/y over [y0, y1], 0 <= y0 < y1.
  static double inverse_moment(double y0, double y1, double w0, double w1) {
    if (y0 == y1) return 0.0;
    if (y0 == 0.0) return w1 - w0;  // w(0) = 0
    const double rho = (y1 - y0) / y0;
    return w0 * std::log1p(rho) + (w1 - w0) * detail::log1p_defect(rho);
  }

  void build_suffix() {
    suffix_.assign(pos_.size(), 0.0);
    for (std::size_t i = pos_.size() - 1; i-- > 0;)
      suffix_[i] = suffix_[i + 1] + inverse_moment(pos_[i], pos_[i + 1], val_[i], val_[i + 1]);
  }

  double hyperbolic_at(double x) const {
    auto it = std::upper_bound(pos_.begin(), pos_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - pos_.begin()) - 1;
    if (i + 1 >= pos_.size()) return 0.0;
    const double wx = Segment{pos_[i], pos_[i + 1], val_[i], val_[i + 1]}.at(x);
    return -x * (suffix_[i + 1] + inverse_moment(x, pos_[i + 1], wx, val_[i + 1]));
  }

  double boundary_layer_at(double x) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < full_.segment_count(); ++i) {
      const Segment s = full_.segment(i);
      if ((s.w0 == 0.0 && s.w1 == 0.0) || s.y0 == s.y1) continue;
      sum += segment_boundary_layer(x, s, law_.a);
    }
    return -2.0 * sum;
  }

  VelocityLaw law_;
  std::vector<double> pos_, val_;
  std::vector<double> nodes_, log_nodes_, pow_nodes_;
  std::vector<ActiveSegment> segs_;
  std::vector<double> seg_y0_, seg_y1_, below_, above_, above_shift_;
  std::array<double, kMoments> pow_coef_{};
  std::vector<double> prefix_, suffix_;
  MarkerField full_;
  double p_ = 0.5, q_ = 1.5;
  bool sqrt_ = false;
  std::array<double, kTerms> cp_{}, cq_{};
};

/// Velocities at every half-line marker of an odd field (entry 0 is exactly 0).
inline std::vector<double> odd_half_velocities(const VelocityLaw& law, std::span<const double> pos,
                                               std::span<const double> val, int threads = 1) {
  OddHalfEvaluator ev(law, pos, val);
  std::vector<double> u(pos.size(), 0.0);
  parallel_for(pos.size(), threads, [&](std::size_t i) { u[i] = ev.at_marker(i); });
  return u;
}

/// H omega at every half-line marker of an odd field (Euler laws).
inline std::vector<double> odd_half_hilbert(std::span<const double> pos, std::span<const double> val,
                                            int threads = 1) {
  OddHalfEvaluator ev(VelocityLaw::odd_euler(), pos, val);
  std::vector<double> h(pos.size(), 0.0);
  parallel_for(pos.size(), threads, [&](std::size_t i) { h[i] = ev.hilbert_at(pos[i]); });
  return h;
}

// ---------------------------------------------------------------------------
// Pointwise velocity dispatch
// ---------------------------------------------------------------------------

namespace detail {

template <class SegFn>
double full_line_sum(const MarkerField& f, double x, SegFn&& fn) {
  double sum = 0.0;
  for (std::size_t i = 0; i < f.segment_count(); ++i) {
    const Segment s = f.segment(i);
    if ((s.w0 == 0.0 && s.w1 == 0.0) || s.y0 == s.y1) continue;
    sum += fn(x, s);
  }
  return sum;
}

/// Odd fields: exact u(0) = 0 and u(-x) = -u(x) by evaluating at |x|.
template <class Fn>
double odd_reduce(double x, bool odd, Fn&& fn) {
  if (!odd) return fn(x);
  if (x == 0.0) return 0.0;
  return x < 0.0 ? -fn(-x) : fn(x);
}

}  // namespace detail

/// u(x) for the given law.
///
///   EulerLog          int log|y-x| w(y) dy, summed over all segments
///   OddEuler          -x int_0^inf K(x/y) w(y)/y dy (odd fields)
///   AlphaPatch        -int |y-x|^-gamma w(y) dy, summed over all segments (odd fields)
///   Local             -int_0^x w(y) dy
///   HyperbolicApprox  -x int_x^inf w(y)/y dy (odd fields)
///   BoundaryLayer     -2 int log(((y-x)^2 + a^2)/(y-x)^2) w(y) dy
inline double velocity(const VelocityLaw& law, const MarkerField& f, double x) {
  if (std::isnan(x)) throw ContractViolation("velocity: x is NaN");
  if (f.positions.size() != f.values.size()) throw ContractViolation("velocity: malformed field");
  const bool odd = is_odd(f);
  if (law.requires_odd() && !odd)
    throw ContractViolation(std::string(law_name(law.kind)) + " requires an odd field");
  if (f.positions.empty()) return 0.0;
  switch (law.kind) {
    case LawKind::EulerLog:
      return detail::odd_reduce(x, odd, [&](double xx) {
        return detail::full_line_sum(f, xx, [](double t, const Segment& s) { return segment_log_velocity(t, s); });
      });
    case LawKind::AlphaPatch: {
      const double g = law.gamma();
      return detail::odd_reduce(x, true, [&](double xx) {
        return -detail::full_line_sum(f, xx, [g](double t, const Segment& s) { return segment_power_velocity(t, s, g); });
      });
    }
    case LawKind::OddEuler:
    case LawKind::HyperbolicApprox:
      return OddHalfEvaluator(law, f.half_positions(), f.half_values()).at(x);
    case LawKind::Local:
      // -int_0^x w for x >= 0; odd fields take the odd extension, matching
      // the half-line evaluator.
      return detail::odd_reduce(x, odd, [&](double xx) {
        const double lo = std::min(0.0, xx), hi = std::max(0.0, xx);
        double integral = 0.0;
        for (std::size_t i = 0; i < f.segment_count(); ++i) {
          const Segment s = f.segment(i);
          const double a = std::max(s.y0, lo), b = std::min(s.y1, hi);
          if (a >= b) continue;
          integral += 0.5 * (s.at(a) + s.at(b)) * (b - a);
        }
        return xx >= 0.0 ? -integral : integral;
      });
    case LawKind::BoundaryLayer: {
      const double a = law.a;
      return detail::odd_reduce(x, odd, [&](double xx) {
        return -2.0 * detail::full_line_sum(f, xx, [a](double t, const Segment& s) { return segment_boundary_layer(t, s, a); });
      });
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Hilbert transform
// ---------------------------------------------------------------------------

/// H w(x) = p.v. int w(y)/(x-y) dy (no 1/pi factor).
///
/// Inside a window of 10 local marker spacings around x the integrand is
/// replaced by (w(y) - w(x))/(x-y), which is bounded; the far field is the
/// exact log moment of each affine segment.
inline double hilbert_transform_at(const MarkerField& f, double x) {
  if (std::isnan(x)) throw ContractViolation("hilbert_transform_at: x is NaN");
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  const auto& p = f.positions;
  std::size_t k;
  if (x <= p.front()) k = 0;
  else if (x >= p.back()) k = n - 2;
  else k = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), x) - p.begin()) - 1;
  const double radius = 10.0 * (p[k + 1] - p[k]);
  const double wl = x - radius, wr = x + radius;
  const double wx = sample(f, x);

  double far = 0.0, near = 0.0;
  // Piece [a, b] of segment s (restricted to its affine extension).
  auto plain = [&](const Segment& s, double a, double b) {
    const double sl = s.slope();
    const double A = s.w0 + sl * (x - s.y0);  // affine extension at x
    const double t0 = a - x, t1 = b - x;
    return -A * std::log(std::abs(t1 / t0)) - sl * (t1 - t0);
  };
  auto subtracted = [&](const Segment& s, double a, double b) {
    const double sl = s.slope();
    const double t0 = a - x, t1 = b - x;
    double v = -sl * (t1 - t0);
    if (!(t0 <= 0.0 && t1 >= 0.0)) {
      const double A = s.w0 + sl * (x - s.y0);
      v -= (A - wx) * std::log(std::abs(t1 / t0));
    }
    return v;
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Segment s = f.segment(i);
    if (s.y0 == s.y1) continue;
    if (s.y1 <= wl || s.y0 >= wr) {
      if (s.w0 != 0.0 || s.w1 != 0.0) far += plain(s, s.y0, s.y1);
      continue;
    }
    const double a = std::max(s.y0, wl), b = std::min(s.y1, wr);
    near += subtracted(s, a, b);
    if (s.y0 < wl) far += plain(s, s.y0, wl);
    if (s.y1 > wr) far += plain(s, wr, s.y1);
  }
  // Zero region inside the window: the subtracted integrand there is -w(x)/(x-y).
  const double a = std::max(p.front(), wl), b = std::min(p.back(), wr);
  if (wx != 0.0 && a < b) near += wx * std::log(std::abs((x - a) / (x - b)));
  return near + far;
}

}  // namespace nlas
