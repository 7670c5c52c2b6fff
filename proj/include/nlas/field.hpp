#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nlas/error.hpp"

namespace nlas {

/// One piece of a piecewise-linear field: affine between (y0, w0) and (y1, w1).
struct Segment {
  double y0;
  double y1;
  double w0;
  double w1;

  double slope() const { return (w1 - w0) / (y1 - y0); }
  double at(double y) const { return w0 + (w1 - w0) * ((y - y0) / (y1 - y0)); }
};

inline void validate(const Segment& s) {
  if (!(s.y0 < s.y1)) throw ContractViolation("segment endpoints must satisfy y0 < y1");
}

/// Ordered Lagrangian markers carrying fixed values of omega. The represented
/// field is the linear interpolant of the markers, zero outside
/// [positions.front(), positions.back()]. Coincident markers (only produced
/// by coalescing runs) represent a jump.
///
/// Odd fields have an odd marker count with the center marker at 0 and
/// positions/values antisymmetric about it. idx_x1 / idx_x2 index the full
/// arrays and name the markers started at x1(0), x2(0) (positive side).
struct MarkerField {
  std::vector<double> positions;
  std::vector<double> values;
  double t = 0.0;
  std::size_t idx_x1 = 0;
  std::size_t idx_x2 = 0;

  std::size_t size() const { return positions.size(); }
  std::size_t segment_count() const { return positions.empty() ? 0 : positions.size() - 1; }
  Segment segment(std::size_t i) const {
    return {positions[i], positions[i + 1], values[i], values[i + 1]};
  }
  std::size_t center() const { return positions.size() / 2; }
  double x1() const { return positions[idx_x1]; }
  double x2() const { return positions[idx_x2]; }

  /// Nonnegative half: positions[center()..], starting at exactly 0.
  std::span<const double> half_positions() const {
    return std::span<const double>(positions).subspan(center());
  }
  std::span<const double> half_values() const {
    return std::span<const double>(values).subspan(center());
  }

  bool operator==(const MarkerField&) const = default;
};

inline bool strictly_increasing(std::span<const double> p) {
  for (std::size_t i = 1; i < p.size(); ++i)
    if (!(p[i - 1] < p[i])) return false;
  return true;
}

inline bool nondecreasing(std::span<const double> p) {
  for (std::size_t i = 1; i < p.size(); ++i)
    if (!(p[i - 1] <= p[i])) return false;
  return true;
}

/// Exact antisymmetry about the center marker.
inline bool is_odd(const MarkerField& f) {
  const std::size_t n = f.size();
  if (n % 2 == 0) return n == 0;
  const std::size_t c = n / 2;
  if (f.positions[c] != 0.0 || f.values[c] != 0.0) return false;
  for (std::size_t k = 1; k <= c; ++k) {
    if (f.positions[c + k] != -f.positions[c - k]) return false;
    if (f.values[c + k] != -f.values[c - k]) return false;
  }
  return true;
}

inline void validate(const MarkerField& f) {
  if (f.positions.size() != f.values.size())
    throw ContractViolation("marker field: positions and values differ in length");
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!std::isfinite(f.positions[i]) || !std::isfinite(f.values[i]))
      throw ContractViolation("marker field: non-finite entry at marker " + std::to_string(i));
  if (!nondecreasing(f.positions)) throw ContractViolation("marker field: positions out of order");
  if (!f.positions.empty() && (f.idx_x1 >= f.size() || f.idx_x2 >= f.size()))
    throw ContractViolation("marker field: tracked index out of range");
}

inline void require_odd(const MarkerField& f, const char* who) {
  if (!is_odd(f)) throw ContractViolation(std::string(who) + " requires an odd field");
}

/// Build a full odd field from its nonnegative half (half_pos[0] must be 0).
inline MarkerField mirror_half(std::span<const double> half_pos, std::span<const double> half_val,
                               double t, std::size_t half_idx_x1, std::size_t half_idx_x2) {
  const std::size_t m = half_pos.size();
  MarkerField f;
  f.t = t;
  f.positions.resize(2 * m - 1);
  f.values.resize(2 * m - 1);
  const std::size_t c = m - 1;
  f.positions[c] = 0.0;
  f.values[c] = 0.0;
  for (std::size_t k = 1; k < m; ++k) {
    f.positions[c + k] = half_pos[k];
    f.positions[c - k] = -half_pos[k];
    f.values[c + k] = half_val[k];
    f.values[c - k] = -half_val[k];
  }
  f.idx_x1 = c + half_idx_x1;
  f.idx_x2 = c + half_idx_x2;
  return f;
}

/// Piecewise-linear reconstruction of omega.
inline double sample(const MarkerField& f, double x) {
  if (f.positions.empty() || x < f.positions.front() || x > f.positions.back()) return 0.0;
  auto it = std::upper_bound(f.positions.begin(), f.positions.end(), x);
  if (it == f.positions.end()) return f.values.back();
  const std::size_t i = static_cast<std::size_t>(it - f.positions.begin()) - 1;
  if (f.positions[i] == x) return f.values[i];
  return f.segment(i).at(x);
}

/// Largest |omega| over the markers.
inline double sup_abs(const MarkerField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace nlas
