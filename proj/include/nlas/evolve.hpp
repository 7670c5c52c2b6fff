#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "nlas/error.hpp"
#include "nlas/field.hpp"
#include "nlas/kernels.hpp"
#include "nlas/records.hpp"

namespace nlas {

struct StepControl {
  double dt_init = 0.05;
  double cfl = 0.5;  // dt <= cfl / max strain rate |du/dx| over segments
  double dt_min = 1e-10;
  double eps_blowup = 1e-6;
  double t_end = 10.0;
  int snapshot_stride = 1;
  int threads = 1;
  // Sticky continuation through interior shocks: markers that meet merge into
  // a jump and move together, markers reaching 0 stay there. Segments
  // narrower than coalesce_gap times their distance to 0, or ending below
  // coalesce_floor, no longer limit dt.
  bool coalesce = false;
  double coalesce_gap = 1e-6;
  double coalesce_floor = 1e-7;

  bool operator==(const StepControl&) const = default;
};

inline void validate(const StepControl& c) {
  if (!(c.dt_init > 0.0)) throw ConfigError("dt_init", "must be positive");
  if (!(c.cfl > 0.0)) throw ConfigError("cfl", "must be positive");
  if (!(c.dt_min > 0.0 && c.dt_min < c.dt_init)) throw ConfigError("dt_min", "requires 0 < dt_min < dt_init");
  if (!(c.eps_blowup > 0.0)) throw ConfigError("eps_blowup", "must be positive");
  if (!(c.t_end > 0.0)) throw ConfigError("t_end", "must be positive");
  if (c.snapshot_stride < 1) throw ConfigError("snapshot_stride", "must be >= 1");
  if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
  if (!(c.coalesce_gap >= 0.0 && c.coalesce_gap < 1.0)) throw ConfigError("coalesce_gap", "must lie in [0, 1)");
  if (!(c.coalesce_floor >= 0.0)) throw ConfigError("coalesce_floor", "must be >= 0");
}

enum class Termination { TEnd, BlowupX1, StepUnderflow, MarkerCrossing };

inline std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::TEnd: return "TEnd";
    case Termination::BlowupX1: return "BlowupX1";
    case Termination::StepUnderflow: return "StepUnderflow";
    case Termination::MarkerCrossing: return "MarkerCrossing";
  }
  return "?";
}

struct Trajectory {
  std::vector<MarkerField> snapshots;
  Termination termination = Termination::TEnd;
  std::vector<DiagRecord> records;
  std::size_t accepted_steps = 0;
  double first_coalescence_t = std::numeric_limits<double>::quiet_NaN();  // NaN: never
};

/// Velocity at every marker of an odd state, computed on the nonnegative half
/// and mirrored, so the result is exactly antisymmetric with 0 at the center.
inline std::vector<double> velocities(const MarkerField& state, const VelocityLaw& law, int threads = 1) {
  require_odd(state, "velocities");
  const auto half = odd_half_velocities(law, state.half_positions(), state.half_values(), threads);
  const std::size_t c = state.center();
  std::vector<double> u(state.size());
  for (std::size_t k = 0; k < half.size(); ++k) {
    u[c + k] = half[k];
    u[c - k] = -half[k];
  }
  u[c] = 0.0;
  return u;
}

/// Largest |du/dx| over half-line segments wider than gap * pos[i + 1] and
/// ending above floor.
inline double strain_rate(std::span<const double> pos, std::span<const double> u, double gap = 0.0,
                          double floor = 0.0) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
    const double dx = pos[i + 1] - pos[i];
    if (dx == 0.0 || dx <= gap * pos[i + 1] || pos[i + 1] <= floor) continue;
    s = std::max(s, std::abs(u[i + 1] - u[i]) / dx);
  }
  return s;
}

/// Nearest nondecreasing sequence (pool adjacent violators), pinned at 0.
/// Pooled markers get one common position.
inline void project_monotone(std::vector<double>& p) {
  struct Block {
    double sum;
    std::size_t first, count;
  };
  std::vector<Block> blocks;
  blocks.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    blocks.push_back({p[i], i, 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / static_cast<double>(a.count) <= b.sum / static_cast<double>(b.count)) break;
      Block merged{a.sum + b.sum, a.first, a.count + b.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  for (const Block& b : blocks) {
    const double v = std::max(0.0, b.sum / static_cast<double>(b.count));
    for (std::size_t i = b.first; i < b.first + b.count; ++i) p[i] = v;
  }
  p[0] = 0.0;
}

enum class StepStatus { Ok, StepUnderflow, MarkerCrossing };

struct StepOutcome {
  MarkerField state;
  double dt = 0.0;
  StepStatus status = StepStatus::Ok;
};

namespace detail {

inline StepOutcome rk4_half(const MarkerField& state, const VelocityLaw& law, double dt, int threads,
                            const std::vector<double>* k1_in, bool coalesce) {
  const auto pos = state.half_positions();
  const auto val = state.half_values();
  const std::size_t m = pos.size();
  const std::vector<double> p0(pos.begin(), pos.end());
  auto eval = [&](const std::vector<double>& p) { return odd_half_velocities(law, p, val, threads); };

  StepOutcome out;
  out.dt = dt;
  const std::vector<double> k1 = k1_in ? *k1_in : eval(p0);
  std::vector<double> stage(m);
  auto settle = [coalesce](std::vector<double>& p) {
    p[0] = 0.0;
    if (coalesce && !nondecreasing(p)) project_monotone(p);
    return coalesce ? nondecreasing(p) : strictly_increasing(p);
  };
  auto make_stage = [&](const std::vector<double>& k, double h) {
    for (std::size_t i = 0; i < m; ++i) stage[i] = p0[i] + h * k[i];
    return settle(stage);
  };
  if (!make_stage(k1, 0.5 * dt)) return out.status = StepStatus::MarkerCrossing, out;
  const std::vector<double> k2 = eval(stage);
  if (!make_stage(k2, 0.5 * dt)) return out.status = StepStatus::MarkerCrossing, out;
  const std::vector<double> k3 = eval(stage);
  if (!make_stage(k3, dt)) return out.status = StepStatus::MarkerCrossing, out;
  const std::vector<double> k4 = eval(stage);

  std::vector<double> p1(m);
  for (std::size_t i = 0; i < m; ++i) p1[i] = p0[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  if (!settle(p1)) return out.status = StepStatus::MarkerCrossing, out;
  const std::size_t c = state.center();
  out.state = mirror_half(p1, val, state.t + dt, state.idx_x1 - c, state.idx_x2 - c);
  // Carry the values array itself so it stays bit-identical.
  out.state.values = state.values;
  return out;
}

}  // namespace detail

/// One classical RK4 step of the marker ODE with an explicit dt (may be
/// negative). Values are carried unchanged.
inline StepOutcome rk4_advance(const MarkerField& state, const VelocityLaw& law, double dt, int threads = 1) {
  require_odd(state, "rk4_advance");
  return detail::rk4_half(state, law, dt, threads, nullptr, false);
}

/// One adaptive step: dt = min(dt_init, cfl / strain, t_end - t).
inline StepOutcome step(const MarkerField& state, const VelocityLaw& law, const StepControl& ctl) {
  require_odd(state, "step");
  const auto pos = state.half_positions();
  const std::vector<double> p0(pos.begin(), pos.end());
  const std::vector<double> k1 = odd_half_velocities(law, p0, state.half_values(), ctl.threads);
  const double strain = ctl.coalesce ? strain_rate(p0, k1, ctl.coalesce_gap, ctl.coalesce_floor) : strain_rate(p0, k1);
  double dt = ctl.dt_init;
  if (strain > 0.0) dt = std::min(dt, ctl.cfl / strain);
  if (dt < ctl.dt_min) {
    StepOutcome out;
    out.dt = dt;
    out.status = StepStatus::StepUnderflow;
    return out;
  }
  const double remaining = ctl.t_end - state.t;
  if (remaining < dt) dt = remaining;
  return detail::rk4_half(state, law, dt, ctl.threads, &k1, ctl.coalesce);
}

/// Integrate until t_end, x1 < eps_blowup, or a numerical failure. The initial
/// and final states are always recorded; intermediate states every
/// snapshot_stride accepted steps.
inline Trajectory run(const MarkerField& profile, const VelocityLaw& law, const StepControl& ctl) {
  validate(profile);
  validate(ctl);
  require_odd(profile, "run");
  Trajectory traj;
  traj.snapshots.push_back(profile);
  MarkerField state = profile;
  bool last_recorded = true;
  for (;;) {
    if (state.t >= ctl.t_end) {
      traj.termination = Termination::TEnd;
      break;
    }
    StepOutcome next = step(state, law, ctl);
    if (next.status != StepStatus::Ok) {
      traj.termination =
          next.status == StepStatus::StepUnderflow ? Termination::StepUnderflow : Termination::MarkerCrossing;
      break;
    }
    state = std::move(next.state);
    ++traj.accepted_steps;
    if (std::isnan(traj.first_coalescence_t) && !strictly_increasing(state.positions))
      traj.first_coalescence_t = state.t;
    last_recorded = traj.accepted_steps % static_cast<std::size_t>(ctl.snapshot_stride) == 0;
    if (last_recorded) traj.snapshots.push_back(state);
    if (state.x1() < ctl.eps_blowup) {
      traj.termination = Termination::BlowupX1;
      break;
    }
  }
  if (!last_recorded) traj.snapshots.push_back(state);
  return traj;
}

}  // namespace nlas
