#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "nlas/error.hpp"

namespace nlas {

/// Reference integrator used as a test oracle and by the lemma checks.
///
/// [a, b] is cut at every point of `singular` that falls strictly inside it;
/// each piece is integrated with double-exponential (tanh-sinh) quadrature,
/// which tolerates integrable endpoint singularities such as log|y| and
/// |y|^-gamma. Kinks of piecewise-smooth integrands must also be listed in
/// `singular`. Throws QuadratureError (carrying the best estimate) when the
/// estimated error exceeds tol * max(1, integral of |f|).
///
/// f is called as f(y), or as f(c, d) with y = c + d when it accepts two
/// arguments: c is the nearest cut point and d the exact offset from it.
/// Strong singularities need the second form, since y itself cannot resolve
/// distances below one ulp of c.
template <class F>
double reference_integrate(F&& f, double a, double b, double tol,
                           std::span<const double> singular = {}) {
  if (a == b) return 0.0;
  if (a > b) return -reference_integrate(f, b, a, tol, singular);
  std::vector<double> cuts;
  cuts.reserve(singular.size() + 2);
  cuts.push_back(a);
  for (double s : singular)
    if (s > a && s < b) cuts.push_back(s);
  cuts.push_back(b);
  std::sort(cuts.begin() + 1, cuts.end() - 1);
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  double total = 0.0;
  double err_total = 0.0;
  double l1_total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    double l1 = 0.0;
    const double lo = cuts[i], hi = cuts[i + 1];
    auto g = [&](double, double dc) {
      // boost passes the complement: dc = lo - y on the left half, hi - y on the right.
      if constexpr (std::is_invocable_v<F&, double, double>) {
        return f(dc < 0.0 ? lo : hi, -dc);
      } else {
        // Abscissae that round onto an endpoint are moved one ulp inside.
        double y = dc < 0.0 ? lo - dc : hi - dc;
        if (y <= lo) y = std::nextafter(lo, hi);
        else if (y >= hi) y = std::nextafter(hi, lo);
        return f(y);
      }
    };
    const double piece = integrator.integrate(g, lo, hi, tol, &err, &l1);
    total += piece;
    err_total += err * 0.5 * (hi - lo);  // boost reports the error on the reference interval
    l1_total += l1;
  }
  if (!(err_total <= tol * std::max(1.0, l1_total)))
    throw QuadratureError("reference_integrate: tolerance not reached", total, err_total);
  return total;
}

template <class F>
double reference_integrate(F&& f, double a, double b, double tol,
                           std::initializer_list<double> singular) {
  const std::vector<double> s(singular);
  return reference_integrate(std::forward<F>(f), a, b, tol, std::span<const double>(s));
}

}  // namespace nlas
