#pragma once

namespace nlas {

/// Per-snapshot diagnostics; one row of the series file.
struct DiagRecord {
  double t = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double ratio = 0.0;
  double log_ratio = 0.0;
  double grad_sup = 0.0;     // max |d omega / dx| over adjacent markers
  double support_D = 0.0;    // half-width of the support of the interpolant
  double ux_sup = 0.0;       // max |H omega| at markers (Euler laws, else 0)
  double holder_half = 0.0;  // discrete C^{1/2} seminorm, pairs with |x-y| <= 1

  bool operator==(const DiagRecord&) const = default;
};

}  // namespace nlas
