#pragma once

#include <array>
#include <span>
#include <vector>

namespace shapespline::quad {

/// Gauss-Legendre rule mapped to [0, 1].
struct UnitRule {
  static constexpr int kPoints = 8;
  std::array<double, kPoints> nodes;
  std::array<double, kPoints> weights;
};

const UnitRule& unit_rule();

/// Real roots of sum_k coeffs[k] u^k strictly inside (lo, hi), ascending.
/// Roots are isolated between the critical points of the polynomial and
/// refined by bisection, so every sign change is found; tangential double
/// roots may be missed, which is harmless for splitting integrals.
std::vector<double> real_roots_in(std::span<const double> coeffs, double lo, double hi);

double polyval(std::span<const double> coeffs, double u);

}  // namespace shapespline::quad
