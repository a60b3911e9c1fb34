#pragma once

#include <functional>
#include <span>

namespace shapespline {

/// Order m of the penalized derivative and the exponent pair (p, q),
/// 1/p + 1/q = 1.
struct SobolevParams {
  int m = 2;
  double p = 2.0;
  double q = 2.0;

  /// Validates m >= 1 and p in (1, inf) and fills in q = p / (p - 1).
  static SobolevParams make(int m, double p);
};

double factorial(int n);

/// Taylor basis P_j(t) = t^j / j!.
double taylor_basis(int j, double t);

/// Reproducing kernel R_t(s) of W_{m,p} under the pairing sum_j a_j b_j +
/// int f^(m) g^(m); the remainder integral is evaluated in closed form.
double kernel(const SobolevParams& params, double t, double s);

/// m-th derivative in s of the point-evaluation representer at t_i:
/// (t_i - s)_+^{m-1} / (m-1)!, with the m = 1 case the indicator of s < t_i.
double representer_deriv(int m, double ti, double s);

/// f(t) = sum_j a_j P_j(t) + int_0^t (t-s)^{m-1}/(m-1)! f^(m)(s) ds with f^(m)
/// given on a grid and integrated by the composite trapezoid rule. The last
/// cell is cut at t using linear interpolation. Throws DomainError if the
/// grid does not cover [0, t].
double evaluate_from_parts(const SobolevParams& params, std::span<const double> a,
                           std::span<const double> grid, std::span<const double> deriv,
                           double t);

/// Same representation with f^(m) given as a callable that is smooth between
/// consecutive breakpoints; each piece is integrated by Gauss-Legendre.
double evaluate_from_parts(const SobolevParams& params, std::span<const double> a,
                           std::span<const double> breakpoints,
                           const std::function<double(double)>& deriv, double t);

}  // namespace shapespline
