#include "shapespline/rkhs.hpp"

#include <algorithm>
#include <cmath>

#include "shapespline/errors.hpp"
#include "shapespline/quadrature.hpp"

namespace shapespline {

SobolevParams SobolevParams::make(int m, double p) {
  if (m < 1) throw SetupError("penalty order m must be >= 1");
  if (!(p > 1.0) || !std::isfinite(p)) throw SetupError("exponent p must lie in the open interval (1, inf)");
  return SobolevParams{m, p, p / (p - 1.0)};
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

double taylor_basis(int j, double t) { return std::pow(t, j) / factorial(j); }

namespace {

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace

double kernel(const SobolevParams& params, double t, double s) {
  const int m = params.m;
  double poly = 0.0;
  for (int j = 0; j < m; ++j) poly += taylor_basis(j, t) * taylor_basis(j, s);

  // int_0^mu (t-u)^{m-1} (s-u)^{m-1} du, expanded in powers of u.
  const double mu = std::min(t, s);
  const int n = m - 1;
  double integral = 0.0;
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= n; ++b) {
      const double sign = ((a + b) % 2 == 0) ? 1.0 : -1.0;
      integral += sign * binomial(n, a) * binomial(n, b) * std::pow(t, n - a) * std::pow(s, n - b) *
                  std::pow(mu, a + b + 1) / (a + b + 1);
    }
  }
  const double fn = factorial(n);
  return poly + integral / (fn * fn);
}

double representer_deriv(int m, double ti, double s) {
  if (s >= ti) return 0.0;
  if (m == 1) return 1.0;
  return std::pow(ti - s, m - 1) / factorial(m - 1);
}

double evaluate_from_parts(const SobolevParams& params, std::span<const double> a,
                           std::span<const double> grid, std::span<const double> deriv,
                           double t) {
  const int m = params.m;
  if (static_cast<int>(a.size()) != m) throw SetupError("evaluate_from_parts: need m coefficients");
  if (grid.size() != deriv.size() || grid.empty())
    throw SetupError("evaluate_from_parts: grid/sample size mismatch");
  if (grid.front() > 0.0 || grid.back() < t) throw DomainError("evaluate_from_parts: grid does not cover [0, t]");

  double value = 0.0;
  for (int j = 0; j < m; ++j) value += a[j] * taylor_basis(j, t);

  const double fm1 = factorial(m - 1);
  auto integrand = [&](double s, double fm) { return std::pow(t - s, m - 1) / fm1 * fm; };

  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double s0 = std::max(grid[k], 0.0);
    if (s0 >= t) break;
    const double s1 = grid[k + 1];
    if (s1 <= 0.0) continue;
    auto interp = [&](double s) {
      const double w = (s - grid[k]) / (grid[k + 1] - grid[k]);
      return (1.0 - w) * deriv[k] + w * deriv[k + 1];
    };
    const double hi = std::min(s1, t);
    integral += 0.5 * (hi - s0) * (integrand(s0, interp(s0)) + integrand(hi, interp(hi)));
  }
  return value + integral;
}

double evaluate_from_parts(const SobolevParams& params, std::span<const double> a,
                           std::span<const double> breakpoints,
                           const std::function<double(double)>& deriv, double t) {
  const int m = params.m;
  if (static_cast<int>(a.size()) != m) throw SetupError("evaluate_from_parts: need m coefficients");
  if (breakpoints.empty() || breakpoints.front() > 0.0 || breakpoints.back() < t)
    throw DomainError("evaluate_from_parts: breakpoints do not cover [0, t]");

  double value = 0.0;
  for (int j = 0; j < m; ++j) value += a[j] * taylor_basis(j, t);

  const auto& rule = quad::unit_rule();
  const double fm1 = factorial(m - 1);
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double lo = std::max(breakpoints[k], 0.0);
    const double hi = std::min(breakpoints[k + 1], t);
    if (hi <= lo) continue;
    const double h = hi - lo;
    for (int q = 0; q < quad::UnitRule::kPoints; ++q) {
      const double s = lo + h * rule.nodes[q];
      integral += h * rule.weights[q] * std::pow(t - s, m - 1) / fm1 * deriv(s);
    }
  }
  return value + integral;
}

}  // namespace shapespline
