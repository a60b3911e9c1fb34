#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "shapespline/dual_solver.hpp"
#include "shapespline/quadrature.hpp"

namespace shapespline::detail {

/// Coefficients of g_alpha on a cell as a polynomial in u = s - lo. Only
/// representers with t_i >= hi are nonzero inside the open cell.
inline void local_polynomial(const DualProblem& problem, const Eigen::VectorXd& alpha,
                             const DualProblem::Cell& cell, std::vector<double>& coeffs) {
  const int m = problem.params().m;
  const auto& t = problem.observations().t;
  coeffs.assign(static_cast<std::size_t>(m), 0.0);
  const double fm1 = factorial(m - 1);
  // binom(m-1, k) (-1)^k / (m-1)!
  std::vector<double> scale(static_cast<std::size_t>(m));
  double b = 1.0;
  for (int k = 0; k < m; ++k) {
    scale[k] = ((k % 2 == 0) ? b : -b) / fm1;
    b = b * (m - 1 - k) / (k + 1);
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < cell.hi || alpha[static_cast<Eigen::Index>(i)] == 0.0) continue;
    const double d = t[i] - cell.lo;
    const double a = alpha[static_cast<Eigen::Index>(i)];
    double pw = 1.0;  // d^{m-1-k}, filled from k = m-1 downwards
    for (int k = m - 1; k >= 0; --k) {
      coeffs[k] += a * scale[k] * pw;
      pw *= d;
    }
  }
}

/// Visits the Gauss-Legendre nodes of every piece of [0, upper] on which the
/// truncated representer sum w is nonzero (chi != 0 and chi * g > 0). Cells
/// are split at the real roots of g so each piece carries a single sign.
/// Calls visit(s, weight, w).
template <class Visit>
void for_each_support_node(const DualProblem& problem, const Eigen::VectorXd& alpha, double upper,
                           Visit&& visit) {
  const auto& rule = quad::unit_rule();
  std::vector<double> coeffs;
  std::vector<double> breaks;
  for (const auto& cell : problem.cells()) {
    if (cell.lo >= upper) break;
    if (cell.chi == 0) continue;
    local_polynomial(problem, alpha, cell, coeffs);
    const double width = std::min(cell.hi, upper) - cell.lo;
    if (width <= 0.0) continue;
    breaks.clear();
    breaks.push_back(0.0);
    for (double r : quad::real_roots_in(coeffs, 0.0, width)) breaks.push_back(r);
    breaks.push_back(width);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double a = breaks[k];
      const double h = breaks[k + 1] - a;
      if (h <= 0.0) continue;
      const double mid = quad::polyval(coeffs, a + 0.5 * h);
      if (cell.chi * mid <= 0.0) continue;
      for (int q = 0; q < quad::UnitRule::kPoints; ++q) {
        const double u = a + h * rule.nodes[q];
        const double g = quad::polyval(coeffs, u);
        // Nodes sit strictly inside a single-signed piece; a rounding-level
        // sign flip next to a root contributes nothing.
        if (cell.chi * g <= 0.0) continue;
        visit(cell.lo + u, h * rule.weights[q], g);
      }
    }
  }
}

}  // namespace shapespline::detail
