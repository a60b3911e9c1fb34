#include "shapespline/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

namespace shapespline::quad {

namespace {

UnitRule build_unit_rule() {
  using Rule = boost::math::quadrature::gauss<double, UnitRule::kPoints>;
  // Boost stores the non-negative half of the symmetric rule.
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  UnitRule rule{};
  int k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      rule.nodes[k] = 0.5;
      rule.weights[k++] = 0.5 * w[i];
      continue;
    }
    rule.nodes[k] = 0.5 * (1.0 - x[i]);
    rule.weights[k++] = 0.5 * w[i];
    rule.nodes[k] = 0.5 * (1.0 + x[i]);
    rule.weights[k++] = 0.5 * w[i];
  }
  return rule;
}

std::vector<double> derivative(std::span<const double> c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

double bisect(std::span<const double> c, double a, double b, double fa) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double fm = polyval(c, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

const UnitRule& unit_rule() {
  static const UnitRule rule = build_unit_rule();
  return rule;
}

double polyval(std::span<const double> coeffs, double u) {
  double v = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) v = v * u + coeffs[k];
  return v;
}

std::vector<double> real_roots_in(std::span<const double> coeffs, double lo, double hi) {
  std::size_t deg = coeffs.size();
  while (deg > 0 && coeffs[deg - 1] == 0.0) --deg;
  if (deg <= 1) return {};
  const auto c = coeffs.first(deg);
  if (deg == 2) {
    const double r = -c[0] / c[1];
    if (r > lo && r < hi) return {r};
    return {};
  }
  // Between consecutive critical points the polynomial is monotone.
  const auto d = derivative(c);
  std::vector<double> breaks{lo};
  for (double r : real_roots_in(d, lo, hi)) breaks.push_back(r);
  breaks.push_back(hi);

  std::vector<double> roots;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = breaks[k + 1];
    const double fa = polyval(c, a);
    const double fb = polyval(c, b);
    if (fa == 0.0) {
      if (a > lo && a < hi && (roots.empty() || roots.back() != a)) roots.push_back(a);
      continue;
    }
    if ((fa < 0.0) != (fb < 0.0) && fb != 0.0) roots.push_back(bisect(c, a, b, fa));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace shapespline::quad
