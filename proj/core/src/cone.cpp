#include "shapespline/cone.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shapespline/errors.hpp"

namespace shapespline {

ChangePointConfig::ChangePointConfig(int ell, std::vector<double> points, int orientation)
    : ell_(ell), points_(std::move(points)), orientation_(orientation) {
  if (ell_ < 1) throw SetupError("convexity order ell must be >= 1");
  if (orientation_ != 1 && orientation_ != -1)
    throw SetupError("orientation must be +1 or -1");
  for (double x : points_) {
    if (!(x >= 0.0 && x <= 1.0))
      throw DomainError("change point " + std::to_string(x) + " outside [0,1]");
  }
  std::sort(points_.begin(), points_.end());
}

ChangePointConfig ChangePointConfig::with_orientation(int orientation) const {
  return ChangePointConfig(ell_, points_, orientation);
}

int chi(const ChangePointConfig& config, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("chi: t outside [0,1]");
  const auto pts = config.points();
  const auto lower = std::lower_bound(pts.begin(), pts.end(), t);
  if (lower != pts.end() && *lower == t) return 0;
  // Duplicated points below t both count, leaving the parity unchanged.
  return config.interval_sign(static_cast<std::size_t>(lower - pts.begin()));
}

bool is_feasible(const ChangePointConfig& config, std::span<const double> grid,
                 std::span<const double> deriv, double tol) {
  if (grid.size() != deriv.size()) throw SetupError("is_feasible: grid/sample size mismatch");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (chi(config, grid[j]) * deriv[j] < -tol) return false;
  }
  return true;
}

bool polar_member_ellm(const ChangePointConfig& config, std::span<const double> grid,
                       std::span<const double> deriv_m, std::span<const double> boundary_values,
                       double tol) {
  const int m = static_cast<int>(boundary_values.size());
  if (config.ell() != m)
    throw UnsupportedCase("polar cone membership is only available for ell == m");
  if (grid.size() != deriv_m.size()) throw SetupError("polar_member_ellm: size mismatch");
  for (double b : boundary_values) {
    if (std::abs(b) > tol) return false;
  }
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (chi(config, grid[j]) * deriv_m[j] > tol) return false;
  }
  return true;
}

}  // namespace shapespline
