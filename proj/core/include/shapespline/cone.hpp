#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shapespline {

/// Piecewise ell-convexity pattern on [0,1]: K ordered change points split the
/// interval into K+1 pieces on which orientation * (-1)^k * f^(ell) >= 0.
///
/// Points are sorted on construction and may repeat; a repeated pair forms an
/// empty interval, so a config with x_k == x_{k+1} describes the same cone as
/// the config with both points removed.
class ChangePointConfig {
 public:
  ChangePointConfig(int ell, std::vector<double> points, int orientation);

  int ell() const noexcept { return ell_; }
  int orientation() const noexcept { return orientation_; }
  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

  /// Sign required on the k-th open interval (k = 0 is [0, x_1)).
  int interval_sign(std::size_t k) const noexcept {
    return (k % 2 == 0) ? orientation_ : -orientation_;
  }

  ChangePointConfig with_orientation(int orientation) const;

 private:
  int ell_;
  std::vector<double> points_;
  int orientation_;
};

/// Sign pattern chi(t) in {-1, 0, +1}; zero exactly at change points.
/// Throws DomainError for t outside [0,1].
int chi(const ChangePointConfig& config, double t);

/// True iff chi(s_j) * deriv[j] >= -tol at every grid node s_j.
bool is_feasible(const ChangePointConfig& config, std::span<const double> grid,
                 std::span<const double> deriv, double tol);

/// Membership in the negative polar cone for ell == m: zero boundary values
/// g^(j)(0), j < m, and chi * g^(m) <= tol on the grid. The number of boundary
/// values is taken as m. Throws UnsupportedCase when config.ell() != m.
bool polar_member_ellm(const ChangePointConfig& config, std::span<const double> grid,
                       std::span<const double> deriv_m, std::span<const double> boundary_values,
                       double tol);

}  // namespace shapespline
