#pragma once

#include <optional>
#include <span>
#include <vector>

#include "shapespline/cone.hpp"
#include "shapespline/dual_solver.hpp"

namespace shapespline {

/// Brute-force discretization of the primal problem on a uniform grid
/// s_j = j/M. The unknown is f at the nodes; the penalty uses forward
/// differences D^m f = Delta^m f / h^m, and the cone constraint is imposed on
/// D^ell f with chi taken at the centre of each difference stencil.
///
/// Internally the solver works with the equivalent variables
/// (f^(k)(0)-type polynomial coefficients, D^m f), which keeps the Newton
/// systems well conditioned for m up to 3 at M in the thousands.
class DiscretePrimal {
 public:
  /// Observation abscissae are snapped to the nearest grid node; the largest
  /// displacement is reported by snap_error().
  DiscretePrimal(Observations obs, int m, double p, double lambda, int grid_cells);

  const Observations& observations() const noexcept { return obs_; }
  int m() const noexcept { return m_; }
  double p() const noexcept { return p_; }
  double lambda() const noexcept { return lambda_; }
  int grid_cells() const noexcept { return grid_cells_; }
  double spacing() const noexcept { return 1.0 / grid_cells_; }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const int> data_index() const noexcept { return index_; }
  double snap_error() const noexcept { return snap_error_; }

 private:
  Observations obs_;
  int m_;
  double p_;
  double lambda_;
  int grid_cells_;
  std::vector<double> nodes_;
  std::vector<int> index_;
  double snap_error_ = 0.0;
};

struct OracleOptions {
  double feas_tol = 1e-6;
  /// Newton stops at a level when half the Newton decrement falls below
  /// opt_tol * |objective|.
  double opt_tol = 1e-14;
  int max_newton = 200;
  int max_levels = 30;
  /// Permit p outside [1.2, 4].
  bool allow_any_p = false;
  /// Starting values of D^m f (length M - m + 1); zero when absent.
  std::optional<std::vector<double>> initial_deriv;
};

struct PrimalSolution {
  std::vector<double> f;      ///< values at the grid nodes
  std::vector<double> deriv;  ///< D^m f, length M - m + 1
  double objective = 0.0;     ///< discrete primal objective without the hinge term
  double max_violation = 0.0; ///< max_j max(0, -chi_j (D^ell f)_j)
  double penalty_weight = 0.0;
  int newton_iterations = 0;
};

/// (lambda/p) h sum_j |(D^m f)_j|^p + sum_i rho_i(f(t_i) - y_i).
double primal_objective(const DiscretePrimal& dp, std::span<const double> f);

/// Forward differences (D^m f)_j for j = 0 .. M - m.
std::vector<double> forward_difference(const DiscretePrimal& dp, std::span<const double> f, int order);

/// Minimizes the discrete primal subject to chi (D^ell f) >= 0 (no constraint
/// when config is null) by Newton's method on a quadratic hinge penalty whose
/// weight grows tenfold until the violation is below feas_tol.
PrimalSolution solve_primal(const DiscretePrimal& dp, const ChangePointConfig* config,
                            const OracleOptions& opts = {});

/// Largest discrete residual of lambda d^m[|f^(m)|^{p-2} f^(m)] = 0 over stencils
/// lying inside inactive regions and away from the data nodes, relative to
/// max |f^(m)|^{p-1}. Zero for a polynomial fit of degree < m.
double euler_lagrange_residual(const DiscretePrimal& dp, const ChangePointConfig* config,
                               const PrimalSolution& solution, double activity_threshold = 1e-6);

}  // namespace shapespline
