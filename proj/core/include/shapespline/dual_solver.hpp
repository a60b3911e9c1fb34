#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "shapespline/cone.hpp"
#include "shapespline/loss.hpp"
#include "shapespline/rkhs.hpp"

namespace shapespline {

/// Point-evaluation observations y_i ~ f(t_i) with one loss per point.
struct Observations {
  std::vector<double> t;
  std::vector<double> y;
  std::vector<LossSpec> losses;

  std::size_t size() const noexcept { return t.size(); }
  /// Sizes agree, t_i in [0,1] and pairwise distinct. Throws SetupError/DomainError.
  void validate() const;
};

struct DualOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;
  double feas_tol = 1e-9;
};

/// Finite-dimensional dual of the shape-constrained smoothing problem for
/// ell == m. The quadrature grid is M+1 uniform nodes on [0,1] augmented with
/// every change point and every observation abscissa, so that within a cell
/// chi is constant and the representer sum g_alpha is a single polynomial.
class DualProblem {
 public:
  struct Cell {
    double lo;
    double hi;
    int chi;
  };

  DualProblem(Observations obs, SobolevParams params, double lambda, ChangePointConfig config,
              int grid_cells = 2048);

  const Observations& observations() const noexcept { return obs_; }
  const SobolevParams& params() const noexcept { return params_; }
  double lambda() const noexcept { return lambda_; }
  const ChangePointConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return obs_.size(); }
  int grid_cells() const noexcept { return grid_cells_; }

  /// Augmented quadrature nodes, ascending, from 0 to 1.
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const Cell> cells() const noexcept { return cells_; }

  /// m x N moment matrix T_{j,i} = t_i^j; feasible duals satisfy T alpha = 0.
  const Eigen::MatrixXd& moment_matrix() const noexcept { return moments_; }

  /// Box on alpha from the conjugate domains (+-inf for quadratic losses).
  const Eigen::VectorXd& lower_bounds() const noexcept { return lower_; }
  const Eigen::VectorXd& upper_bounds() const noexcept { return upper_; }

 private:
  Observations obs_;
  SobolevParams params_;
  double lambda_;
  ChangePointConfig config_;
  int grid_cells_;
  std::vector<double> nodes_;
  std::vector<Cell> cells_;
  Eigen::MatrixXd moments_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

struct DualSolution {
  Eigen::VectorXd alpha;
  double objective = 0.0;
  double projected_gradient_norm = 0.0;
  double moment_residual = 0.0;
  int iterations = 0;
};

/// m-th derivative of B alpha at s: sum_i alpha_i (t_i - s)_+^{m-1}/(m-1)!.
double g_alpha(const DualProblem& problem, const Eigen::VectorXd& alpha, double s);

/// Local truncation of g_alpha onto the part that agrees in sign with chi;
/// zero where chi * g < 0 and at change points.
double truncated_w(const DualProblem& problem, const Eigen::VectorXd& alpha, double s);

/// (lambda^{1-q}/q) int |w|^q + sum_i [rho_i*(alpha_i) - alpha_i y_i];
/// +inf when alpha leaves a Huber box.
double dual_objective(const DualProblem& problem, const Eigen::VectorXd& alpha);

Eigen::VectorXd dual_gradient(const DualProblem& problem, const Eigen::VectorXd& alpha);

/// Hessian of the dual objective. For q < 2 the weight |w|^{q-2} is floored
/// relative to max|w|, which keeps the matrix finite near zeros of w; for
/// alpha = 0 and q < 2 the curvature is unbounded and the result is only a
/// scaling hint.
Eigen::MatrixXd dual_hessian(const DualProblem& problem, const Eigen::VectorXd& alpha);

/// Euclidean projection onto {T alpha = 0} intersected with the Huber box.
Eigen::VectorXd project_feasible(const DualProblem& problem, const Eigen::VectorXd& v);

/// Norm of P(alpha - grad) - alpha with P the projection above.
double projected_gradient_norm(const DualProblem& problem, const Eigen::VectorXd& alpha,
                               const Eigen::VectorXd& grad);

/// Minimizes the dual by a projected Newton method (active-set QP steps with
/// Armijo backtracking). Starts at alpha = 0 unless a start is supplied; the
/// start is projected onto the feasible set first. Throws ConvergenceError with
/// the best iterate when grad_tol is not reached within max_iter.
DualSolution solve_dual(const DualProblem& problem, const DualOptions& opts = {},
                        const std::optional<Eigen::VectorXd>& start = std::nullopt);

}  // namespace shapespline
