#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "shapespline/dual_solver.hpp"

namespace shapespline {

/// f^(m)(s) from the dual: sign(w) (|w|/lambda)^{q-1} with w the truncated
/// representer sum; zero wherever the cone constraint is active.
double recover_deriv(const DualProblem& problem, const Eigen::VectorXd& alpha, double s);

/// int_0^{t_i} (t_i - s)^{m-1}/(m-1)! f^(m)(s) ds for every observation, with
/// f^(m) recovered from alpha and integrated piecewise by Gauss-Legendre.
Eigen::VectorXd representer_integrals(const DualProblem& problem, const Eigen::VectorXd& alpha);

struct PolynomialPart {
  Eigen::VectorXd a;  ///< a_j = f^(j)(0), j < m
  double residual_norm = 0.0;
};

/// Least-squares solve of sum_j a_j P_j(t_i) = y_i - rho_i*'(alpha_i) - int k_i f^(m)
/// over the observations whose dual component is interior to its domain.
/// Throws SetupError if the retained rows do not determine a.
PolynomialPart recover_polynomial(const DualProblem& problem, const Eigen::VectorXd& alpha);

/// Primal spline recovered from a dual optimum. Evaluation integrates the
/// exact recovered f^(m); the gridded copy is kept for output and plotting.
class SplineEstimate {
 public:
  SplineEstimate(std::shared_ptr<const DualProblem> problem, Eigen::VectorXd alpha);

  const DualProblem& problem() const noexcept { return *problem_; }
  std::shared_ptr<const DualProblem> problem_ptr() const noexcept { return problem_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  const Eigen::VectorXd& coefficients() const noexcept { return poly_.a; }
  double polynomial_residual() const noexcept { return poly_.residual_norm; }

  std::span<const double> grid() const noexcept { return problem_->nodes(); }
  std::span<const double> deriv_grid() const noexcept { return deriv_grid_; }
  std::span<const double> fitted() const noexcept { return fitted_; }

  /// f_hat(t); throws DomainError outside [0,1].
  double evaluate(double t) const;
  /// f_hat^(m)(s) from the dual closure.
  double deriv_m(double s) const;

  /// (lambda/p) int |f^(m)|^p + sum_i rho_i(y_i - f(t_i)).
  double primal_objective() const;

 private:
  std::shared_ptr<const DualProblem> problem_;
  Eigen::VectorXd alpha_;
  PolynomialPart poly_;
  std::vector<double> deriv_grid_;
  std::vector<double> fitted_;
};

struct KktReport {
  double multiplier_residual = 0.0;  ///< max_i |rho_i'(y_i - f(t_i)) - alpha_i|
  double residual_residual = 0.0;    ///< max_i dist(y_i - f(t_i), d rho_i*(alpha_i))
  double cone_violation = 0.0;       ///< max over nodes of max(0, -chi f^(m))
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;                  ///< primal_value + dual_value
};

KktReport kkt_report(const SplineEstimate& estimate);

}  // namespace shapespline
