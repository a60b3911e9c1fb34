#pragma once

#include <Eigen/Dense>

namespace shapespline {

struct BoxQpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd equality_multipliers;
  int iterations = 0;
  bool converged = false;
};

/// Primal active-set solver for
///
///   min 1/2 x'Hx + g'x   s.t.  A x = 0,  lo <= x <= hi
///
/// with H symmetric positive definite and lo <= 0 <= hi, so x = 0 is a
/// feasible start. Bounds may be infinite. Intended for the small dense
/// subproblems of the dual solver (tens of variables).
BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi);

}  // namespace shapespline
