#include "shapespline/box_qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace shapespline {

namespace {

enum class BoundState { Free, Lower, Upper };

}  // namespace

BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi) {
  const Eigen::Index n = g.size();
  const Eigen::Index me = A.rows();
  BoxQpResult out;
  out.x = Eigen::VectorXd::Zero(n);
  out.equality_multipliers = Eigen::VectorXd::Zero(me);

  // Start with every bound that touches x = 0 in the working set; the first
  // multiplier check releases the ones that should not be there.
  std::vector<BoundState> state(n, BoundState::Free);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lo[i] == 0.0) state[i] = BoundState::Lower;
    else if (hi[i] == 0.0) state[i] = BoundState::Upper;
  }

  const int max_iter = static_cast<int>(10 * (n + me) + 50);
  const double scale = 1.0 + H.cwiseAbs().maxCoeff() + g.cwiseAbs().maxCoeff();
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
      if (state[i] == BoundState::Free) free.push_back(i);
    const Eigen::Index nf = static_cast<Eigen::Index>(free.size());

    // Equality-constrained step on the free variables with the working set fixed.
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + me, nf + me);
    Eigen::VectorXd rhs(nf + me);
    const Eigen::VectorXd grad = H * out.x + g;
    for (Eigen::Index a = 0; a < nf; ++a) {
      for (Eigen::Index b = 0; b < nf; ++b) kkt(a, b) = H(free[a], free[b]);
      for (Eigen::Index r = 0; r < me; ++r) {
        kkt(a, nf + r) = A(r, free[a]);
        kkt(nf + r, a) = A(r, free[a]);
      }
      rhs[a] = -grad[free[a]];
    }
    rhs.tail(me) = -(A * out.x);
    Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < nf; ++a) step[free[a]] = sol[a];
    // sol's tail is the multiplier increment for the current point.
    const double step_norm = step.lpNorm<Eigen::Infinity>();

    if (step_norm <= 1e-14 * (1.0 + out.x.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set: check bound multipliers.
      const Eigen::VectorXd mu = sol.tail(me);
      out.equality_multipliers = mu;
      const Eigen::VectorXd lag = H * out.x + g + A.transpose() * mu;
      Eigen::Index worst = -1;
      double worst_val = 1e-13 * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        double viol = 0.0;
        if (lo[i] == hi[i]) continue;
        if (state[i] == BoundState::Lower) viol = -lag[i];
        else if (state[i] == BoundState::Upper) viol = lag[i];
        if (viol > worst_val) {
          worst_val = viol;
          worst = i;
        }
      }
      if (worst < 0) {
        out.converged = true;
        return out;
      }
      state[worst] = BoundState::Free;
      continue;
    }

    double t = 1.0;
    Eigen::Index blocking = -1;
    BoundState blocking_state = BoundState::Free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[i] != BoundState::Free || step[i] == 0.0) continue;
      if (step[i] < 0.0 && std::isfinite(lo[i])) {
        const double ti = (lo[i] - out.x[i]) / step[i];
        if (ti < t) {
          t = std::max(ti, 0.0);
          blocking = i;
          blocking_state = BoundState::Lower;
        }
      } else if (step[i] > 0.0 && std::isfinite(hi[i])) {
        const double ti = (hi[i] - out.x[i]) / step[i];
        if (ti < t) {
          t = std::max(ti, 0.0);
          blocking = i;
          blocking_state = BoundState::Upper;
        }
      }
    }
    out.x += t * step;
    if (blocking >= 0) {
      state[blocking] = blocking_state;
      out.x[blocking] = blocking_state == BoundState::Lower ? lo[blocking] : hi[blocking];
    }
  }
  return out;
}

}  // namespace shapespline
