#include "shapespline/recovery.hpp"

#include <algorithm>
#include <cmath>

#include "shapespline/detail/support.hpp"
#include "shapespline/errors.hpp"

namespace shapespline {

namespace {

double deriv_from_w(double w, double lambda, double q) {
  if (w == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(w) / lambda, q - 1.0), w);
}

bool on_box_boundary(const LossSpec& spec, double alpha) {
  const double b = spec.conj_bound();
  return std::isfinite(b) && std::abs(alpha) >= b * (1.0 - 1e-12);
}

}  // namespace

double recover_deriv(const DualProblem& problem, const Eigen::VectorXd& alpha, double s) {
  return deriv_from_w(truncated_w(problem, alpha, s), problem.lambda(), problem.params().q);
}

Eigen::VectorXd representer_integrals(const DualProblem& problem, const Eigen::VectorXd& alpha) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  const int m = problem.params().m;
  const auto& t = problem.observations().t;
  const double lambda = problem.lambda();
  const double q = problem.params().q;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  detail::for_each_support_node(problem, alpha, 1.0, [&](double s, double weight, double w) {
    const double fm = weight * deriv_from_w(w, lambda, q);
    for (Eigen::Index i = 0; i < n; ++i)
      out[i] += fm * representer_deriv(m, t[static_cast<std::size_t>(i)], s);
  });
  return out;
}

PolynomialPart recover_polynomial(const DualProblem& problem, const Eigen::VectorXd& alpha) {
  const auto& obs = problem.observations();
  const int m = problem.params().m;
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::VectorXd integrals = representer_integrals(problem, alpha);

  auto build = [&](bool drop_boundary, Eigen::MatrixXd& X, Eigen::VectorXd& rhs) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (drop_boundary && on_box_boundary(obs.losses[static_cast<std::size_t>(i)], alpha[i])) continue;
      rows.push_back(i);
    }
    X.resize(static_cast<Eigen::Index>(rows.size()), m);
    rhs.resize(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(rows.size()); ++r) {
      const auto i = rows[static_cast<std::size_t>(r)];
      const auto ui = static_cast<std::size_t>(i);
      for (int j = 0; j < m; ++j) X(r, j) = taylor_basis(j, obs.t[ui]);
      const double a = std::clamp(alpha[i], problem.lower_bounds()[i], problem.upper_bounds()[i]);
      rhs[r] = obs.y[ui] - rho_conj_prime(obs.losses[ui], a) - integrals[i];
    }
  };

  Eigen::MatrixXd X;
  Eigen::VectorXd rhs;
  build(true, X, rhs);
  auto qr = X.colPivHouseholderQr();
  qr.setThreshold(1e-12);
  if (X.rows() < m || qr.rank() < m) {
    build(false, X, rhs);
    qr = X.colPivHouseholderQr();
    qr.setThreshold(1e-12);
    if (qr.rank() < m) throw SetupError("recover_polynomial: design does not determine the polynomial part");
  }
  PolynomialPart out;
  out.a = qr.solve(rhs);
  out.residual_norm = (X * out.a - rhs).norm();
  return out;
}

SplineEstimate::SplineEstimate(std::shared_ptr<const DualProblem> problem, Eigen::VectorXd alpha)
    : problem_(std::move(problem)), alpha_(std::move(alpha)) {
  poly_ = recover_polynomial(*problem_, alpha_);
  const auto nodes = problem_->nodes();
  deriv_grid_.resize(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) deriv_grid_[k] = deriv_m(nodes[k]);

  const auto& obs = problem_->observations();
  const Eigen::VectorXd integrals = representer_integrals(*problem_, alpha_);
  fitted_.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    double v = integrals[static_cast<Eigen::Index>(i)];
    for (int j = 0; j < problem_->params().m; ++j) v += poly_.a[j] * taylor_basis(j, obs.t[i]);
    fitted_[i] = v;
  }
}

double SplineEstimate::deriv_m(double s) const { return recover_deriv(*problem_, alpha_, s); }

double SplineEstimate::evaluate(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("evaluate: t outside [0,1]");
  const int m = problem_->params().m;
  const double lambda = problem_->lambda();
  const double q = problem_->params().q;
  const double fm1 = factorial(m - 1);
  double value = 0.0;
  for (int j = 0; j < m; ++j) value += poly_.a[j] * taylor_basis(j, t);
  detail::for_each_support_node(*problem_, alpha_, t, [&](double s, double weight, double w) {
    value += weight * std::pow(t - s, m - 1) / fm1 * deriv_from_w(w, lambda, q);
  });
  return value;
}

double SplineEstimate::primal_objective() const {
  const double lambda = problem_->lambda();
  const double q = problem_->params().q;
  const double p = problem_->params().p;
  double integral = 0.0;
  detail::for_each_support_node(*problem_, alpha_, 1.0, [&](double, double weight, double w) {
    integral += weight * std::pow(std::abs(w) / lambda, q);
  });
  double value = lambda / p * integral;
  const auto& obs = problem_->observations();
  for (std::size_t i = 0; i < obs.size(); ++i) value += rho(obs.losses[i], obs.y[i] - fitted_[i]);
  return value;
}

KktReport kkt_report(const SplineEstimate& estimate) {
  const auto& problem = estimate.problem();
  const auto& obs = problem.observations();
  const auto& alpha = estimate.alpha();
  KktReport r;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto& spec = obs.losses[i];
    const double resid = obs.y[i] - estimate.fitted()[i];
    r.multiplier_residual = std::max(r.multiplier_residual, std::abs(rho_prime(spec, resid) - alpha[ii]));
    double dist;
    if (on_box_boundary(spec, alpha[ii])) {
      // Subdifferential of the conjugate at the box edge is a half-line beyond +-c.
      dist = alpha[ii] > 0.0 ? std::max(0.0, spec.cutoff - resid) : std::max(0.0, resid + spec.cutoff);
    } else {
      dist = std::abs(resid - rho_conj_prime(spec, alpha[ii]));
    }
    r.residual_residual = std::max(r.residual_residual, dist);
  }
  const auto nodes = estimate.grid();
  const auto fm = estimate.deriv_grid();
  for (std::size_t k = 0; k < nodes.size(); ++k)
    r.cone_violation = std::max(r.cone_violation, std::max(0.0, -chi(problem.config(), nodes[k]) * fm[k]));
  r.primal_value = estimate.primal_objective();
  r.dual_value = dual_objective(problem, alpha);
  r.gap = r.primal_value + r.dual_value;
  return r;
}

}  // namespace shapespline
