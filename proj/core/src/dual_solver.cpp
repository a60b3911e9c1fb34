#include "shapespline/dual_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "shapespline/box_qp.hpp"
#include "shapespline/detail/support.hpp"
#include "shapespline/errors.hpp"

namespace shapespline {

void Observations::validate() const {
  if (y.size() != t.size() || losses.size() != t.size())
    throw SetupError("observations: t, y and losses must have equal length");
  std::vector<double> sorted = t;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i] >= 0.0 && sorted[i] <= 1.0)) throw DomainError("observation abscissa outside [0,1]");
    if (i > 0 && sorted[i] == sorted[i - 1]) throw SetupError("duplicate observation abscissa");
  }
  for (double v : y)
    if (!std::isfinite(v)) throw SetupError("non-finite observation value");
}

DualProblem::DualProblem(Observations obs, SobolevParams params, double lambda,
                         ChangePointConfig config, int grid_cells)
    : obs_(std::move(obs)),
      params_(params),
      lambda_(lambda),
      config_(std::move(config)),
      grid_cells_(grid_cells) {
  obs_.validate();
  const int m = params_.m;
  const auto n = static_cast<Eigen::Index>(obs_.size());
  if (!(lambda_ > 0.0)) throw SetupError("smoothing parameter lambda must be positive");
  if (config_.ell() != m)
    throw UnsupportedCase("the finite-dimensional dual is only available for ell == m");
  if (grid_cells_ < 1) throw SetupError("grid must have at least one cell");
  if (n < 2) throw SetupError("at least two observations are required");
  if (n < m) throw SetupError("need N >= m observations to separate polynomials of degree m-1");

  moments_.resize(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pw = 1.0;
    for (int j = 0; j < m; ++j) {
      moments_(j, i) = pw;
      pw *= obs_.t[static_cast<std::size_t>(i)];
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(moments_);
  lu.setThreshold(1e-12);
  if (lu.rank() < m)
    throw SetupError("observation abscissae do not separate polynomials of degree m-1");

  std::set<double> nodes;
  for (int j = 0; j <= grid_cells_; ++j) nodes.insert(static_cast<double>(j) / grid_cells_);
  for (double x : config_.points()) nodes.insert(x);
  for (double ti : obs_.t) nodes.insert(ti);
  nodes_.assign(nodes.begin(), nodes.end());
  for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
    const double lo = nodes_[k];
    const double hi = nodes_[k + 1];
    cells_.push_back(Cell{lo, hi, chi(config_, 0.5 * (lo + hi))});
  }

  lower_.resize(n);
  upper_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double b = obs_.losses[static_cast<std::size_t>(i)].conj_bound();
    lower_[i] = -b;
    upper_[i] = b;
  }
}

double g_alpha(const DualProblem& problem, const Eigen::VectorXd& alpha, double s) {
  const auto& t = problem.observations().t;
  double g = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    g += alpha[static_cast<Eigen::Index>(i)] * representer_deriv(problem.params().m, t[i], s);
  return g;
}

double truncated_w(const DualProblem& problem, const Eigen::VectorXd& alpha, double s) {
  const int c = chi(problem.config(), s);
  if (c == 0) return 0.0;
  const double g = g_alpha(problem, alpha, s);
  return c * g >= 0.0 ? g : 0.0;
}

namespace {

bool inside_box(const DualProblem& problem, const Eigen::VectorXd& alpha) {
  return (alpha.array() >= problem.lower_bounds().array()).all() &&
         (alpha.array() <= problem.upper_bounds().array()).all();
}

void fill_representers(const DualProblem& problem, double s, Eigen::VectorXd& k) {
  const auto& t = problem.observations().t;
  for (std::size_t i = 0; i < t.size(); ++i)
    k[static_cast<Eigen::Index>(i)] = representer_deriv(problem.params().m, t[i], s);
}

}  // namespace

double dual_objective(const DualProblem& problem, const Eigen::VectorXd& alpha) {
  if (!inside_box(problem, alpha)) return std::numeric_limits<double>::infinity();
  const double q = problem.params().q;
  double integral = 0.0;
  detail::for_each_support_node(problem, alpha, 1.0, [&](double, double weight, double w) {
    integral += weight * std::pow(std::abs(w), q);
  });
  double value = std::pow(problem.lambda(), 1.0 - q) / q * integral;
  const auto& obs = problem.observations();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double a = alpha[static_cast<Eigen::Index>(i)];
    value += rho_conj(obs.losses[i], a) - a * obs.y[i];
  }
  return value;
}

Eigen::VectorXd dual_gradient(const DualProblem& problem, const Eigen::VectorXd& alpha) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  const double q = problem.params().q;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd k(n);
  detail::for_each_support_node(problem, alpha, 1.0, [&](double s, double weight, double w) {
    fill_representers(problem, s, k);
    const double f = std::copysign(std::pow(std::abs(w), q - 1.0), w);
    grad.noalias() += (weight * f) * k;
  });
  grad *= std::pow(problem.lambda(), 1.0 - q);
  const auto& obs = problem.observations();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    grad[i] += rho_conj_prime(obs.losses[ui], alpha[i]) - obs.y[ui];
  }
  return grad;
}

Eigen::MatrixXd dual_hessian(const DualProblem& problem, const Eigen::VectorXd& alpha) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  const double q = problem.params().q;
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);

  double floor = 0.0;
  if (q < 2.0) {
    double wmax = 0.0;
    detail::for_each_support_node(problem, alpha, 1.0,
                                  [&](double, double, double w) { wmax = std::max(wmax, std::abs(w)); });
    floor = wmax > 0.0 ? 1e-6 * wmax : 1e-12;
  }

  Eigen::VectorXd k(n);
  detail::for_each_support_node(problem, alpha, 1.0, [&](double s, double weight, double w) {
    fill_representers(problem, s, k);
    const double c = weight * std::pow(std::max(std::abs(w), floor), q - 2.0);
    hess.selfadjointView<Eigen::Lower>().rankUpdate(k, c);
  });
  hess = hess.selfadjointView<Eigen::Lower>();
  hess *= (q - 1.0) * std::pow(problem.lambda(), 1.0 - q);
  const auto& obs = problem.observations();
  for (Eigen::Index i = 0; i < n; ++i)
    hess(i, i) += rho_conj_second(obs.losses[static_cast<std::size_t>(i)], alpha[i]);
  return hess;
}

Eigen::VectorXd project_feasible(const DualProblem& problem, const Eigen::VectorXd& v) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  const auto res = solve_box_qp(Eigen::MatrixXd::Identity(n, n), -v, problem.moment_matrix(),
                                problem.lower_bounds(), problem.upper_bounds());
  return res.x;
}

double projected_gradient_norm(const DualProblem& problem, const Eigen::VectorXd& alpha,
                               const Eigen::VectorXd& grad) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  const auto res = solve_box_qp(Eigen::MatrixXd::Identity(n, n), grad, problem.moment_matrix(),
                                problem.lower_bounds() - alpha, problem.upper_bounds() - alpha);
  return res.x.norm();
}

namespace {

Eigen::VectorXd clamp_to_box(const DualProblem& problem, Eigen::VectorXd alpha) {
  return alpha.cwiseMax(problem.lower_bounds()).cwiseMin(problem.upper_bounds());
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

DualSolution solve_dual(const DualProblem& problem, const DualOptions& opts,
                        const std::optional<Eigen::VectorXd>& start) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  const Eigen::MatrixXd& T = problem.moment_matrix();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  if (start) {
    if (start->size() != n) throw SetupError("solve_dual: start has wrong length");
    alpha = clamp_to_box(problem, project_feasible(problem, *start));
  }

  double value = dual_objective(problem, alpha);
  DualSolution best{alpha, value, std::numeric_limits<double>::infinity(), 0.0, 0};

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    const Eigen::VectorXd grad = dual_gradient(problem, alpha);
    const Eigen::VectorXd lo = problem.lower_bounds() - alpha;
    const Eigen::VectorXd hi = problem.upper_bounds() - alpha;
    const Eigen::VectorXd pg = solve_box_qp(eye, grad, T, lo, hi).x;
    const double pg_norm = pg.norm();
    if (pg_norm < best.projected_gradient_norm) {
      best.alpha = alpha;
      best.objective = value;
      best.projected_gradient_norm = pg_norm;
      best.iterations = iter;
    }
    if (pg_norm <= opts.grad_tol) {
      best.moment_residual = (T * alpha).lpNorm<Eigen::Infinity>();
      return best;
    }
    if (iter == opts.max_iter) break;

    Eigen::MatrixXd hess = dual_hessian(problem, alpha);
    hess.diagonal().array() += 1e-12 * hess.diagonal().cwiseAbs().maxCoeff();
    Eigen::VectorXd dir = solve_box_qp(hess, grad, T, lo, hi).x;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      dir = pg;
      slope = grad.dot(dir);
    }

    auto line_search = [&](const Eigen::VectorXd& d, double sl, Eigen::VectorXd& next,
                           double& next_value) {
      double step = 1.0;
      for (int k = 0; k < 60; ++k, step *= 0.5) {
        next = clamp_to_box(problem, alpha + step * d);
        next_value = dual_objective(problem, next);
        if (next_value <= value + 1e-4 * step * sl) return true;
      }
      return false;
    };

    Eigen::VectorXd next;
    double next_value = value;
    bool ok = line_search(dir, slope, next, next_value);
    if (!ok && dir != pg) ok = line_search(pg, grad.dot(pg), next, next_value);
    if (!ok) {
      // Rounding-level stagnation: take the Newton point if it does not
      // increase the objective beyond roundoff, otherwise give up.
      next = clamp_to_box(problem, alpha + dir);
      next_value = dual_objective(problem, next);
      if (!(next_value <= value + 1e-14 * (1.0 + std::abs(value)))) break;
    }
    alpha = next;
    value = next_value;
  }

  throw ConvergenceError("dual solver did not reach projected-gradient tolerance " +
                             std::to_string(opts.grad_tol) + " (best " +
                             std::to_string(best.projected_gradient_norm) + ")",
                         to_std(best.alpha), best.objective);
}

}  // namespace shapespline
