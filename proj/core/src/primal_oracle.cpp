#include "shapespline/primal_oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shapespline/errors.hpp"
#include "shapespline/rkhs.hpp"

namespace shapespline {

DiscretePrimal::DiscretePrimal(Observations obs, int m, double p, double lambda, int grid_cells)
    : obs_(std::move(obs)), m_(m), p_(p), lambda_(lambda), grid_cells_(grid_cells) {
  obs_.validate();
  if (m_ < 1) throw SetupError("penalty order m must be >= 1");
  if (!(p_ > 1.0) || !std::isfinite(p_)) throw SetupError("exponent p must lie in the open interval (1, inf)");
  if (!(lambda_ > 0.0)) throw SetupError("smoothing parameter lambda must be positive");
  if (grid_cells_ < m_ + 1) throw SetupError("oracle grid too coarse for the derivative order");
  nodes_.resize(static_cast<std::size_t>(grid_cells_) + 1);
  for (int j = 0; j <= grid_cells_; ++j) nodes_[j] = static_cast<double>(j) / grid_cells_;
  index_.resize(obs_.size());
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const int k = static_cast<int>(std::lround(obs_.t[i] * grid_cells_));
    index_[i] = k;
    snap_error_ = std::max(snap_error_, std::abs(obs_.t[i] - nodes_[k]));
  }
  std::vector<int> sorted = index_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw SetupError("two observations snap to the same oracle grid node; refine the grid");
}

std::vector<double> forward_difference(const DiscretePrimal& dp, std::span<const double> f, int order) {
  const int M = dp.grid_cells();
  if (static_cast<int>(f.size()) != M + 1) throw SetupError("forward_difference: f must have M+1 entries");
  std::vector<double> d(f.begin(), f.end());
  for (int k = 0; k < order; ++k) {
    for (std::size_t j = 0; j + 1 < d.size(); ++j) d[j] = d[j + 1] - d[j];
    d.pop_back();
  }
  const double scale = std::pow(dp.spacing(), -order);
  for (double& v : d) v *= scale;
  return d;
}

double primal_objective(const DiscretePrimal& dp, std::span<const double> f) {
  const auto u = forward_difference(dp, f, dp.m());
  double pen = 0.0;
  for (double v : u) pen += std::pow(std::abs(v), dp.p());
  double value = dp.lambda() / dp.p() * dp.spacing() * pen;
  const auto& obs = dp.observations();
  for (std::size_t i = 0; i < obs.size(); ++i)
    value += rho(obs.losses[i], f[static_cast<std::size_t>(dp.data_index()[i])] - obs.y[i]);
  return value;
}

namespace {

double binom(long a, int r) {
  if (r < 0 || a < r) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= r; ++i) b = b * static_cast<double>(a - r + i) / i;
  return b;
}

/// Linear model of the oracle in z = (c, u): f_n = sum_k c_k s_n^k/k! +
/// h^m sum_j C(n-1-j, m-1) u_j, so that (D^m f)_j = u_j exactly.
class OracleModel {
 public:
  OracleModel(const DiscretePrimal& dp, const ChangePointConfig* config, double p)
      : dp_(dp), p_(p), m_(dp.m()), M_(dp.grid_cells()), h_(dp.spacing()) {
    nu_ = M_ - m_ + 1;
    nz_ = m_ + nu_;
    const auto& obs = dp.observations();
    const auto n = static_cast<Eigen::Index>(obs.size());
    data_.setZero(n, nz_);
    const double hm = std::pow(h_, m_);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int idx = dp.data_index()[static_cast<std::size_t>(i)];
      for (int k = 0; k < m_; ++k) data_(i, k) = taylor_basis(k, dp.nodes()[idx]);
      for (int j = 0; j <= idx - m_; ++j) data_(i, m_ + j) = hm * binom(idx - 1 - j, m_ - 1);
    }
    if (config == nullptr) return;
    ell_ = config->ell();
    if (ell_ > m_) throw SetupError("convexity order ell must not exceed m");
    if (ell_ == m_) {
      sign_u_.resize(nu_);
      for (int j = 0; j < nu_; ++j) sign_u_[j] = chi(*config, std::min(1.0, dp.nodes()[j] + 0.5 * m_ * h_));
      return;
    }
    // Rows of D^ell f for ell < m.
    const int rows = M_ - ell_ + 1;
    constraint_.setZero(rows, nz_);
    sign_rows_.resize(rows);
    const double hml = std::pow(h_, m_ - ell_);
    for (int r = 0; r < rows; ++r) {
      sign_rows_[r] = chi(*config, std::min(1.0, dp.nodes()[r] + 0.5 * ell_ * h_));
      for (int k = 0; k < m_; ++k) {
        // Delta^ell of s^k/k! at node r, divided by h^ell.
        double d = 0.0;
        for (int a = 0; a <= ell_; ++a) {
          const double sign = ((ell_ - a) % 2 == 0) ? 1.0 : -1.0;
          d += sign * binom(ell_, a) * taylor_basis(k, dp.nodes()[r + a]);
        }
        constraint_(r, k) = d / std::pow(h_, ell_);
      }
      for (int j = 0; j < nu_; ++j) {
        const long a = static_cast<long>(r) - 1 - j;
        if (a < m_ - 1 - ell_) break;
        constraint_(r, m_ + j) = hml * binom(a, m_ - 1 - ell_);
      }
    }
  }

  int nz() const { return nz_; }
  int nu() const { return nu_; }
  const Eigen::MatrixXd& data() const { return data_; }
  bool constrained_on_deriv() const { return !sign_u_.empty(); }
  bool constrained_on_rows() const { return constraint_.rows() > 0; }

  std::vector<double> values(const Eigen::VectorXd& z) const {
    std::vector<double> f(static_cast<std::size_t>(M_) + 1, 0.0);
    const double hm = std::pow(h_, m_);
    for (int j = 0; j < nu_; ++j) f[j] = hm * z[m_ + j];
    for (int pass = 0; pass < m_; ++pass) {
      double run = 0.0;
      for (double& v : f) {
        const double next = run + v;
        v = run;
        run = next;
      }
    }
    for (int n = 0; n <= M_; ++n)
      for (int k = 0; k < m_; ++k) f[n] += z[k] * taylor_basis(k, dp_.nodes()[n]);
    return f;
  }

  /// D^ell f under the constraint rows (or D^m f = u when ell == m).
  Eigen::VectorXd constrained_quantity(const Eigen::VectorXd& z) const {
    if (constrained_on_deriv()) return z.tail(nu_);
    if (constrained_on_rows()) return constraint_ * z;
    return {};
  }
  int sign(Eigen::Index r) const {
    return constrained_on_deriv() ? sign_u_[static_cast<std::size_t>(r)] : sign_rows_[static_cast<std::size_t>(r)];
  }

  double max_violation(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd d = constrained_quantity(z);
    double v = 0.0;
    for (Eigen::Index r = 0; r < d.size(); ++r) v = std::max(v, -sign(r) * d[r]);
    return std::max(v, 0.0);
  }

  double primal_value(const Eigen::VectorXd& z) const {
    double pen = 0.0;
    for (int j = 0; j < nu_; ++j) pen += std::pow(std::abs(z[m_ + j]), p_);
    double value = dp_.lambda() / p_ * h_ * pen;
    const Eigen::VectorXd fit = data_ * z;
    const auto& obs = dp_.observations();
    for (std::size_t i = 0; i < obs.size(); ++i)
      value += rho(obs.losses[i], fit[static_cast<Eigen::Index>(i)] - obs.y[i]);
    return value;
  }

  /// Smoothing |u|^p ~ (u^2 + delta^2)^{p/2} - delta^p for p < 2, where the
  /// exact curvature is unbounded at u = 0 and Newton oscillates across zero.
  void set_smoothing(double delta) { delta_ = delta; }

  double penalized_value(const Eigen::VectorXd& z, double mu) const {
    double value = primal_value(z);
    if (delta_ > 0.0) {
      double pen = 0.0;
      const double dp = std::pow(delta_, p_);
      for (int j = 0; j < nu_; ++j) {
        const double u = z[m_ + j];
        pen += std::pow(u * u + delta_ * delta_, 0.5 * p_) - dp - std::pow(std::abs(u), p_);
      }
      value += dp_.lambda() / p_ * h_ * pen;
    }
    const Eigen::VectorXd d = constrained_quantity(z);
    for (Eigen::Index r = 0; r < d.size(); ++r) {
      const double viol = std::max(0.0, -sign(r) * d[r]);
      value += mu * h_ * viol * viol;
    }
    return value;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& z, double mu) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nz_);
    const double lh = dp_.lambda() * h_;
    for (int j = 0; j < nu_; ++j) {
      const double u = z[m_ + j];
      g[m_ + j] = delta_ > 0.0 ? lh * u * std::pow(u * u + delta_ * delta_, 0.5 * p_ - 1.0)
                               : lh * std::copysign(std::pow(std::abs(u), p_ - 1.0), u);
    }
    const Eigen::VectorXd fit = data_ * z;
    const auto& obs = dp_.observations();
    Eigen::VectorXd dr(fit.size());
    for (Eigen::Index i = 0; i < fit.size(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      dr[i] = rho_prime(obs.losses[ui], fit[i] - obs.y[ui]);
    }
    g.noalias() += data_.transpose() * dr;
    const Eigen::VectorXd d = constrained_quantity(z);
    if (constrained_on_deriv()) {
      for (int j = 0; j < nu_; ++j) {
        const double viol = std::max(0.0, -sign(j) * d[j]);
        g[m_ + j] += -2.0 * mu * h_ * viol * sign(j);
      }
    } else if (constrained_on_rows()) {
      Eigen::VectorXd coeff = Eigen::VectorXd::Zero(d.size());
      for (Eigen::Index r = 0; r < d.size(); ++r) {
        const double viol = std::max(0.0, -sign(r) * d[r]);
        coeff[r] = -2.0 * mu * h_ * viol * sign(r);
      }
      g.noalias() += constraint_.transpose() * coeff;
    }
    return g;
  }

  /// Newton direction for the penalized objective. The Hessian is diagonal in
  /// u plus a low-rank part from the data rows (and active constraint rows
  /// when ell < m); the u block is inverted by Woodbury and the polynomial
  /// block by a Schur complement.
  Eigen::VectorXd newton_direction(const Eigen::VectorXd& z, const Eigen::VectorXd& g, double mu,
                                   double damping) const {
    const double lh = dp_.lambda() * h_;
    Eigen::VectorXd diag(nu_);
    double umax = 0.0;
    for (int j = 0; j < nu_; ++j) umax = std::max(umax, std::abs(z[m_ + j]));
    const double floor = std::max(1e-9 * umax, 1e-14);
    const double d2 = delta_ * delta_;
    for (int j = 0; j < nu_; ++j) {
      const double u = std::abs(z[m_ + j]);
      diag[j] = delta_ > 0.0 ? lh * std::pow(u * u + d2, 0.5 * p_ - 2.0) * ((p_ - 1.0) * u * u + d2)
                             : lh * (p_ - 1.0) * std::pow(p_ < 2.0 ? std::max(u, floor) : u, p_ - 2.0);
    }
    const Eigen::VectorXd d = constrained_quantity(z);
    if (constrained_on_deriv()) {
      for (int j = 0; j < nu_; ++j)
        if (sign(j) * d[j] < 0.0) diag[j] += 2.0 * mu * h_;
    }
    const double ridge = damping * (lh + diag.maxCoeff()) + 1e-300;
    diag.array() += ridge;

    // Weighted low-rank rows.
    const auto& obs = dp_.observations();
    const Eigen::VectorXd fit = data_ * z;
    std::vector<Eigen::Index> data_rows;
    std::vector<double> weights;
    for (Eigen::Index i = 0; i < fit.size(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double w = rho_second(obs.losses[ui], fit[i] - obs.y[ui]);
      if (w > 0.0) {
        data_rows.push_back(i);
        weights.push_back(w);
      }
    }
    std::vector<Eigen::Index> con_rows;
    if (constrained_on_rows()) {
      for (Eigen::Index r = 0; r < d.size(); ++r)
        if (sign(r) * d[r] < 0.0) con_rows.push_back(r);
    }
    const auto nr = static_cast<Eigen::Index>(data_rows.size() + con_rows.size());
    Eigen::MatrixXd R(nr, nz_);
    for (std::size_t k = 0; k < data_rows.size(); ++k)
      R.row(static_cast<Eigen::Index>(k)) = std::sqrt(weights[k]) * data_.row(data_rows[k]);
    for (std::size_t k = 0; k < con_rows.size(); ++k)
      R.row(static_cast<Eigen::Index>(data_rows.size() + k)) =
          std::sqrt(2.0 * mu * h_) * constraint_.row(con_rows[k]);

    const Eigen::MatrixXd Rc = R.leftCols(m_);
    const Eigen::MatrixXd Ru = R.rightCols(nu_);
    const Eigen::VectorXd dinv = diag.cwiseInverse();
    Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(nr, nr);
    cap.noalias() += Ru * dinv.asDiagonal() * Ru.transpose();
    const Eigen::LLT<Eigen::MatrixXd> cap_llt(cap);
    auto apply_sinv = [&](const Eigen::MatrixXd& V) -> Eigen::MatrixXd {
      const Eigen::MatrixXd X = dinv.asDiagonal() * V;
      const Eigen::MatrixXd Y = cap_llt.solve(Ru * X);
      return X - dinv.asDiagonal() * (Ru.transpose() * Y);
    };

    Eigen::MatrixXd Hcc = Rc.transpose() * Rc;
    Hcc.diagonal().array() += (damping + 1e-14) * (1.0 + Hcc.diagonal().maxCoeff());
    const Eigen::MatrixXd Huc = Ru.transpose() * Rc;
    Eigen::MatrixXd rhs(nu_, m_ + 1);
    rhs.col(0) = g.tail(nu_);
    rhs.rightCols(m_) = Huc;
    const Eigen::MatrixXd sol = apply_sinv(rhs);
    const Eigen::VectorXd sg = sol.col(0);
    const Eigen::MatrixXd sh = sol.rightCols(m_);
    const Eigen::MatrixXd schur = Hcc - Huc.transpose() * sh;
    const Eigen::VectorXd rc = -g.head(m_) + Huc.transpose() * sg;
    const Eigen::VectorXd dc = schur.ldlt().solve(rc);
    Eigen::VectorXd dz(nz_);
    dz.head(m_) = dc;
    dz.tail(nu_) = -sg - sh * dc;
    return dz;
  }

 private:
  const DiscretePrimal& dp_;
  double p_;
  int m_;
  int M_;
  double h_;
  int nu_ = 0;
  int nz_ = 0;
  int ell_ = 0;
  double delta_ = 0.0;
  Eigen::MatrixXd data_;
  std::vector<int> sign_u_;
  Eigen::MatrixXd constraint_;
  std::vector<int> sign_rows_;
};

struct LevelResult {
  int iterations = 0;
  bool converged = false;
};

LevelResult minimize_newton(const OracleModel& model, Eigen::VectorXd& z, double mu, const OracleOptions& opts) {
  LevelResult out;
  double value = model.penalized_value(z, mu);
  double damping = 1e-12;
  for (int it = 0; it < opts.max_newton; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd g = model.gradient(z, mu);
    const Eigen::VectorXd dz = model.newton_direction(z, g, mu, damping);
    const double decrement = -g.dot(dz);
    if (!(decrement > 0.0) || 0.5 * decrement <= opts.opt_tol * std::max(std::abs(value), 1e-16)) {
      out.converged = true;
      return out;
    }
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 50; ++k, step *= 0.5) {
      const Eigen::VectorXd trial = z + step * dz;
      const double tv = model.penalized_value(trial, mu);
      if (tv <= value - 1e-4 * step * decrement) {
        z = trial;
        value = tv;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (damping >= 1e6) {
        out.converged = 0.5 * decrement <= 1e3 * opts.opt_tol * std::max(std::abs(value), 1e-16);
        return out;
      }
      damping *= 100.0;
      continue;
    }
    damping = std::max(1e-12, damping * 0.1);
  }
  return out;
}

/// For p < 2, a continuation in the smoothing width: delta shrinks tenfold
/// from a tenth of the current derivative scale down to 1e-10 of it, which
/// perturbs the objective by at most lambda/p * delta^p.
LevelResult minimize_level(OracleModel& model, Eigen::VectorXd& z, double mu, const OracleOptions& opts, double p) {
  if (p >= 2.0) return minimize_newton(model, z, mu, opts);
  double scale = 0.0;
  for (Eigen::Index j = model.nz() - model.nu(); j < z.size(); ++j) scale = std::max(scale, std::abs(z[j]));
  if (scale == 0.0) scale = 1.0;
  LevelResult total;
  for (double delta = 0.1 * scale; delta >= 1e-10 * scale; delta *= 0.1) {
    model.set_smoothing(delta);
    const auto r = minimize_newton(model, z, mu, opts);
    total.iterations += r.iterations;
    total.converged = r.converged;
  }
  model.set_smoothing(1e-10 * scale);
  return total;
}

}  // namespace

PrimalSolution solve_primal(const DiscretePrimal& dp, const ChangePointConfig* config, const OracleOptions& opts) {
  const double p = dp.p();
  if (!opts.allow_any_p && (p < 1.2 || p > 4.0))
    throw SetupError("oracle refuses p outside [1.2, 4]; set allow_any_p to override");
  const std::size_t K = config ? config->size() : 0;
  if (dp.grid_cells() < 8 * static_cast<int>(dp.observations().size() + K + static_cast<std::size_t>(dp.m())))
    throw SetupError("oracle grid too coarse: need M >= 8 (N + K + m)");

  const int m = dp.m();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dp.grid_cells() + 1);
  if (opts.initial_deriv) {
    if (static_cast<int>(opts.initial_deriv->size()) != dp.grid_cells() - m + 1)
      throw SetupError("initial_deriv must have M - m + 1 entries");
    for (std::size_t j = 0; j < opts.initial_deriv->size(); ++j) z[m + static_cast<Eigen::Index>(j)] = (*opts.initial_deriv)[j];
  } else if (p != 2.0) {
    // |u|^{p-2} degenerates at u = 0; start from the quadratic-penalty fit.
    DiscretePrimal quadratic(dp.observations(), m, 2.0, dp.lambda(), dp.grid_cells());
    const auto warm = solve_primal(quadratic, config, opts);
    for (std::size_t j = 0; j < warm.deriv.size(); ++j) z[m + static_cast<Eigen::Index>(j)] = warm.deriv[j];
  }

  OracleModel model(dp, config, p);
  int total = 0;
  double mu = 0.0;
  bool feasible = false;
  if (model.constrained_on_deriv() || model.constrained_on_rows()) {
    mu = 1.0;
    for (int level = 0; level < opts.max_levels; ++level, mu *= 10.0) {
      total += minimize_level(model, z, mu, opts, p).iterations;
      if (model.max_violation(z) <= opts.feas_tol) {
        feasible = true;
        break;
      }
    }
  } else {
    total += minimize_level(model, z, 0.0, opts, p).iterations;
    feasible = true;
  }

  PrimalSolution sol;
  sol.f = model.values(z);
  sol.deriv.assign(z.data() + m, z.data() + z.size());
  sol.objective = model.primal_value(z);
  sol.max_violation = model.max_violation(z);
  sol.penalty_weight = mu;
  sol.newton_iterations = total;
  if (!feasible)
    throw ConvergenceError("primal oracle: constraint violation " + std::to_string(sol.max_violation) +
                               " above feas_tol after " + std::to_string(opts.max_levels) + " penalty levels",
                           sol.f, sol.objective);
  return sol;
}

double euler_lagrange_residual(const DiscretePrimal& dp, const ChangePointConfig* config,
                               const PrimalSolution& solution, double activity_threshold) {
  const int m = dp.m();
  const double p = dp.p();
  const auto& u = solution.deriv;
  const int nu = static_cast<int>(u.size());
  std::vector<double> psi(u.size());
  double scale = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    psi[j] = std::copysign(std::pow(std::abs(u[j]), p - 1.0), u[j]);
    scale = std::max(scale, std::abs(psi[j]));
  }
  if (scale == 0.0) return 0.0;

  // Inactive means the constrained derivative is clearly away from zero.
  std::vector<char> active(u.size(), 0);
  if (config != nullptr) {
    const int ell = config->ell();
    if (ell == m) {
      for (int j = 0; j < nu; ++j) active[j] = std::abs(u[j]) <= activity_threshold;
    } else {
      const auto d = forward_difference(dp, solution.f, ell);
      for (std::size_t r = 0; r < d.size(); ++r) {
        if (std::abs(d[r]) > activity_threshold) continue;
        // The constraint multiplier at row r bends psi near r.
        const int lo = std::max(0, static_cast<int>(r) - m - 1);
        const int hi = std::min(nu - 1, static_cast<int>(r) + m + 1);
        for (int j = lo; j <= hi; ++j) active[j] = 1;
      }
    }
  }
  std::vector<char> near_knot(u.size(), 0);
  for (int idx : dp.data_index()) {
    for (int j = idx - m - 1; j <= idx + 1; ++j)
      if (j >= 0 && j < nu) near_knot[j] = 1;
  }

  double worst = 0.0;
  for (int n = m; n < nu; ++n) {
    bool eligible = true;
    for (int j = n - m; j <= n && eligible; ++j) eligible = !active[j] && !near_knot[j];
    if (!eligible) continue;
    double r = 0.0;
    double b = 1.0;
    for (int k = 0; k <= m; ++k) {
      r += ((k % 2 == 0) ? b : -b) * psi[n - k];
      b = b * (m - k) / (k + 1);
    }
    worst = std::max(worst, std::abs(r));
  }
  return worst / scale;
}

}  // namespace shapespline
