#pragma once

// Helpers shared by the test binaries. Everything here is deliberately
// written without calling into the library's own numerics, so the values it
// produces can serve as independent references.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "shapespline/dual_solver.hpp"
#include "shapespline/loss.hpp"

namespace testing_support {

/// Adaptive Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-13,
                      int depth = 40) {
  struct Rec {
    const std::function<double(double)>& f;
    double step(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
      return step(a, m, fa, flm, fm, left, tol / 2, depth - 1) + step(m, b, fm, frm, fb, right, tol / 2, depth - 1);
    }
  } rec{f};
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec.step(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Simpson over consecutive breakpoints (integrand smooth between them).
inline double piecewise_simpson(const std::function<double(double)>& f, std::vector<double> breaks,
                                double tol = 1e-13) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
    if (breaks[k + 1] > breaks[k]) total += simpson(f, breaks[k], breaks[k + 1], tol);
  return total;
}

inline double fact(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

/// Central-difference gradient of a scalar function of a vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double sup_norm(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

/// N distinct abscissae on the nodes k/grid, sorted.
inline std::vector<double> grid_abscissae(std::mt19937_64& rng, int n, int grid) {
  std::vector<int> pool(grid + 1);
  for (int k = 0; k <= grid; ++k) pool[k] = k;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  std::vector<double> t;
  for (int k : pool) t.push_back(static_cast<double>(k) / grid);
  return t;
}

inline shapespline::Observations make_observations(const std::vector<double>& t, const std::vector<double>& y,
                                                   bool huber = false, double cutoff = 0.1) {
  shapespline::Observations obs;
  obs.t = t;
  obs.y = y;
  const double w = 1.0 / static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    obs.losses.push_back(huber ? shapespline::LossSpec::huber(w, cutoff) : shapespline::LossSpec::quadratic(w));
  return obs;
}

/// Solves min (lambda/2) sum (f_{i+1}-f_i)^2/(t_{i+1}-t_i) + sum w_i (f_i - y_i)^2,
/// the exact finite form of the unconstrained m=1, p=2 smoothing spline
/// (the minimizer is piecewise linear between data and flat outside).
inline std::vector<double> linear_spline_fit(const std::vector<double>& t, const std::vector<double>& y,
                                             const std::vector<double>& w, double lambda, double* value) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, i) += 2.0 * w[i];
    b[i] = 2.0 * w[i] * y[i];
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double c = lambda / (t[i + 1] - t[i]);
    A(i, i) += c;
    A(i + 1, i + 1) += c;
    A(i, i + 1) -= c;
    A(i + 1, i) -= c;
  }
  const Eigen::VectorXd f = A.ldlt().solve(b);
  if (value) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) v += w[i] * (f[i] - y[i]) * (f[i] - y[i]);
    for (Eigen::Index i = 0; i + 1 < n; ++i) v += 0.5 * lambda * std::pow(f[i + 1] - f[i], 2) / (t[i + 1] - t[i]);
    *value = v;
  }
  return {f.data(), f.data() + n};
}

}  // namespace testing_support
