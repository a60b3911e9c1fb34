#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "shapespline/dual_solver.hpp"
#include "shapespline/errors.hpp"
#include "shapespline/estimator.hpp"
#include "shapespline/primal_oracle.hpp"
#include "support.hpp"

using namespace shapespline;
namespace ts = testing_support;

namespace {

DualProblem problem(const Observations& obs, int m, double p, double lambda, const ChangePointConfig& c,
                    int grid = 2048) {
  return DualProblem(obs, SobolevParams::make(m, p), lambda, c, grid);
}

// Random alpha in the feasible set {T alpha = 0} (and inside Huber boxes).
Eigen::VectorXd random_feasible(const DualProblem& dp, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> z(0.0, scale);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dp.size()));
  for (auto& x : v) x = z(rng);
  // Shrinking keeps T alpha = 0 and moves boxed entries strictly inside.
  return 0.9 * project_feasible(dp, v);
}

// Orthonormal basis of {alpha : T alpha = 0}. Finite differences are taken
// along these directions: off the feasible subspace the truncated integrand
// has kinks (g vanishes identically left of the first observation).
Eigen::MatrixXd null_space(const Eigen::MatrixXd& T) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(T, Eigen::ComputeFullV);
  const Eigen::Index r = T.rows();
  return svd.matrixV().rightCols(T.cols() - r);
}

}  // namespace

TEST_SUITE("dual_solver") {
  TEST_CASE("g_alpha values") {
    const ChangePointConfig c1(1, {}, 1);
    // One active observation at t = 0.6 (the second carries zero weight in alpha).
    const auto one = problem(ts::make_observations({0.6, 0.9}, {0.0, 0.0}), 1, 2.0, 1.0, c1);
    CHECK(g_alpha(one, Eigen::Vector2d(2.0, 0.0), 0.3) == doctest::Approx(2.0));
    CHECK(g_alpha(one, Eigen::Vector2d(2.0, 0.0), 0.7) == 0.0);
    CHECK(g_alpha(one, Eigen::Vector2d::Zero(), 0.3) == 0.0);

    const ChangePointConfig c2(2, {}, 1);
    const auto two = problem(ts::make_observations({0.4, 0.8}, {0.0, 0.0}), 2, 2.0, 1.0, c2);
    CHECK(g_alpha(two, Eigen::Vector2d(1.0, -1.0), 0.2) == doctest::Approx(-0.4));
  }

  TEST_CASE("local truncation") {
    const ChangePointConfig c2(2, {}, 1);
    const auto two = problem(ts::make_observations({0.4, 0.8}, {0.0, 0.0}), 2, 2.0, 1.0, c2);
    CHECK(truncated_w(two, Eigen::Vector2d(1.0, -1.0), 0.2) == 0.0);
    CHECK(truncated_w(two, Eigen::Vector2d(-1.75, 1.75), 0.2) == doctest::Approx(0.7));
    for (double s : {0.0, 0.3, 0.5, 0.9}) CHECK(truncated_w(two, Eigen::Vector2d::Zero(), s) == 0.0);
    const ChangePointConfig flip(2, {0.5}, 1);
    const auto three = problem(ts::make_observations({0.4, 0.8}, {0.0, 0.0}), 2, 2.0, 1.0, flip);
    // chi = -1 on (0.5, 1]: a positive g there is truncated, a negative one kept.
    CHECK(truncated_w(three, Eigen::Vector2d(0.0, 1.0), 0.6) == 0.0);
    CHECK(truncated_w(three, Eigen::Vector2d(0.0, -1.0), 0.6) == doctest::Approx(-0.2));
    CHECK(truncated_w(three, Eigen::Vector2d(0.0, -1.0), 0.5) == 0.0);
  }

  TEST_CASE("objective at zero and forced zero") {
    const ChangePointConfig c(2, {}, 1);
    const auto dp = problem(ts::make_observations({0.1, 0.5, 0.7}, {1.0, -2.0, 0.5}), 2, 2.0, 0.1, c);
    CHECK(dual_objective(dp, Eigen::Vector3d::Zero()) == 0.0);
    const auto g = dual_gradient(dp, Eigen::Vector3d::Zero());
    CHECK(g[0] == doctest::Approx(-1.0));
    CHECK(g[1] == doctest::Approx(2.0));
    CHECK(g[2] == doctest::Approx(-0.5));

    // Two points and m = 2: the moment constraints leave only alpha = 0.
    const auto pair = problem(ts::make_observations({0.0, 1.0}, {0.3, 1.7}), 2, 2.0, 0.1, c);
    std::mt19937_64 rng(5);
    CHECK(random_feasible(pair, rng, 1.0).norm() <= 1e-14);
    const auto sol = solve_dual(pair);
    CHECK(sol.alpha.norm() <= 1e-14);
    CHECK(sol.objective == 0.0);
  }

  TEST_CASE("three-point instance agrees with the primal oracle") {
    auto obs = ts::make_observations({0.25, 0.5, 0.75}, {0.0, 1.0, 0.0});
    for (auto& l : obs.losses) l = LossSpec::quadratic(1.0);
    const ChangePointConfig c(1, {}, 1);
    const auto dp = problem(obs, 1, 2.0, 0.1, c);
    const auto sol = solve_dual(dp);
    const DiscretePrimal primal(obs, 1, 2.0, 0.1, 512);
    const auto ps = solve_primal(primal, &c);
    CHECK(std::abs(sol.objective + ps.objective) <= 1e-4);
  }

  TEST_CASE("gradient and Hessian match finite differences") {
    std::mt19937_64 rng(17);
    for (int m = 1; m <= 3; ++m) {
      for (double p : {1.5, 2.0, 3.0}) {
        for (bool huber : {false, true}) {
          const auto t = ts::grid_abscissae(rng, 12, 2048);
          std::vector<double> y;
          std::normal_distribution<double> z(0.0, 1.0);
          for (double ti : t) y.push_back(std::sin(5 * ti) + 0.1 * z(rng));
          const ChangePointConfig c(m, {0.35, 0.7}, m % 2 ? 1 : -1);
          const auto dp = problem(ts::make_observations(t, y, huber, 0.5), m, p, 1e-3, c);
          const Eigen::MatrixXd Z = null_space(dp.moment_matrix());
          for (int k = 0; k < 5; ++k) {
            const auto alpha = random_feasible(dp, rng, 0.02);
            CAPTURE(m);
            CAPTURE(p);
            CAPTURE(huber);
            const Eigen::VectorXd g = Z.transpose() * dual_gradient(dp, alpha);
            const auto fd = ts::fd_gradient(
                [&](const Eigen::VectorXd& b) { return dual_objective(dp, alpha + Z * b); },
                Eigen::VectorXd::Zero(Z.cols()), 1e-6);
            CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
            if (p <= 2.0) {
              // For q >= 2 the integrand is C^2 along feasible directions.
              const Eigen::MatrixXd H = Z.transpose() * dual_hessian(dp, alpha) * Z;
              Eigen::MatrixXd Hfd(H.rows(), H.cols());
              for (Eigen::Index i = 0; i < H.cols(); ++i)
                Hfd.col(i) = Z.transpose() *
                             (dual_gradient(dp, alpha + 1e-6 * Z.col(i)) - dual_gradient(dp, alpha - 1e-6 * Z.col(i))) /
                             2e-6;
              CHECK((H - Hfd).norm() <= 1e-4 * std::max(1.0, H.norm()));
            }
          }
        }
      }
    }
  }

  TEST_CASE("solver certificate and feasibility") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 12; ++trial) {
      const int m = 1 + trial % 3;
      const double p = trial % 4 == 3 ? 3.0 : (trial % 4 == 2 ? 1.5 : 2.0);
      const auto t = ts::grid_abscissae(rng, 15, 2048);
      std::vector<double> y;
      for (double ti : t) y.push_back(std::cos(4 * ti) + 0.2 * ti);
      const ChangePointConfig c(m, {0.5}, 1);
      const auto dp = problem(ts::make_observations(t, y, trial % 2 == 1, 0.05), m, p, 1e-4, c);
      const auto sol = solve_dual(dp);
      CHECK(sol.projected_gradient_norm <= 1e-6);
      CHECK(projected_gradient_norm(dp, sol.alpha, dual_gradient(dp, sol.alpha)) <= 1e-6);
      CHECK((dp.moment_matrix() * sol.alpha).norm() <= 1e-9);
      for (Eigen::Index i = 0; i < sol.alpha.size(); ++i) {
        CHECK(sol.alpha[i] >= dp.lower_bounds()[i] - 1e-12);
        CHECK(sol.alpha[i] <= dp.upper_bounds()[i] + 1e-12);
      }
      CHECK(sol.objective <= 0.0);
    }
  }

  TEST_CASE("monotone data: gap against the primal oracle") {
    std::vector<double> t, y;
    for (int i = 0; i <= 20; ++i) {
      t.push_back(i / 20.0);
      y.push_back(std::pow(i / 20.0, 2) + 0.3 * (i / 20.0));
    }
    const auto obs = ts::make_observations(t, y);
    const ChangePointConfig c(1, {}, 1);
    const auto sol = solve_dual(problem(obs, 1, 2.0, 1e-3, c));
    const auto ps = solve_primal(DiscretePrimal(obs, 1, 2.0, 1e-3, 2048), &c);
    const double value = ps.objective;
    CHECK(std::abs(value + sol.objective) <= 1e-4 * (1.0 + std::abs(value)));
  }

  TEST_CASE("weak duality against feasible primal candidates") {
    std::vector<double> t, y;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0.0, 0.05);
    for (int i = 0; i <= 16; ++i) {
      t.push_back(i / 16.0);
      y.push_back(i / 16.0 + z(rng));
    }
    const auto obs = ts::make_observations(t, y);
    const ChangePointConfig c(1, {}, 1);
    const auto sol = solve_dual(problem(obs, 1, 2.0, 1e-2, c));
    const DiscretePrimal dp(obs, 1, 2.0, 1e-2, 1024);
    const auto ps = solve_primal(dp, &c);
    CHECK(-sol.objective <= ps.objective + 1e-6);
    double mean = 0.0;
    for (double v : y) mean += v / y.size();
    std::vector<double> constant(1025, mean), ramp(1025);
    for (int j = 0; j <= 1024; ++j) ramp[j] = j / 1024.0;
    CHECK(-sol.objective <= primal_objective(dp, constant) + 1e-12);
    CHECK(-sol.objective <= primal_objective(dp, ramp) + 1e-12);
  }

  TEST_CASE("midpoint convexity with the quadratic conjugate gap") {
    // rho = w r^2 gives rho* = a^2/(4w), whose midpoint defect is (a1-a2)^2/(16w);
    // the remaining terms are convex.
    std::mt19937_64 rng(31);
    const auto t = ts::grid_abscissae(rng, 10, 2048);
    std::vector<double> y;
    for (double ti : t) y.push_back(std::sin(3 * ti));
    const auto obs = ts::make_observations(t, y);
    for (int m = 1; m <= 3; ++m) {
      const auto dp = problem(obs, m, 1.5, 1e-3, ChangePointConfig(m, {0.4}, 1));
      for (int k = 0; k < 20; ++k) {
        const auto a1 = random_feasible(dp, rng, 0.05), a2 = random_feasible(dp, rng, 0.05);
        double defect = 0.0;
        for (Eigen::Index i = 0; i < a1.size(); ++i)
          defect += std::pow(a1[i] - a2[i], 2) / (16.0 * obs.losses[i].weight);
        const double mid = dual_objective(dp, 0.5 * (a1 + a2));
        CHECK(mid <= 0.5 * (dual_objective(dp, a1) + dual_objective(dp, a2)) - defect + 1e-12);
      }
    }
  }

  TEST_CASE("setup errors") {
    const ChangePointConfig c1(1, {}, 1);
    CHECK_THROWS_AS(problem(ts::make_observations({0.5}, {1.0}), 1, 2.0, 1.0, c1), SetupError);
    CHECK_THROWS_AS(problem(ts::make_observations({0.2, 0.5}, {1.0, 2.0}), 3, 2.0, 1.0, ChangePointConfig(3, {}, 1)),
                    SetupError);
    CHECK_THROWS_AS(problem(ts::make_observations({0.2, 0.5}, {1.0, 2.0}), 1, 2.0, 0.0, c1), SetupError);
    CHECK_THROWS_AS(problem(ts::make_observations({0.2, 0.2, 0.5}, {1.0, 2.0, 0.0}), 1, 2.0, 1.0, c1), SetupError);
    CHECK_THROWS_AS(problem(ts::make_observations({0.2, 1.5}, {1.0, 2.0}), 1, 2.0, 1.0, c1), DomainError);
    CHECK_THROWS_AS(problem(ts::make_observations({0.2, 0.4, 0.6}, {1, 2, 3}), 2, 2.0, 1.0, ChangePointConfig(1, {}, 1)),
                    UnsupportedCase);
  }

  TEST_CASE("iteration cap reports the best iterate") {
    std::vector<double> t, y;
    for (int i = 0; i < 10; ++i) {
      t.push_back(i / 9.0);
      y.push_back(std::sin(7.0 * i / 9.0));
    }
    const auto dp = problem(ts::make_observations(t, y), 2, 2.0, 1e-4, ChangePointConfig(2, {}, 1));
    DualOptions opts;
    opts.max_iter = 0;
    try {
      solve_dual(dp, opts);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.best_iterate().size() == 10);
      CHECK(e.best_value() == 0.0);
    }
  }
}
