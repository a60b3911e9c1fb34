#include <doctest.h>

#include <cmath>
#include <random>

#include "shapespline/errors.hpp"
#include "shapespline/halfwidth.hpp"
#include "support.hpp"

using namespace shapespline;
namespace ts = testing_support;

namespace {

std::vector<double> uniform(int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(static_cast<double>(i) / (n - 1));
  return g;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) { return ts::sup_norm(a, b); }

}  // namespace

TEST_SUITE("halfwidth") {
  TEST_CASE("effective halfwidth values") {
    for (int m = 1; m <= 3; ++m)
      for (double p : {1.5, 2.0, 3.0}) CHECK(*h_eff(1.0, 1.0, 1.0, m, p) == doctest::Approx(1.0));
    CHECK(*h_eff(0.3, 2.0, 0.1, 2, 2.0) == *h_eff(0.3, 2.0, 50.0, 2, 2.0));
    CHECK(*h_eff(1.0, 1.0, 4.0, 1, 1.5) == doctest::Approx(std::pow(4.0, -0.25)).epsilon(1e-14));
    CHECK(*h_eff(1.0, 1.0, 4.0, 1, 1.5) == doctest::Approx(0.7071).epsilon(1e-4));
    CHECK_FALSE(h_eff(1.0, 1.0, 0.0, 2, 1.5).has_value());
    CHECK_THROWS_AS(h_eff(0.0, 1.0, 1.0, 2, 1.5), SetupError);
  }

  TEST_CASE("MSE halfwidth values") {
    CHECK(*h_mse(1.0, 1.0, 2) == doctest::Approx(1.0));
    CHECK(*h_mse(1000.0, 1.0, 1) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_FALSE(h_mse(100.0, 0.0, 2).has_value());
  }

  TEST_CASE("monotonicity of the effective halfwidth") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    for (int k = 0; k < 200; ++k) {
      const double lam = u(rng), fp = u(rng), fm = u(rng);
      const int m = 1 + k % 3;
      for (double p : {1.3, 1.5, 2.0, 2.5}) CHECK(*h_eff(1.5 * lam, fp, fm, m, p) > *h_eff(lam, fp, fm, m, p));
      for (double p : {1.3, 1.5, 1.9}) CHECK(*h_eff(lam, fp, 1.5 * fm, m, p) < *h_eff(lam, fp, fm, m, p));
    }
  }

  TEST_CASE("density of an exactly uniform design") {
    const auto t = uniform(101);
    std::vector<double> at;
    for (int k = 0; k <= 80; ++k) at.push_back(0.1 + 0.01 * k);
    for (double d : design_density(t, at)) CHECK(std::abs(d - 1.0) <= 0.1);
    // Integrates to about one over [0, 1].
    const auto fine = uniform(2001);
    const auto dens = design_density(t, fine);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < fine.size(); ++i) total += 0.5 * (dens[i] + dens[i + 1]) * (fine[i + 1] - fine[i]);
    CHECK(total == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("full width at half maximum of a Gaussian bump") {
    const auto grid = uniform(4001);
    const double sigma = 0.05, centre = 0.4;
    std::vector<double> r;
    for (double x : grid) r.push_back(std::exp(-0.5 * std::pow((x - centre) / sigma, 2)));
    double peak = 0.0;
    const auto w = full_width_half_max(grid, r, 0.42, 0.1, &peak);
    REQUIRE(w.has_value());
    CHECK(*w == doctest::Approx(2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma).epsilon(1e-4));
    CHECK(peak == doctest::Approx(centre));
    CHECK_FALSE(full_width_half_max(grid, r, 0.8, 0.1).has_value());
  }

  TEST_CASE("quadratic problems respond linearly") {
    // Strongly convex data keep the convexity constraint inactive, so the
    // p = 2 fit is a linear smoother and the response ignores the other y.
    const auto t = uniform(31);
    std::vector<double> y1, y2;
    for (double v : t) {
      y1.push_back(3.0 * v * v);
      y2.push_back(5.0 * v * v - v + 0.2);
    }
    FitSettings s;
    s.m = 2;
    s.lambda = 1e-4;
    s.dual.grad_tol = 1e-10;
    const ChangePointConfig c(2, {}, 1);
    const auto grid = uniform(201);
    const auto a = influence_probe(ts::make_observations(t, y1), s, c, 10, grid);
    const auto b = influence_probe(ts::make_observations(t, y2), s, c, 10, grid, a.epsilon);
    CHECK(sup_diff(a.response, b.response) <= 1e-6);
    REQUIRE(a.fwhm.has_value());
    CHECK(std::abs(a.peak_location - t[10]) <= 0.05);
  }

  TEST_CASE("response converges as the perturbation shrinks") {
    const auto t = uniform(41);
    std::vector<double> y;
    for (double v : t) y.push_back(std::exp(3.0 * v) / 9.0);
    FitSettings s;
    s.m = 2;
    s.p = 1.5;
    s.lambda = 1e-5;
    s.dual.grad_tol = 1e-10;
    const ChangePointConfig c(2, {}, 1);
    const auto obs = ts::make_observations(t, y);
    const auto base = fit(obs, s, c);
    const auto grid = uniform(201);
    const double eps = 1e-3;
    const auto r1 = influence_probe(base, s, 20, grid, eps);
    const auto r2 = influence_probe(base, s, 20, grid, eps / 2);
    const auto r4 = influence_probe(base, s, 20, grid, eps / 4);
    double scale = 0.0;
    for (double v : r1.response) scale = std::max(scale, std::abs(v));
    const double d1 = sup_diff(r1.response, r2.response), d2 = sup_diff(r2.response, r4.response);
    CHECK(d1 <= 0.05 * scale);
    // First-order behaviour: halving epsilon roughly halves the change.
    CHECK(d2 <= 0.75 * d1 + 1e-6 * scale);
  }

  TEST_CASE("influence is narrower where the curvature is larger when p < 2") {
    const auto t = uniform(101);
    std::vector<double> y;
    for (double v : t) y.push_back(std::exp(5.0 * v) / 25.0);
    FitSettings s;
    s.m = 2;
    s.p = 1.5;
    s.lambda = 1e-5;
    const auto obs = ts::make_observations(t, y);
    const auto base = fit(obs, s, ChangePointConfig(2, {}, 1));
    const auto grid = uniform(401);
    const auto rep = halfwidth_report(base, s, grid, std::vector<std::size_t>{25, 75});
    REQUIRE(rep.probes.size() == 2);
    REQUIRE(rep.probes[0].fwhm.has_value());
    REQUIRE(rep.probes[1].fwhm.has_value());
    CHECK(*rep.probes[0].fwhm > *rep.probes[1].fwhm);
    // The heuristic predicts the same ordering.
    CHECK(*rep.h_eff[100] > *rep.h_eff[300]);
    CHECK(rep.h_mse[100].has_value());
  }

  TEST_CASE("probe index validation") {
    const auto t = uniform(11);
    std::vector<double> y(t.size(), 1.0);
    FitSettings s;
    s.m = 1;
    const auto grid = uniform(11);
    CHECK_THROWS_AS(influence_probe(ts::make_observations(t, y), s, ChangePointConfig(1, {}, 1), 11, grid), SetupError);
  }
}
