#include <doctest.h>

#include <cmath>
#include <random>

#include "shapespline/changepoint.hpp"
#include "shapespline/errors.hpp"
#include "support.hpp"

using namespace shapespline;
namespace ts = testing_support;

namespace {

std::vector<double> equispaced(int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(static_cast<double>(i) / (n - 1));
  return t;
}

Observations kink_data(int n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, noise);
  const auto t = equispaced(n);
  std::vector<double> y;
  for (double v : t) y.push_back(std::abs(v - 0.5) + (noise > 0 ? z(rng) : 0.0));
  return ts::make_observations(t, y);
}

FitSettings settings(int m, double lambda) {
  FitSettings s;
  s.m = m;
  s.lambda = lambda;
  return s;
}

}  // namespace

TEST_SUITE("changepoint") {
  TEST_CASE("mirror-symmetric data give equal values for both orientations") {
    const auto t = equispaced(11);
    std::vector<double> y;
    for (double v : t) y.push_back(std::cos(3.0 * (v - 0.5)) + 0.2 * std::pow(v - 0.5, 2));
    const auto obs = ts::make_observations(t, y);
    const auto s = settings(1, 1e-3);
    const double up = profile_objective(obs, s, {}, 1);
    const double down = profile_objective(obs, s, {}, -1);
    CHECK(std::abs(up - down) <= 1e-6);
  }

  TEST_CASE("duplicated change points collapse") {
    const auto obs = kink_data(21, 0.05, 3);
    for (int m : {1, 2}) {
      const auto s = settings(m, 1e-3);
      const std::vector<double> dup{0.5, 0.5}, one{0.5}, trip{0.3, 0.7, 0.7}, single{0.3};
      CHECK(std::abs(profile_objective(obs, s, dup, 1) - profile_objective(obs, s, {}, 1)) <= 1e-8);
      CHECK(std::abs(profile_objective(obs, s, trip, -1) - profile_objective(obs, s, single, -1)) <= 1e-8);
      CHECK(profile_objective(obs, s, one, -1) >= 0.0);
    }
  }

  TEST_CASE("monotone data: the constraint costs nothing") {
    const auto t = equispaced(15);
    std::vector<double> y;
    for (double v : t) y.push_back(v + 0.3 * v * v);
    const auto obs = ts::make_observations(t, y);
    const double lambda = 1e-3;
    const double value = profile_objective(obs, settings(1, lambda), {}, 1);
    double free_value = 0.0;
    std::vector<double> w;
    for (const auto& l : obs.losses) w.push_back(l.weight);
    // The m = 1, p = 2 penalty with lambda/p gives the factor lambda/2 used by the helper.
    ts::linear_spline_fit(t, y, w, lambda, &free_value);
    CHECK(value <= free_value + 1e-6);
    CHECK(value >= free_value - 1e-6);
  }

  TEST_CASE("kink location is recovered without noise") {
    SearchSpec spec;
    spec.K = 1;
    spec.orientations = {-1};
    const auto r = search(kink_data(41, 0.0, 0), settings(1, 1e-3), spec);
    REQUIRE(r.x.size() == 1);
    CHECK(r.x[0] >= 0.45);
    CHECK(r.x[0] <= 0.55);
    CHECK(r.orientation == -1);
  }

  TEST_CASE("K = 0 selects the better orientation") {
    const auto obs = kink_data(21, 0.02, 4);
    const auto s = settings(2, 1e-3);
    SearchSpec spec;
    spec.K = 0;
    const auto r = search(obs, s, spec);
    const double up = profile_objective(obs, s, {}, 1), down = profile_objective(obs, s, {}, -1);
    CHECK(r.value == doctest::Approx(std::min(up, down)).epsilon(1e-12));
    CHECK(r.orientation == (up <= down ? 1 : -1));
    CHECK(r.x.empty());
  }

  TEST_CASE("a duplicated incumbent is never strictly better than its collapse") {
    const auto obs = kink_data(21, 0.05, 5);
    const auto s = settings(1, 1e-3);
    SearchSpec spec;
    spec.K = 2;
    spec.coarse_grid = 11;
    spec.refine_rounds = 1;
    const auto r = search(obs, s, spec);
    for (const auto& c : r.table) {
      if (c.failed || c.x.size() != 2 || c.x[0] != c.x[1]) continue;
      const double collapsed = profile_objective(obs, s, {}, c.orientation);
      CHECK(c.value >= collapsed - 1e-8);
    }
  }

  TEST_CASE("best value is nonincreasing in K") {
    const auto obs = kink_data(17, 0.05, 6);
    SearchSpec spec;
    spec.coarse_grid = 9;
    const auto best = best_value_by_K(obs, settings(1, 1e-3), spec, 2);
    REQUIRE(best.size() == 3);
    for (std::size_t k = 1; k < best.size(); ++k) CHECK(best[k] <= best[k - 1] + 1e-8);
  }

  TEST_CASE("unsorted tuples are sorted first") {
    const auto obs = kink_data(21, 0.05, 7);
    const auto s = settings(2, 1e-3);
    const std::vector<double> unsorted{0.7, 0.2}, sorted{0.2, 0.7};
    CHECK(profile_objective(obs, s, unsorted, 1) == profile_objective(obs, s, sorted, 1));
  }

  TEST_CASE("search is deterministic across thread counts") {
    const auto obs = kink_data(21, 0.05, 8);
    SearchSpec spec;
    spec.K = 1;
    spec.coarse_grid = 11;
    spec.threads = 1;
    const auto a = search(obs, settings(1, 1e-3), spec);
    spec.threads = 4;
    const auto b = search(obs, settings(1, 1e-3), spec);
    CHECK(a.x == b.x);
    CHECK(a.value == b.value);
    REQUIRE(a.table.size() == b.table.size());
    for (std::size_t i = 0; i < a.table.size(); ++i) {
      CHECK(a.table[i].x == b.table[i].x);
      CHECK(a.table[i].value == b.table[i].value);
    }
  }

  TEST_CASE("invalid search specifications") {
    const auto obs = kink_data(11, 0.0, 0);
    SearchSpec spec;
    spec.K = -1;
    CHECK_THROWS_AS(search(obs, settings(1, 1e-3), spec), SetupError);
    spec.K = 1;
    spec.orientations = {};
    CHECK_THROWS_AS(search(obs, settings(1, 1e-3), spec), SetupError);
    spec.orientations = {2};
    CHECK_THROWS_AS(search(obs, settings(1, 1e-3), spec), SetupError);
  }
}
