#include "shapespline/halfwidth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shapespline/errors.hpp"

namespace shapespline {

std::optional<double> h_eff(double lambda, double fprime, double fm_abs, int m, double p) {
  if (!(lambda > 0.0) || !(fprime > 0.0)) throw SetupError("h_eff: lambda and F' must be positive");
  double curvature = 1.0;
  if (p != 2.0) {
    if (fm_abs == 0.0 && p < 2.0) return std::nullopt;
    curvature = std::pow(fm_abs, p - 2.0);
  }
  return std::pow(lambda * fprime * curvature, 1.0 / (2.0 * m));
}

std::optional<double> h_mse(double n, double fm_abs, int m) {
  if (!(n >= 1.0)) throw SetupError("h_mse: N must be >= 1");
  if (fm_abs == 0.0) return std::nullopt;
  return std::pow(n * fm_abs * fm_abs, -1.0 / (2.0 * m + 1.0));
}

std::vector<double> design_density(std::span<const double> t, std::span<const double> at) {
  const auto n = static_cast<double>(t.size());
  if (t.size() < 2) throw SetupError("design_density: need at least two points");
  double mean = 0.0;
  for (double v : t) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : t) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  std::vector<double> sorted(t.begin(), t.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return k + 1 < sorted.size() ? sorted[k] * (1.0 - frac) + sorted[k + 1] * frac : sorted.back();
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double bw = 1.06 * spread * std::pow(n, -0.2);
  if (!(bw > 0.0)) throw SetupError("design_density: degenerate design");

  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out;
  out.reserve(at.size());
  for (double x : at) {
    double d = 0.0;
    for (double ti : t) {
      for (double mirror : {ti, -ti, 2.0 - ti}) {
        const double z = (x - mirror) / bw;
        d += std::exp(-0.5 * z * z);
      }
    }
    out.push_back(d * norm);
  }
  return out;
}

std::optional<double> full_width_half_max(std::span<const double> grid, std::span<const double> response, double site,
                                          double max_offset, double* peak_location) {
  if (grid.size() != response.size() || grid.size() < 3) return std::nullopt;
  const auto peak = static_cast<std::size_t>(std::max_element(response.begin(), response.end()) - response.begin());
  if (peak_location) *peak_location = grid[peak];
  const double top = response[peak];
  if (!(top > 0.0) || std::abs(grid[peak] - site) > max_offset) return std::nullopt;
  const double half = 0.5 * top;

  std::size_t l = peak;
  while (l > 0 && response[l] >= half) --l;
  if (response[l] >= half) return std::nullopt;
  std::size_t r = peak;
  while (r + 1 < response.size() && response[r] >= half) ++r;
  if (response[r] >= half) return std::nullopt;

  auto cross = [&](std::size_t a, std::size_t b) {
    return grid[a] + (half - response[a]) * (grid[b] - grid[a]) / (response[b] - response[a]);
  };
  return cross(r - 1, r) - cross(l, l + 1);
}

InfluenceResponse influence_probe(const FitResult& base, const FitSettings& settings, std::size_t j,
                                  std::span<const double> output_grid, std::optional<double> epsilon) {
  const auto& problem = base.estimate.problem();
  Observations obs = problem.observations();
  if (j >= obs.size()) throw SetupError("influence_probe: probe index out of range");
  double eps;
  if (epsilon) {
    eps = *epsilon;
  } else {
    const auto [lo, hi] = std::minmax_element(obs.y.begin(), obs.y.end());
    const double range = *hi - *lo;
    eps = 1e-3 * (range > 0.0 ? range : 1.0);
  }
  if (!(eps != 0.0)) throw SetupError("influence_probe: epsilon must be nonzero");

  obs.y[j] += eps;
  const FitResult pert = fit(obs, settings, problem.config(), base.dual.alpha);

  InfluenceResponse out;
  out.index = j;
  out.site = obs.t[j];
  out.epsilon = eps;
  out.grid.assign(output_grid.begin(), output_grid.end());
  out.response.reserve(output_grid.size());
  for (double t : output_grid)
    out.response.push_back((pert.estimate.evaluate(t) - base.estimate.evaluate(t)) / eps);
  // Accept the peak within a tenth of the interval of the probed site.
  out.fwhm = full_width_half_max(out.grid, out.response, out.site, 0.1, &out.peak_location);
  return out;
}

InfluenceResponse influence_probe(const Observations& obs, const FitSettings& settings,
                                  const ChangePointConfig& config, std::size_t j, std::span<const double> output_grid,
                                  std::optional<double> epsilon) {
  const FitResult base = fit(obs, settings, config);
  return influence_probe(base, settings, j, output_grid, epsilon);
}

HalfwidthReport halfwidth_report(const FitResult& fit_result, const FitSettings& settings, std::span<const double> grid,
                                 std::span<const std::size_t> probe_indices, std::optional<double> epsilon) {
  const auto& est = fit_result.estimate;
  const auto& obs = est.problem().observations();
  HalfwidthReport rep;
  rep.grid.assign(grid.begin(), grid.end());
  rep.density = design_density(obs.t, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double fm = std::abs(est.deriv_m(grid[k]));
    rep.h_eff.push_back(h_eff(settings.lambda, rep.density[k], fm, settings.m, settings.p));
    rep.h_mse.push_back(h_mse(static_cast<double>(obs.size()), fm, settings.m));
  }
  for (std::size_t j : probe_indices) rep.probes.push_back(influence_probe(fit_result, settings, j, grid, epsilon));
  return rep;
}

}  // namespace shapespline
