#pragma once

#include <optional>
#include <span>
#include <vector>

#include "shapespline/estimator.hpp"

namespace shapespline {

/// Heuristic effective kernel halfwidth [lambda F'(t) |f^(m)(t)|^{p-2}]^{1/(2m)},
/// reported with proportionality constant 1. Missing when f^(m) = 0 and p < 2.
std::optional<double> h_eff(double lambda, double fprime, double fm_abs, int m, double p);

/// MSE-optimal halfwidth scaling [N |f^(m)|^2]^{-1/(2m+1)}; missing when f^(m) = 0.
std::optional<double> h_mse(double n, double fm_abs, int m);

/// Gaussian kernel density estimate of the design points, reflected at 0 and
/// 1, with the normal-reference bandwidth.
std::vector<double> design_density(std::span<const double> t, std::span<const double> at);

struct InfluenceResponse {
  std::size_t index = 0;
  double site = 0.0;
  double epsilon = 0.0;
  std::vector<double> grid;
  std::vector<double> response;  ///< (f_pert - f) / epsilon
  double peak_location = 0.0;
  std::optional<double> fwhm;    ///< missing if the peak is not near the probed site
};

/// Refits with y_j += epsilon and reports the normalized response and its
/// full width at half maximum around t_j. epsilon defaults to 1e-3 times the
/// data range.
InfluenceResponse influence_probe(const Observations& obs, const FitSettings& settings,
                                  const ChangePointConfig& config, std::size_t j, std::span<const double> output_grid,
                                  std::optional<double> epsilon = std::nullopt);

/// Same, reusing an existing base fit.
InfluenceResponse influence_probe(const FitResult& base, const FitSettings& settings, std::size_t j,
                                  std::span<const double> output_grid, std::optional<double> epsilon = std::nullopt);

/// FWHM of the main lobe of `response` around its peak; missing when the
/// peak is farther than `max_offset` from `site` or a half-maximum crossing
/// falls off the grid.
std::optional<double> full_width_half_max(std::span<const double> grid, std::span<const double> response, double site,
                                          double max_offset, double* peak_location = nullptr);

struct HalfwidthReport {
  std::vector<double> grid;
  std::vector<std::optional<double>> h_eff;
  std::vector<std::optional<double>> h_mse;
  std::vector<double> density;
  std::vector<InfluenceResponse> probes;
};

HalfwidthReport halfwidth_report(const FitResult& fit, const FitSettings& settings, std::span<const double> grid,
                                 std::span<const std::size_t> probe_indices,
                                 std::optional<double> epsilon = std::nullopt);

}  // namespace shapespline
