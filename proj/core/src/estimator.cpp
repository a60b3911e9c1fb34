#include "shapespline/estimator.hpp"

namespace shapespline {

FitResult fit(const Observations& obs, const FitSettings& settings, const ChangePointConfig& config,
              const std::optional<Eigen::VectorXd>& start) {
  auto problem = std::make_shared<const DualProblem>(obs, SobolevParams::make(settings.m, settings.p),
                                                     settings.lambda, config, settings.grid_cells);
  DualSolution dual = solve_dual(*problem, settings.dual, start);
  SplineEstimate estimate(problem, dual.alpha);
  KktReport diagnostics = kkt_report(estimate);
  return FitResult{std::move(dual), std::move(estimate), diagnostics};
}

}  // namespace shapespline
