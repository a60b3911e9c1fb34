#pragma once

#include <memory>
#include <optional>

#include "shapespline/recovery.hpp"

namespace shapespline {

/// Everything a fit needs besides the data and the cone.
struct FitSettings {
  int m = 2;
  double p = 2.0;
  double lambda = 1e-3;
  int grid_cells = 2048;
  DualOptions dual{};
};

struct FitResult {
  DualSolution dual;
  SplineEstimate estimate;
  KktReport diagnostics;
};

/// Dual solve followed by primal recovery for ell == m.
FitResult fit(const Observations& obs, const FitSettings& settings, const ChangePointConfig& config,
              const std::optional<Eigen::VectorXd>& start = std::nullopt);

}  // namespace shapespline
