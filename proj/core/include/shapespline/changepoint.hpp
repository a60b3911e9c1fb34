#pragma once

#include <span>
#include <string>
#include <vector>

#include "shapespline/estimator.hpp"

namespace shapespline {

/// Optimal primal value for fixed change points (ell == m): minus the dual
/// minimum. Points are sorted before use.
double profile_objective(const Observations& obs, const FitSettings& settings, std::span<const double> points,
                         int orientation);

struct SearchSpec {
  int K = 1;
  std::vector<int> orientations{1, -1};
  int coarse_grid = 21;    ///< G points on [0,1], endpoints included
  int refine_rounds = 3;   ///< coordinate-wise golden-section rounds
  int golden_steps = 12;   ///< golden-section evaluations per coordinate and round
  unsigned threads = 0;    ///< 0: SHAPESPLINE_THREADS or hardware concurrency
};

struct Candidate {
  std::vector<double> x;
  int orientation = 1;
  double value = 0.0;
  bool failed = false;
  std::string error;
};

struct SearchResult {
  std::vector<double> x;
  int orientation = 1;
  double value = 0.0;
  std::vector<Candidate> table;  ///< every evaluated candidate, coarse grid first
};

/// Exhaustive sweep of nondecreasing K-tuples on the coarse grid (duplicates
/// allowed) for each orientation, followed by golden-section refinement of
/// the incumbent one coordinate at a time with the ordering kept by clamping.
/// Returns the best evaluated candidate. Throws ConvergenceError when every
/// candidate failed.
SearchResult search(const Observations& obs, const FitSettings& settings, const SearchSpec& spec);

/// Best coarse-grid value for K = 0 .. K_max (no refinement), for inspecting
/// how much each extra change point buys.
std::vector<double> best_value_by_K(const Observations& obs, const FitSettings& settings, const SearchSpec& spec,
                                    int K_max);

/// Thread cap from SHAPESPLINE_THREADS, else hardware concurrency (at least 1).
unsigned default_thread_count();

}  // namespace shapespline
