#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace shapespline {

/// Argument outside the mathematical domain of an operation (t outside [0,1], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested case exists in the theory but is not executable here
/// (polar cones and dual projections for ell < m).
class UnsupportedCase : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Problem data cannot define a well-posed fit (rank-deficient design, bad grid).
class SetupError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver stopped before meeting its tolerances. Carries the best
/// iterate seen so the caller can still inspect or persist it.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best_iterate, double best_value)
      : std::runtime_error(what), best_iterate_(std::move(best_iterate)), best_value_(best_value) {}

  const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }
  double best_value() const noexcept { return best_value_; }

 private:
  std::vector<double> best_iterate_;
  double best_value_;
};

}  // namespace shapespline
