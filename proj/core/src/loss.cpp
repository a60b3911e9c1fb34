#include "shapespline/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shapespline/errors.hpp"

namespace shapespline {

LossSpec LossSpec::quadratic(double weight) {
  if (!(weight > 0.0)) throw SetupError("loss weight must be positive");
  return LossSpec{Kind::Quadratic, weight, 0.0};
}

LossSpec LossSpec::huber(double weight, double cutoff) {
  if (!(weight > 0.0)) throw SetupError("loss weight must be positive");
  if (!(cutoff > 0.0)) throw SetupError("Huber cutoff must be positive");
  return LossSpec{Kind::Huber, weight, cutoff};
}

double LossSpec::conj_bound() const {
  return kind == Kind::Huber ? weight * cutoff : std::numeric_limits<double>::infinity();
}

double rho(const LossSpec& spec, double r) {
  if (spec.kind == LossSpec::Kind::Quadratic) return spec.weight * r * r;
  const double a = std::abs(r);
  if (a <= spec.cutoff) return spec.weight * 0.5 * r * r;
  return spec.weight * (spec.cutoff * a - 0.5 * spec.cutoff * spec.cutoff);
}

double rho_prime(const LossSpec& spec, double r) {
  if (spec.kind == LossSpec::Kind::Quadratic) return 2.0 * spec.weight * r;
  const double bound = spec.weight * spec.cutoff;
  return std::clamp(spec.weight * r, -bound, bound);
}

double rho_second(const LossSpec& spec, double r) {
  if (spec.kind == LossSpec::Kind::Quadratic) return 2.0 * spec.weight;
  return std::abs(r) <= spec.cutoff ? spec.weight : 0.0;
}

double rho_conj(const LossSpec& spec, double alpha) {
  if (spec.kind == LossSpec::Kind::Quadratic) return alpha * alpha / (4.0 * spec.weight);
  if (std::abs(alpha) > spec.conj_bound()) return std::numeric_limits<double>::infinity();
  return alpha * alpha / (2.0 * spec.weight);
}

double rho_conj_prime(const LossSpec& spec, double alpha) {
  if (spec.kind == LossSpec::Kind::Quadratic) return alpha / (2.0 * spec.weight);
  if (std::abs(alpha) > spec.conj_bound())
    throw DomainError("rho_conj_prime: alpha outside the Huber dual box");
  return alpha / spec.weight;
}

double rho_conj_second(const LossSpec& spec, double alpha) {
  if (spec.kind == LossSpec::Kind::Quadratic) return 1.0 / (2.0 * spec.weight);
  if (std::abs(alpha) > spec.conj_bound())
    throw DomainError("rho_conj_second: alpha outside the Huber dual box");
  return 1.0 / spec.weight;
}

}  // namespace shapespline
