#pragma once

namespace shapespline {

/// Per-observation robust loss.
///   Quadratic: rho(r) = w r^2
///   Huber:     rho(r) = w (r^2/2 for |r| <= c, c|r| - c^2/2 otherwise)
struct LossSpec {
  enum class Kind { Quadratic, Huber };

  Kind kind = Kind::Quadratic;
  double weight = 1.0;
  double cutoff = 0.0;

  static LossSpec quadratic(double weight);
  static LossSpec huber(double weight, double cutoff);

  /// Half-width of the conjugate's effective domain; +inf for quadratic.
  double conj_bound() const;
};

double rho(const LossSpec& spec, double r);
double rho_prime(const LossSpec& spec, double r);
/// Second derivative where it exists (0 on the Huber linear branch).
double rho_second(const LossSpec& spec, double r);

/// Fenchel conjugate rho*(alpha) = sup_r {alpha r - rho(r)}; +inf outside the
/// Huber box |alpha| <= w c.
double rho_conj(const LossSpec& spec, double alpha);
/// Derivative of the conjugate. Throws DomainError outside the Huber box.
double rho_conj_prime(const LossSpec& spec, double alpha);
double rho_conj_second(const LossSpec& spec, double alpha);

}  // namespace shapespline
