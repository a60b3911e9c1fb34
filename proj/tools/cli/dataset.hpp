#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shapespline/dual_solver.hpp"
#include "shapespline/errors.hpp"

namespace shapespline::cli {

/// Rows (t, y, optional sigma), sorted by t.
struct Dataset {
  std::vector<double> t;
  std::vector<double> y;
  std::optional<std::vector<double>> sigma;

  std::size_t size() const noexcept { return t.size(); }
};

/// Malformed input; the message names the offending line.
class ParseError : public SetupError {
 public:
  using SetupError::SetupError;
};

/// CSV with a header naming at least `t` and `y` (any column order); an
/// optional `sigma` column must be strictly positive. Rejects t outside
/// [0,1] and duplicate abscissae.
Dataset parse_dataset(std::istream& in);
Dataset parse_dataset(const std::string& path);

/// Shortest round-trip formatting, so parse_dataset(write_dataset(d)) == d bitwise.
void write_dataset(std::ostream& out, const Dataset& data);

enum class Shape { AbsKink, MonotoneSmooth, ConvexQuad, Custom };

Shape parse_shape(const std::string& name);
double shape_value(Shape shape, const std::vector<double>& coeffs, double t);

/// Equispaced t_i = i/(N-1), y_i = shape(t_i) + N(0, noise_sd^2), deterministic in seed.
Dataset simulate(Shape shape, int n, double noise_sd, std::uint64_t seed, const std::vector<double>& coeffs = {});

enum class LossKind { Quadratic, Huber };

/// Weights w_i = 1/(N sigma_i^2) when sigma is present, else 1/N.
Observations to_observations(const Dataset& data, LossKind kind, double huber_cutoff);

std::string format_double(double v);

}  // namespace shapespline::cli
