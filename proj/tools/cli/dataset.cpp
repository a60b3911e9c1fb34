#include "cli/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace shapespline::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Dataset parse_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  if (header.empty()) throw ParseError("empty dataset: expected a header with columns t,y");
  auto column = [&](const std::string& name) -> long {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<long>(it - header.begin());
  };
  const long ct = column("t");
  const long cy = column("y");
  const long cs = column("sigma");
  if (ct < 0 || cy < 0) throw ParseError("line " + std::to_string(lineno) + ": header must name columns t and y");

  struct Row {
    double t, y, sigma;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(cells.size()));
    Row r{parse_number(cells[ct], lineno), parse_number(cells[cy], lineno), 1.0};
    if (!(r.t >= 0.0 && r.t <= 1.0)) throw ParseError("line " + std::to_string(lineno) + ": t outside [0,1]");
    if (cs >= 0) {
      r.sigma = parse_number(cells[cs], lineno);
      if (!(r.sigma > 0.0)) throw ParseError("line " + std::to_string(lineno) + ": sigma must be positive");
    }
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].t == rows[i - 1].t)
      throw ParseError("duplicate abscissa t = " + format_double(rows[i].t));

  Dataset d;
  for (const auto& r : rows) {
    d.t.push_back(r.t);
    d.y.push_back(r.y);
  }
  if (cs >= 0) {
    d.sigma.emplace();
    for (const auto& r : rows) d.sigma->push_back(r.sigma);
  }
  return d;
}

Dataset parse_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset '" + path + "'");
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << (data.sigma ? "t,y,sigma\n" : "t,y\n");
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_double(data.t[i]) << ',' << format_double(data.y[i]);
    if (data.sigma) out << ',' << format_double((*data.sigma)[i]);
    out << '\n';
  }
}

Shape parse_shape(const std::string& name) {
  if (name == "abs_kink") return Shape::AbsKink;
  if (name == "monotone_smooth") return Shape::MonotoneSmooth;
  if (name == "convex_quad") return Shape::ConvexQuad;
  if (name == "custom") return Shape::Custom;
  throw SetupError("unknown shape '" + name + "' (abs_kink|monotone_smooth|convex_quad|custom)");
}

double shape_value(Shape shape, const std::vector<double>& coeffs, double t) {
  switch (shape) {
    case Shape::AbsKink:
      return std::abs(t - 0.5);
    case Shape::MonotoneSmooth:
      return t + 0.1 * std::sin(2.0 * std::numbers::pi * t);
    case Shape::ConvexQuad:
      return (t - 0.3) * (t - 0.3);
    case Shape::Custom: {
      double v = 0.0;
      for (std::size_t k = coeffs.size(); k-- > 0;) v = v * t + coeffs[k];
      return v;
    }
  }
  return 0.0;
}

Dataset simulate(Shape shape, int n, double noise_sd, std::uint64_t seed, const std::vector<double>& coeffs) {
  if (n < 2) throw SetupError("simulate: N must be >= 2");
  if (!(noise_sd >= 0.0)) throw SetupError("simulate: noise_sd must be >= 0");
  if (shape == Shape::Custom && coeffs.empty()) throw SetupError("simulate: custom shape needs coefficients");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    d.t.push_back(t);
    d.y.push_back(shape_value(shape, coeffs, t) + noise_sd * noise(rng));
  }
  return d;
}

Observations to_observations(const Dataset& data, LossKind kind, double huber_cutoff) {
  Observations obs;
  const auto n = static_cast<double>(data.size());
  obs.t = data.t;
  obs.y = data.y;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double sigma = data.sigma ? (*data.sigma)[i] : 1.0;
    const double w = 1.0 / (n * sigma * sigma);
    obs.losses.push_back(kind == LossKind::Huber ? LossSpec::huber(w, huber_cutoff) : LossSpec::quadratic(w));
  }
  return obs;
}

}  // namespace shapespline::cli
