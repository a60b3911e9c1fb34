#include "cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "cli/dataset.hpp"
#include "shapespline/changepoint.hpp"
#include "shapespline/errors.hpp"
#include "shapespline/estimator.hpp"
#include "shapespline/halfwidth.hpp"
#include "shapespline/primal_oracle.hpp"

namespace shapespline::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string data;
  int m = 2;
  double p = 2.0;
  double lambda = 1e-3;
  int grid = 2048;
  double grad_tol = 1e-6;
  double feas_tol = 1e-9;
  int max_iter = 200;
  std::string changepoints;
  std::string orientation = "+1";
  int ell = 0;  // 0: same as m
  std::string loss = "quadratic";
  double huber_c = 1.0;
  std::string out;
  std::uint64_t seed = 1;
  std::string format = "json";
  int output_points = 201;

  // search-changepoints
  int K = 1;
  int grid_G = 21;
  int refine = 3;
  std::string orientations = "both";
  int K_max = -1;

  // diagnose-halfwidth
  std::string probes;
  double epsilon = 0.0;

  // oracle-check
  double oracle_feas_tol = 1e-6;
  bool allow_any_p = false;

  // simulate
  std::string shape = "abs_kink";
  int n = 41;
  double noise_sd = 0.0;
  std::string coeffs;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw SetupError(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  return out;
}

int parse_sign(const std::string& s, const char* what) {
  if (s == "+1" || s == "1" || s == "+") return 1;
  if (s == "-1" || s == "-") return -1;
  throw SetupError(std::string(what) + " must be +1 or -1");
}

void validate(const RunConfig& c) {
  if (!(c.p > 1.0) || !std::isfinite(c.p)) throw SetupError("--p must lie in the open interval (1, ∞)");
  if (c.m < 1) throw SetupError("--m must be >= 1");
  if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) throw SetupError("--lambda must be > 0");
  if (c.grid < 8) throw SetupError("--grid must be >= 8");
  const int ell = c.ell == 0 ? c.m : c.ell;
  if (ell < 1 || ell > c.m) throw SetupError("--ell must satisfy 1 <= ell <= m");
  if (c.loss != "quadratic" && c.loss != "huber") throw SetupError("--loss must be quadratic or huber");
  if (!(c.huber_c > 0.0)) throw SetupError("--huber-c must be > 0");
  if (c.format != "json" && c.format != "csv") throw SetupError("--format must be json or csv");
  if (c.output_points < 2) throw SetupError("--output-points must be >= 2");
}

FitSettings settings_of(const RunConfig& c) {
  FitSettings s;
  s.m = c.m;
  s.p = c.p;
  s.lambda = c.lambda;
  s.grid_cells = c.grid;
  s.dual.grad_tol = c.grad_tol;
  s.dual.feas_tol = c.feas_tol;
  s.dual.max_iter = c.max_iter;
  return s;
}

ChangePointConfig cone_of(const RunConfig& c) {
  return ChangePointConfig(c.ell == 0 ? c.m : c.ell, parse_list(c.changepoints, "--changepoints"),
                           parse_sign(c.orientation, "--orientation"));
}

Observations load(const RunConfig& c) {
  if (c.data.empty()) throw SetupError("--data is required");
  const auto data = parse_dataset(c.data);
  if (data.size() < static_cast<std::size_t>(c.m))
    throw SetupError("dataset has " + std::to_string(data.size()) + " rows, need at least m = " + std::to_string(c.m));
  return to_observations(data, c.loss == "huber" ? LossKind::Huber : LossKind::Quadratic, c.huber_c);
}

std::vector<double> uniform_grid(int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = static_cast<double>(i) / (n - 1);
  g.back() = 1.0;
  return g;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

class Artifacts {
 public:
  explicit Artifacts(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) fs::create_directories(dir_);
  }
  void write(const std::string& name, const std::string& content) const {
    if (dir_.empty()) return;
    std::ofstream f(fs::path(dir_) / name, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir_) / name).string());
  }

 private:
  std::string dir_;
};

json kkt_json(const KktReport& r) {
  return {{"gap", r.gap},
          {"primal_value", r.primal_value},
          {"dual_value", r.dual_value},
          {"kkt", {{"multiplier_residual", r.multiplier_residual}, {"residual_residual", r.residual_residual}}},
          {"feasibility", {{"cone_violation", r.cone_violation}}}};
}

int cmd_fit(const RunConfig& c, std::ostream& out) {
  const auto obs = load(c);
  const auto settings = settings_of(c);
  const auto result = fit(obs, settings, cone_of(c));
  const auto& est = result.estimate;

  json report;
  report["a"] = std::vector<double>(est.coefficients().data(), est.coefficients().data() + est.coefficients().size());
  report["alpha"] = std::vector<double>(est.alpha().data(), est.alpha().data() + est.alpha().size());
  report["grid"] = std::vector<double>(est.grid().begin(), est.grid().end());
  report["f_m"] = std::vector<double>(est.deriv_grid().begin(), est.deriv_grid().end());
  report["fitted"] = std::vector<double>(est.fitted().begin(), est.fitted().end());
  report["diagnostics"] = kkt_json(result.diagnostics);
  report["diagnostics"]["projected_gradient_norm"] = result.dual.projected_gradient_norm;
  report["diagnostics"]["moment_residual"] = result.dual.moment_residual;
  report["diagnostics"]["iterations"] = result.dual.iterations;
  report["diagnostics"]["max_abs_residual"] = [&] {
    double r = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) r = std::max(r, std::abs(obs.y[i] - est.fitted()[i]));
    return r;
  }();

  std::ostringstream csv;
  csv << "t,f,f_m\n";
  for (double t : uniform_grid(c.output_points))
    csv << format_double(t) << ',' << format_double(est.evaluate(t)) << ',' << format_double(est.deriv_m(t)) << '\n';

  const std::string js = report.dump(2) + "\n";
  Artifacts a(c.out);
  a.write("fit.json", js);
  a.write("fit.csv", csv.str());
  out << (c.format == "json" ? js : csv.str());
  return kOk;
}

int cmd_search(const RunConfig& c, std::ostream& out) {
  const auto obs = load(c);
  const auto settings = settings_of(c);
  if (c.ell != 0 && c.ell != c.m) throw UnsupportedCase("change-point search requires ell == m");
  SearchSpec spec;
  spec.K = c.K;
  spec.coarse_grid = c.grid_G;
  spec.refine_rounds = c.refine;
  if (c.orientations == "both")
    spec.orientations = {1, -1};
  else
    spec.orientations = {parse_sign(c.orientations, "--orientations")};
  if (spec.K < 0) throw SetupError("--K must be >= 0");
  if (spec.coarse_grid < 2) throw SetupError("--grid-G must be >= 2");
  if (spec.refine_rounds < 0) throw SetupError("--refine must be >= 0");

  const auto result = search(obs, settings, spec);
  json report;
  report["x"] = result.x;
  report["orientation"] = result.orientation;
  report["value"] = result.value;
  json table = json::array();
  for (const auto& cand : result.table) {
    json row{{"x", cand.x}, {"orientation", cand.orientation}};
    row["value"] = cand.failed ? json(nullptr) : json(cand.value);
    if (cand.failed) row["error"] = cand.error;
    table.push_back(row);
  }
  report["table"] = table;
  if (c.K_max >= 0) report["best_by_K"] = best_value_by_K(obs, settings, spec, c.K_max);

  std::ostringstream csv;
  csv << "x,orientation,value\n";
  if (spec.K == 1) {
    std::vector<const Candidate*> rows;
    for (const auto& cand : result.table)
      if (!cand.failed) rows.push_back(&cand);
    std::stable_sort(rows.begin(), rows.end(), [](const Candidate* a, const Candidate* b) {
      return a->orientation != b->orientation ? a->orientation > b->orientation : a->x[0] < b->x[0];
    });
    for (const auto* r : rows)
      csv << format_double(r->x[0]) << ',' << r->orientation << ',' << format_double(r->value) << '\n';
  }

  const std::string js = report.dump(2) + "\n";
  Artifacts a(c.out);
  a.write("search.json", js);
  if (spec.K == 1) a.write("profile.csv", csv.str());
  out << (c.format == "json" ? js : csv.str());
  return kOk;
}

int cmd_halfwidth(const RunConfig& c, std::ostream& out) {
  const auto obs = load(c);
  const auto settings = settings_of(c);
  const auto base = fit(obs, settings, cone_of(c));
  std::vector<std::size_t> probes;
  for (double v : parse_list(c.probes, "--probe")) {
    if (v < 0 || v != std::floor(v) || v >= static_cast<double>(obs.size()))
      throw SetupError("--probe indices must be integers in [0, N)");
    probes.push_back(static_cast<std::size_t>(v));
  }
  if (probes.empty()) probes = {obs.size() / 4, (3 * obs.size()) / 4};
  const auto grid = uniform_grid(c.output_points);
  const std::optional<double> eps = c.epsilon > 0.0 ? std::optional<double>(c.epsilon) : std::nullopt;
  const auto rep = halfwidth_report(base, settings, grid, probes, eps);

  std::ostringstream csv;
  csv << "t,h_eff,h_mse,density\n";
  for (std::size_t i = 0; i < rep.grid.size(); ++i)
    csv << format_double(rep.grid[i]) << ',' << opt_csv(rep.h_eff[i]) << ',' << opt_csv(rep.h_mse[i]) << ','
        << format_double(rep.density[i]) << '\n';

  Artifacts a(c.out);
  json report;
  report["grid"] = rep.grid;
  report["density"] = rep.density;
  json he = json::array(), hm = json::array();
  for (std::size_t i = 0; i < rep.grid.size(); ++i) {
    he.push_back(opt(rep.h_eff[i]));
    hm.push_back(opt(rep.h_mse[i]));
  }
  report["h_eff"] = he;
  report["h_mse"] = hm;
  json probes_js = json::array();
  for (const auto& pr : rep.probes) {
    probes_js.push_back({{"index", pr.index},
                         {"site", pr.site},
                         {"epsilon", pr.epsilon},
                         {"peak_location", pr.peak_location},
                         {"fwhm", opt(pr.fwhm)},
                         {"file", "probe_" + std::to_string(pr.index) + ".csv"}});
    std::ostringstream pcsv;
    pcsv << "t,response\n";
    for (std::size_t i = 0; i < pr.grid.size(); ++i)
      pcsv << format_double(pr.grid[i]) << ',' << format_double(pr.response[i]) << '\n';
    a.write("probe_" + std::to_string(pr.index) + ".csv", pcsv.str());
  }
  report["probes"] = probes_js;

  const std::string js = report.dump(2) + "\n";
  a.write("halfwidth.json", js);
  a.write("halfwidth.csv", csv.str());
  out << (c.format == "json" ? js : csv.str());
  return kOk;
}

int cmd_oracle(const RunConfig& c, std::ostream& out) {
  const auto obs = load(c);
  const auto cone = cone_of(c);
  const DiscretePrimal dp(obs, c.m, c.p, c.lambda, c.grid);
  OracleOptions oo;
  oo.feas_tol = c.oracle_feas_tol;
  oo.allow_any_p = c.allow_any_p;
  const auto primal = solve_primal(dp, &cone, oo);

  json report;
  report["oracle"] = {{"objective", primal.objective},
                      {"max_violation", primal.max_violation},
                      {"penalty_weight", primal.penalty_weight},
                      {"newton_iterations", primal.newton_iterations},
                      {"snap_error", dp.snap_error()}};
  std::optional<double> gap;
  if (cone.ell() == c.m) {
    const auto result = fit(obs, settings_of(c), cone);
    gap = primal.objective + result.dual.objective;
    report["dual"] = {{"objective", result.dual.objective},
                      {"projected_gradient_norm", result.dual.projected_gradient_norm},
                      {"iterations", result.dual.iterations}};
    report["gap"] = *gap;
  } else {
    report["dual"] = nullptr;
    report["gap"] = nullptr;
  }

  std::ostringstream csv;
  csv << "t,f\n";
  for (std::size_t j = 0; j < primal.f.size(); ++j)
    csv << format_double(dp.nodes()[j]) << ',' << format_double(primal.f[j]) << '\n';

  const std::string js = report.dump(2) + "\n";
  Artifacts a(c.out);
  a.write("oracle.json", js);
  a.write("oracle.csv", csv.str());
  if (c.format == "csv") {
    out << csv.str();
  } else {
    out << js;
    if (gap)
      out << "duality gap: " << format_double(*gap) << "\n";
    else
      out << "duality gap: unavailable (no dual solver for ell < m)\n";
  }
  return kOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const auto data = simulate(parse_shape(c.shape), c.n, c.noise_sd, c.seed, parse_list(c.coeffs, "--coeffs"));
  std::ostringstream csv;
  write_dataset(csv, data);
  Artifacts a(c.out);
  a.write("data.csv", csv.str());
  out << csv.str();
  return kOk;
}

void persist_failure(const RunConfig& c, const std::string& what, const ConvergenceError* ce) {
  if (c.out.empty()) return;
  json j{{"error", what}};
  if (ce) {
    j["best_value"] = std::isfinite(ce->best_value()) ? json(ce->best_value()) : json(nullptr);
    j["best_iterate"] = ce->best_iterate();
  }
  try {
    Artifacts(c.out).write("failure.json", j.dump(2) + "\n");
  } catch (const std::exception&) {
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Shape-constrained robust smoothing splines", "shapespline"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--data", c.data, "CSV with columns t,y[,sigma]");
    sub->add_option("--m", c.m, "Derivative order of the penalty");
    sub->add_option("--p", c.p, "Penalty exponent, p in (1, inf)");
    sub->add_option("--lambda", c.lambda, "Smoothing parameter");
    sub->add_option("--grid", c.grid, "Number of quadrature cells M");
    sub->add_option("--grad-tol", c.grad_tol, "Projected-gradient tolerance");
    sub->add_option("--feas-tol", c.feas_tol, "Feasibility tolerance");
    sub->add_option("--max-iter", c.max_iter, "Dual iteration cap");
    sub->add_option("--changepoints", c.changepoints, "Comma-separated change points x1,x2,...");
    sub->add_option("--orientation", c.orientation, "+1 or -1");
    sub->add_option("--ell", c.ell, "Order of the shape constraint (default m)");
    sub->add_option("--loss", c.loss, "quadratic or huber");
    sub->add_option("--huber-c", c.huber_c, "Huber cutoff");
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--format", c.format, "Standard output format: json or csv");
    sub->add_option("--output-points", c.output_points, "Points in the plotting grid");
  };

  auto* fit_cmd = app.add_subcommand("fit", "Fit an estimate for fixed change points");
  common(fit_cmd);
  auto* search_cmd = app.add_subcommand("search-changepoints", "Search change-point locations");
  common(search_cmd);
  search_cmd->add_option("--K", c.K, "Number of change points");
  search_cmd->add_option("--grid-G", c.grid_G, "Coarse grid size");
  search_cmd->add_option("--refine", c.refine, "Refinement rounds");
  search_cmd->add_option("--orientations", c.orientations, "both, +1 or -1");
  search_cmd->add_option("--K-max", c.K_max, "Also tabulate best coarse value for K = 0..K-max");
  auto* hw_cmd = app.add_subcommand("diagnose-halfwidth", "Halfwidth heuristics and influence probes");
  common(hw_cmd);
  hw_cmd->add_option("--probe", c.probes, "Comma-separated observation indices to perturb");
  hw_cmd->add_option("--epsilon", c.epsilon, "Perturbation size (default 1e-3 times data range)");
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare the dual fit with a brute-force primal solve");
  common(oracle_cmd);
  oracle_cmd->add_option("--oracle-feas-tol", c.oracle_feas_tol, "Oracle constraint tolerance");
  oracle_cmd->add_flag("--allow-any-p", c.allow_any_p, "Allow p outside [1.2, 4] in the oracle");
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim_cmd->add_option("--shape", c.shape, "abs_kink, monotone_smooth, convex_quad or custom");
  sim_cmd->add_option("--N", c.n, "Number of points");
  sim_cmd->add_option("--noise-sd", c.noise_sd, "Gaussian noise standard deviation");
  sim_cmd->add_option("--seed", c.seed, "Random seed");
  sim_cmd->add_option("--coeffs", c.coeffs, "Polynomial coefficients c0,c1,... for custom");
  sim_cmd->add_option("--out", c.out, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (!sim_cmd->parsed()) validate(c);
    if (fit_cmd->parsed()) return cmd_fit(c, out);
    if (search_cmd->parsed()) return cmd_search(c, out);
    if (hw_cmd->parsed()) return cmd_halfwidth(c, out);
    if (oracle_cmd->parsed()) return cmd_oracle(c, out);
    return cmd_simulate(c, out);
  } catch (const ConvergenceError& e) {
    err << "solver failure: " << e.what() << "\n";
    persist_failure(c, e.what(), &e);
    return kSolverFailure;
  } catch (const SetupError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const UnsupportedCase& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << "\n";
    persist_failure(c, e.what(), nullptr);
    return kSolverFailure;
  }
}

}  // namespace shapespline::cli
