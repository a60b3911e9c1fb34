#include "shapespline/changepoint.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "shapespline/errors.hpp"

namespace shapespline {

double profile_objective(const Observations& obs, const FitSettings& settings, std::span<const double> points,
                         int orientation) {
  std::vector<double> x(points.begin(), points.end());
  ChangePointConfig config(settings.m, std::move(x), orientation);
  const DualProblem problem(obs, SobolevParams::make(settings.m, settings.p), settings.lambda, config,
                            settings.grid_cells);
  return -solve_dual(problem, settings.dual).objective;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("SHAPESPLINE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void evaluate(const Observations& obs, const FitSettings& settings, Candidate& c) {
  try {
    c.value = profile_objective(obs, settings, c.x, c.orientation);
  } catch (const std::exception& e) {
    c.failed = true;
    c.value = std::numeric_limits<double>::infinity();
    c.error = e.what();
  }
}

/// Evaluates candidates concurrently; results land at their own index.
void evaluate_all(const Observations& obs, const FitSettings& settings, std::vector<Candidate>& cands,
                  unsigned threads) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cands.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cands.size(); i = next++) evaluate(obs, settings, cands[i]);
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
}

void ordered_tuples(int K, int G, std::vector<int>& cur, std::vector<std::vector<double>>& out) {
  if (static_cast<int>(cur.size()) == K) {
    std::vector<double> x;
    for (int k : cur) x.push_back(static_cast<double>(k) / (G - 1));
    out.push_back(std::move(x));
    return;
  }
  const int start = cur.empty() ? 0 : cur.back();
  for (int k = start; k < G; ++k) {
    cur.push_back(k);
    ordered_tuples(K, G, cur, out);
    cur.pop_back();
  }
}

std::vector<Candidate> coarse_candidates(const SearchSpec& spec, int K) {
  if (spec.coarse_grid < 2 && K > 0) throw SetupError("coarse grid needs at least two points");
  std::vector<std::vector<double>> tuples;
  std::vector<int> cur;
  ordered_tuples(K, std::max(spec.coarse_grid, 2), cur, tuples);
  std::vector<Candidate> cands;
  for (int o : spec.orientations) {
    if (o != 1 && o != -1) throw SetupError("orientation must be +1 or -1");
    for (const auto& x : tuples) cands.push_back(Candidate{x, o, 0.0, false, {}});
  }
  return cands;
}

const Candidate* best_of(const std::vector<Candidate>& cands) {
  const Candidate* best = nullptr;
  for (const auto& c : cands) {
    if (c.failed) continue;
    if (best == nullptr || c.value < best->value) best = &c;
  }
  return best;
}

}  // namespace

SearchResult search(const Observations& obs, const FitSettings& settings, const SearchSpec& spec) {
  if (spec.K < 0) throw SetupError("number of change points K must be >= 0");
  if (spec.orientations.empty()) throw SetupError("no orientation to search");
  const unsigned threads = spec.threads ? spec.threads : default_thread_count();

  SearchResult result;
  result.table = coarse_candidates(spec, spec.K);
  evaluate_all(obs, settings, result.table, threads);
  const Candidate* best = best_of(result.table);
  if (best == nullptr) throw ConvergenceError("change-point search: every candidate failed", {}, 0.0);
  Candidate incumbent = *best;

  const double cell = spec.coarse_grid > 1 ? 1.0 / (spec.coarse_grid - 1) : 1.0;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int round = 0; round < spec.refine_rounds && spec.K > 0; ++round) {
    const double reach = cell / std::pow(2.0, round);
    for (int k = 0; k < spec.K; ++k) {
      const double lo_order = k == 0 ? 0.0 : incumbent.x[k - 1];
      const double hi_order = k + 1 == spec.K ? 1.0 : incumbent.x[k + 1];
      double a = std::clamp(incumbent.x[k] - reach, lo_order, hi_order);
      double b = std::clamp(incumbent.x[k] + reach, lo_order, hi_order);
      if (b <= a) continue;

      auto probe = [&](double xk) {
        Candidate c = incumbent;
        c.x[k] = std::clamp(xk, lo_order, hi_order);
        c.failed = false;
        c.error.clear();
        evaluate(obs, settings, c);
        result.table.push_back(c);
        if (!c.failed && c.value < incumbent.value) incumbent = c;
        return c.value;
      };

      double c1 = b - invphi * (b - a);
      double c2 = a + invphi * (b - a);
      double f1 = probe(c1);
      double f2 = probe(c2);
      for (int step = 2; step < spec.golden_steps; ++step) {
        if (f1 <= f2) {
          b = c2;
          c2 = c1;
          f2 = f1;
          c1 = b - invphi * (b - a);
          f1 = probe(c1);
        } else {
          a = c1;
          c1 = c2;
          f1 = f2;
          c2 = a + invphi * (b - a);
          f2 = probe(c2);
        }
      }
    }
  }

  result.x = incumbent.x;
  result.orientation = incumbent.orientation;
  result.value = incumbent.value;
  return result;
}

std::vector<double> best_value_by_K(const Observations& obs, const FitSettings& settings, const SearchSpec& spec,
                                    int K_max) {
  const unsigned threads = spec.threads ? spec.threads : default_thread_count();
  std::vector<double> out;
  for (int K = 0; K <= K_max; ++K) {
    auto cands = coarse_candidates(spec, K);
    evaluate_all(obs, settings, cands, threads);
    const Candidate* best = best_of(cands);
    out.push_back(best ? best->value : std::numeric_limits<double>::infinity());
  }
  return out;
}

}  // namespace shapespline
