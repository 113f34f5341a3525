#include "pwsync/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace pwsync::optimize {

namespace {

double safe_eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

Minimum nelder_mead_once(const Objective& f, const Vec& x0, double step,
                         const NelderMeadOptions& opts, int& evals) {
  const std::size_t n = x0.size();
  std::vector<Vec> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  Vec vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = safe_eval(f, pts[i]);
  evals += static_cast<int>(n + 1);

  std::vector<std::size_t> order(n + 1);
  Vec centroid(n), trial(n), trial2(n);

  while (evals < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double spread_x = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        spread_x = std::max(spread_x, std::abs(pts[i][k] - pts[best][k]));
    const double spread_f = std::abs(vals[worst] - vals[best]);
    if (spread_x < opts.x_tol ||
        (std::isfinite(vals[worst]) &&
         spread_f <= opts.f_tol * (std::abs(vals[best]) + opts.f_tol)))
      break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);

    auto along = [&](double coef, Vec& out) {
      for (std::size_t k = 0; k < n; ++k)
        out[k] = centroid[k] + coef * (pts[worst][k] - centroid[k]);
      ++evals;
      return safe_eval(f, out);
    };

    const double f_r = along(-1.0, trial);
    if (f_r < vals[best]) {
      const double f_e = along(-2.0, trial2);
      if (f_e < f_r) {
        pts[worst] = trial2;
        vals[worst] = f_e;
      } else {
        pts[worst] = trial;
        vals[worst] = f_r;
      }
    } else if (f_r < vals[second]) {
      pts[worst] = trial;
      vals[worst] = f_r;
    } else {
      const bool outside = f_r < vals[worst];
      const double f_c = along(outside ? -0.5 : 0.5, trial2);
      if (f_c < (outside ? f_r : vals[worst])) {
        pts[worst] = trial2;
        vals[worst] = f_c;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k)
            pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
          vals[i] = safe_eval(f, pts[i]);
          ++evals;
        }
      }
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  const auto idx = static_cast<std::size_t>(it - vals.begin());
  return {pts[idx], *it, evals, 0};
}

}  // namespace

Minimum nelder_mead(const Objective& f, Vec x0, const NelderMeadOptions& opts) {
  int evals = 0;
  if (x0.empty()) {
    ++evals;
    return {x0, safe_eval(f, x0), evals, 0};
  }
  Minimum best = nelder_mead_once(f, x0, opts.initial_step, opts, evals);
  double step = opts.initial_step;
  for (int r = 0; r < opts.restarts && evals < opts.max_evaluations; ++r) {
    step *= 0.5;
    Minimum again = nelder_mead_once(f, best.x, step, opts, evals);
    if (again.value < best.value) best = std::move(again);
  }
  best.evaluations = evals;
  return best;
}

Minimum multistart_nelder_mead(const Objective& f, const MultiStartOptions& opts) {
  const std::size_t dim = opts.lower.size();
  if (opts.upper.size() != dim) throw ValidationError("multistart: box bounds differ in size");
  if (opts.starts < 1) throw ValidationError("multistart: need at least one start");

  std::mt19937_64 rng(opts.seed);
  std::vector<Vec> starts(static_cast<std::size_t>(opts.starts), Vec(dim));
  for (auto& s : starts)
    for (std::size_t k = 0; k < dim; ++k) {
      std::uniform_real_distribution<double> u(opts.lower[k], opts.upper[k]);
      s[k] = u(rng);
    }

  std::vector<Minimum> results(starts.size());
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (opts.parallel && workers > 1 && starts.size() > 1) {
    std::vector<std::future<Minimum>> futs;
    futs.reserve(starts.size());
    for (const auto& s : starts)
      futs.push_back(std::async(std::launch::async, [&f, s, &opts] {
        return nelder_mead(f, s, opts.local);
      }));
    for (std::size_t i = 0; i < futs.size(); ++i) results[i] = futs[i].get();
  } else {
    for (std::size_t i = 0; i < starts.size(); ++i)
      results[i] = nelder_mead(f, starts[i], opts.local);
  }

  std::size_t best = 0;
  int total = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    total += results[i].evaluations;
    if (results[i].value < results[best].value) best = i;
  }
  Minimum out = results[best];
  out.start_index = best;
  out.evaluations = total;
  return out;
}

}  // namespace pwsync::optimize
