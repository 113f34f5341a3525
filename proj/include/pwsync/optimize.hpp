#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "pwsync/linalg.hpp"

namespace pwsync::optimize {

using Objective = std::function<double(std::span<const double>)>;

struct NelderMeadOptions {
  int max_evaluations = 4000;
  double f_tol = 1e-13;
  double x_tol = 1e-11;
  double initial_step = 0.5;
  // Re-seed the simplex around the incumbent this many times after
  // convergence; cheap way out of premature collapse on kinked objectives.
  int restarts = 2;
};

struct Minimum {
  Vec x;
  double value = 0.0;
  int evaluations = 0;
  std::size_t start_index = 0;
};

Minimum nelder_mead(const Objective& f, Vec x0, const NelderMeadOptions& opts = {});

struct MultiStartOptions {
  int starts = 20;
  std::uint64_t seed = 1;
  Vec lower;  // start box
  Vec upper;
  NelderMeadOptions local;
  bool parallel = true;
};

// Runs `starts` independent local searches from seeded uniform points in
// [lower, upper] and reduces by (value, start index), so the result does not
// depend on scheduling.
Minimum multistart_nelder_mead(const Objective& f, const MultiStartOptions& opts);

}  // namespace pwsync::optimize
