#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pwsync/coupling.hpp"
#include "pwsync/dynamics.hpp"
#include "pwsync/graph.hpp"

namespace pwsync::sim {

struct SimConfig {
  double dt = 1e-3;
  double t_end = 10.0;
  double regularization_width = 0.0;  // 0 keeps the raw sgn
  double tail_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;  // stacked N*n per instant
  std::size_t n_nodes = 0;
  std::size_t dim = 0;
  bool diverged = false;
  double last_valid_time = 0.0;
  std::map<std::string, std::string> meta;
};

struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> norms;
  std::vector<Vec> components;  // stacked e_i per instant
  std::size_t n_nodes = 0;
  std::size_t dim = 0;
  bool diverged = false;
};

// Classical RK4 on the stacked coupled system. Delayed terms read a ring
// buffer with linear interpolation and constant pre-history x0. Integration
// stops with `diverged` set on a non-finite state or ||x|| > 1e12.
Trajectory integrate(std::span<const dynamics::AffineDecomposedField> fields,
                     const graph::Topology& topo, const CouplingSpec& coupling,
                     std::span<const double> x0, const SimConfig& config);

ErrorSeries error_series(const Trajectory& traj);

// Max of ||e|| over the final tail_fraction of the horizon; +inf for a
// diverged run.
double steady_state_eps(const ErrorSeries& series, double tail_fraction);

struct SweepRow {
  double c = 0.0;
  double eps_hat = 0.0;
  double eps_bar = 0.0;
  bool certified = false;
  bool diverged = false;
};

// Evaluates one row per gain; rows run concurrently and are merged in input
// order.
using SweepRunner = std::function<SweepRow(double c)>;
std::vector<SweepRow> sweep_coupling(const SweepRunner& run, std::span<const double> c_values,
                                     bool parallel = true);

std::vector<double> gain_grid(double c_min, double c_max, std::size_t n_points, bool logarithmic);

// CSV with 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_error_csv(std::ostream& out, const ErrorSeries& series);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace pwsync::sim
