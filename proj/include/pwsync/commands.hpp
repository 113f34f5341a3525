#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "pwsync/scenario.hpp"

namespace pwsync::commands {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kHypothesesFailed = 2;
inline constexpr int kDiverged = 3;

struct Overrides {
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<double> gain;
};

void apply(scenario::Scenario& s, const Overrides& o);

// Prints the rendered report; writes report.txt/report.json when out_dir is
// set. Returns kOk or kHypothesesFailed.
int cmd_certify(const scenario::Scenario& s, std::ostream& log,
                const std::optional<std::filesystem::path>& out_dir = {});

// trajectory.csv, error.csv, report.txt, report.json under out_dir.
int cmd_simulate(const scenario::Scenario& s, const std::filesystem::path& out_dir,
                 std::ostream& log);

// sweep.csv (and report.json with the rows) under out_dir.
int cmd_sweep(const scenario::Scenario& s, double c_min, double c_max, std::size_t n_points,
              bool logarithmic, const std::filesystem::path& out_dir, std::ostream& log);

// One sweep row: simulate and certify at gain c.
sim::SweepRow evaluate_gain(const scenario::Scenario& s, const scenario::Realized& r, double c);

}  // namespace pwsync::commands
