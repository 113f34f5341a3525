#include <CLI11.hpp>

#include <iostream>

#include "pwsync/commands.hpp"

using namespace pwsync;

int main(int argc, char** argv) {
  CLI::App app{"Synchronization bounds and simulation for networks of piecewise-smooth systems"};
  app.require_subcommand(1);

  std::string scenario_name;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  commands::Overrides ov;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario_name, "built-in name or YAML path")->required();
    sub->add_option("--seed", seed, "scenario seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--dt", ov.dt, "integration step");
    sub->add_option("--t-end", ov.t_end, "horizon");
    sub->add_option("--c", ov.gain, "coupling gain");
  };

  auto* certify = app.add_subcommand("certify", "compute c_tilde and eps_bar");
  common(certify);
  bool write = false;
  certify->add_flag("--write", write, "also write report.txt and report.json to --out");

  auto* simulate = app.add_subcommand("simulate", "integrate and write CSV plus report");
  common(simulate);

  auto* sweep = app.add_subcommand("sweep", "eps_hat and eps_bar over a gain grid");
  common(sweep);
  double c_min = 1.0, c_max = 100.0;
  std::size_t n_points = 20;
  std::string grid = "log";
  sweep->add_option("--c-min", c_min)->capture_default_str();
  sweep->add_option("--c-max", c_max)->capture_default_str();
  sweep->add_option("--n-points", n_points)->capture_default_str();
  sweep->add_option("--grid", grid)->check(CLI::IsMember({"lin", "log"}))->capture_default_str();

  auto* list = app.add_subcommand("list", "list built-in scenarios");
  auto* show = app.add_subcommand("show", "print a built-in scenario as YAML");
  std::string show_name;
  show->add_option("name", show_name)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& n : scenario::builtin_names()) std::cout << n << "\n";
      return commands::kOk;
    }
    if (show->parsed()) {
      std::cout << scenario::builtin_yaml(show_name);
      return commands::kOk;
    }
    auto s = scenario::load_scenario(scenario_name, seed);
    commands::apply(s, ov);
    if (certify->parsed())
      return commands::cmd_certify(s, std::cout,
                                   write ? std::optional<std::filesystem::path>(out_dir) : std::nullopt);
    if (simulate->parsed()) return commands::cmd_simulate(s, out_dir, std::cout);
    if (sweep->parsed())
      return commands::cmd_sweep(s, c_min, c_max, n_points, grid == "log", out_dir, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return commands::kError;
  }
  return commands::kError;
}
