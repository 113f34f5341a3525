#include "pwsync/commands.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <ostream>

#include "pwsync/report.hpp"

namespace pwsync::commands {

namespace {

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", (dir / name).string()));
  f.exceptions(std::ios::badbit | std::ios::failbit);
  return f;
}

// Absolute slack for comparing a sampled error against an exact zero bound.
constexpr double kRoundoff = 1e-12;

std::string num(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.10g}", v);
}

struct CertOutcome {
  std::optional<certify::BoundReport> report;
  std::string error;
};

CertOutcome try_certify(const scenario::Scenario& s, const scenario::Realized& r) {
  try {
    return {scenario::certify_scenario(s, r), {}};
  } catch (const PreconditionError& e) {
    return {std::nullopt, e.what()};
  }
}

}  // namespace

void apply(scenario::Scenario& s, const Overrides& o) {
  if (o.dt) s.sim.dt = *o.dt;
  if (o.t_end) s.sim.t_end = *o.t_end;
  if (o.gain) s.coupling.gain = *o.gain;
  s.validate();
}

int cmd_certify(const scenario::Scenario& s, std::ostream& log,
                const std::optional<std::filesystem::path>& out_dir) {
  const auto r = scenario::realize(s);
  const auto rep = scenario::certify_scenario(s, r);
  const std::string text = scenario::header(s) + report::to_text(rep);
  log << text;
  if (out_dir) {
    open_out(*out_dir, "report.txt") << text;
    nlohmann::json j = report::to_json(rep);
    j["scenario"] = s.name;
    j["seed"] = s.seed;
    open_out(*out_dir, "report.json") << j.dump(2) << "\n";
  }
  return rep.hypotheses_hold() ? kOk : kHypothesesFailed;
}

int cmd_simulate(const scenario::Scenario& s, const std::filesystem::path& out_dir,
                 std::ostream& log) {
  const auto r = scenario::realize(s);
  auto traj = sim::integrate(r.fields, r.topology, r.coupling, r.x0, s.sim);
  traj.meta["scenario"] = s.name;
  const auto err = sim::error_series(traj);
  const double eps_hat = sim::steady_state_eps(err, s.sim.tail_fraction);
  const auto cert = try_certify(s, r);

  const std::string head = scenario::header(s);
  {
    auto f = open_out(out_dir, "trajectory.csv");
    f << head;
    sim::write_trajectory_csv(f, traj);
  }
  {
    auto f = open_out(out_dir, "error.csv");
    f << head;
    sim::write_error_csv(f, err);
  }

  std::string summary = fmt::format("eps_hat: {}\ndiverged: {}\nlast_valid_time: {}\n", num(eps_hat),
                                    traj.diverged ? "yes" : "no", num(traj.last_valid_time));
  nlohmann::json j;
  j["scenario"] = s.name;
  j["seed"] = s.seed;
  j["eps_hat"] = report::number(eps_hat);
  j["diverged"] = traj.diverged;
  for (const auto& [k, v] : traj.meta) j["meta"][k] = v;
  if (cert.report) {
    const double eb = cert.report->eps_bar;
    const bool within = eps_hat <= eb + kRoundoff;
    summary += fmt::format("eps_bar: {}\neps_hat_within_eps_bar: {}\n", num(eb), within ? "yes" : "no");
    j["report"] = report::to_json(*cert.report);
    j["eps_hat_within_eps_bar"] = within;
  } else {
    summary += fmt::format("certification: unavailable ({})\n", cert.error);
    j["report"] = nullptr;
    j["certification_error"] = cert.error;
  }
  const std::string text =
      head + (cert.report ? report::to_text(*cert.report) : std::string()) + summary;
  open_out(out_dir, "report.txt") << text;
  open_out(out_dir, "report.json") << j.dump(2) << "\n";
  log << summary;
  return traj.diverged ? kDiverged : kOk;
}

sim::SweepRow evaluate_gain(const scenario::Scenario& s, const scenario::Realized& r, double c) {
  const auto coupling = with_gain(r.coupling, c);
  const auto traj = sim::integrate(r.fields, r.topology, coupling, r.x0, s.sim);
  const auto err = sim::error_series(traj);
  sim::SweepRow row;
  row.c = c;
  row.eps_hat = sim::steady_state_eps(err, s.sim.tail_fraction);
  row.diverged = traj.diverged;
  scenario::Scenario sc = s;
  sc.coupling.gain = c;
  scenario::Realized rc{r.topology, r.laplacian, r.fields, coupling, r.x0};
  const auto cert = try_certify(sc, rc);
  row.eps_bar = cert.report ? cert.report->eps_bar : certify::kInf;
  row.certified = cert.report && cert.report->certified();
  return row;
}

int cmd_sweep(const scenario::Scenario& s, double c_min, double c_max, std::size_t n_points,
              bool logarithmic, const std::filesystem::path& out_dir, std::ostream& log) {
  const auto grid = sim::gain_grid(c_min, c_max, n_points, logarithmic);
  const auto r = scenario::realize(s);
  const auto rows = sim::sweep_coupling([&](double c) { return evaluate_gain(s, r, c); }, grid);
  {
    auto f = open_out(out_dir, "sweep.csv");
    f << scenario::header(s) << fmt::format("# grid: {} {} points\n", logarithmic ? "log" : "lin", n_points);
    sim::write_sweep_csv(f, rows);
  }
  nlohmann::json j;
  j["scenario"] = s.name;
  j["seed"] = s.seed;
  j["grid"] = logarithmic ? "log" : "lin";
  auto arr = nlohmann::json::array();
  bool any_diverged = false;
  for (const auto& row : rows) {
    arr.push_back({{"c", row.c},
                   {"eps_hat", report::number(row.eps_hat)},
                   {"eps_bar", report::number(row.eps_bar)},
                   {"certified", row.certified},
                   {"diverged", row.diverged}});
    any_diverged = any_diverged || row.diverged;
    log << fmt::format("c={} eps_hat={} eps_bar={} certified={}\n", num(row.c), num(row.eps_hat),
                       num(row.eps_bar), row.certified ? "yes" : "no");
  }
  j["rows"] = arr;
  open_out(out_dir, "report.json") << j.dump(2) << "\n";
  return any_diverged ? kDiverged : kOk;
}

}  // namespace pwsync::commands
