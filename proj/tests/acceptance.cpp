// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pwsync/commands.hpp"

using namespace pwsync;

namespace {

struct Check {
  std::string what;
  bool ok;
};

class Criterion {
 public:
  explicit Criterion(std::string title) : title_(std::move(title)) {}

  void check(bool ok, std::string what) { checks_.push_back({std::move(what), ok}); }

  // budget <= 0: no runtime requirement, time is only printed.
  bool report(double seconds, double budget) {
    if (budget > 0.0) check(seconds < budget, fmt::format("runtime {:.2f} s < {} s", seconds, budget));
    else check(true, fmt::format("runtime {:.2f} s", seconds));
    bool ok = true;
    std::string detail;
    for (const auto& c : checks_) {
      ok = ok && c.ok;
      detail += fmt::format("\n    [{}] {}", c.ok ? "ok" : "FAILED", c.what);
    }
    std::cout << (ok ? "PASS " : "FAIL ") << title_ << detail << "\n";
    return ok;
  }

 private:
  std::string title_;
  std::vector<Check> checks_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

scenario::Scenario with_gain(const std::string& name, double c) {
  auto s = scenario::load_scenario(name);
  s.coupling.gain = c;
  return s;
}

struct Run {
  certify::BoundReport report;
  sim::ErrorSeries errors;
  double eps_hat;
};

Run run(const scenario::Scenario& s) {
  const auto r = scenario::realize(s);
  auto rep = scenario::certify_scenario(s, r);
  auto err = sim::error_series(sim::integrate(r.fields, r.topology, r.coupling, r.x0, s.sim));
  const double eh = sim::steady_state_eps(err, s.sim.tail_fraction);
  return {std::move(rep), std::move(err), eh};
}

// ---------------------------------------------------------------------------

bool criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Criterion c("1 chua certificate optimisation");
  const auto s = scenario::load_scenario("chua10");
  const auto r = scenario::realize(s);
  const double l2 = graph::lambda2(r.laplacian);
  const auto res = certify::theorem2_ctilde(certify::chua_family(s.nodes.chua), r.laplacian,
                                            s.coupling.gamma);
  c.check(std::abs(l2 - 2.22) < 1e-3, fmt::format("lambda2 = {:.6f} (2.22 +- 1e-3)", l2));
  c.check(std::abs(res.objective - 14.17) <= 0.005 * 14.17,
          fmt::format("objective minimum = {:.5f} (14.17 +- 0.5%)", res.objective));
  c.check(std::abs(res.c_tilde - 6.4) <= 0.05,
          fmt::format("c_tilde = {:.5f} (6.4 +- 0.05)", res.c_tilde));
  return c.report(seconds_since(t0), 5.0);
}

bool criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  Criterion c("2 relay pipeline");
  const auto s = scenario::load_scenario("relay5");
  const double lmax = lambda_max_sym(s.nodes.relay.A);
  c.check(std::abs(lmax - 50.0) <= 1e-9,
          fmt::format("lambda_max(sym A) = {:.10f} (50 +- 1e-9)", lmax));
  const auto out = run(s);
  c.check(std::abs(out.report.lambda2 - 2.0) <= 1e-9,
          fmt::format("lambda2 = {:.12f} (2 +- 1e-9)", out.report.lambda2));
  c.check(out.report.c_tilde == 25.0, fmt::format("c_tilde = {:.10f} (exactly 25)", out.report.c_tilde));
  c.check(s.coupling.gain == 50.0 && s.sim.dt == 1e-5 && s.sim.t_end == 0.2,
          fmt::format("run at c = {}, dt = {}, t_end = {}", s.coupling.gain, s.sim.dt, s.sim.t_end));
  c.check(out.report.certified(), "corollary hypotheses hold at c = 50");
  c.check(out.eps_hat <= 0.25, fmt::format("eps_hat = {:.3e} <= 0.25", out.eps_hat));
  c.check(out.eps_hat <= out.report.eps_bar,
          fmt::format("eps_hat = {:.3e} <= eps_bar = {:.6f}", out.eps_hat, out.report.eps_bar));
  return c.report(seconds_since(t0), 60.0);
}

bool criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  Criterion c("3 kuramoto ring");
  const double l2 = graph::lambda2(graph::build_laplacian(graph::ring(4)));
  c.check(std::abs(l2 - 2.0) <= 1e-9, fmt::format("ring-4 lambda2 = {:.12f} (2 +- 1e-9)", l2));
  const auto ups = certify::certify_upsilon_scalar(sine_coupling(), std::numbers::pi / 3.0);
  c.check(std::abs(ups.upsilon - 0.8270) <= 1e-3,
          fmt::format("upsilon(sin, pi/3) = {:.6f} (0.8270 +- 1e-3)", ups.upsilon));

  const auto s = scenario::load_scenario("kuramoto4");
  const auto out = run(s);
  const auto& rep = out.report;
  c.check(std::abs(rep.M_bar - 0.316) <= 1e-12, fmt::format("M_bar = {:.6f}", rep.M_bar));
  c.check(std::abs(rep.c_tilde - 0.73) <= 0.01, fmt::format("c_tilde = {:.5f} (0.73 +- 0.01)", rep.c_tilde));
  c.check(out.eps_hat <= rep.eps_bar,
          fmt::format("c = 0.75: eps_hat = {:.5f} <= eps_bar = {:.5f}", out.eps_hat, rep.eps_bar));
  // Direct arithmetic: M_bar sqrt(N) / (c lambda2 upsilon).
  const double hand = 0.316 * 2.0 / (0.75 * 2.0 * (std::sin(std::numbers::pi / 3) / (std::numbers::pi / 3)));
  c.check(std::abs(rep.eps_bar - hand) <= 0.05 * hand,
          fmt::format("eps_bar = {:.5f} vs hand arithmetic {:.5f} (5%)", rep.eps_bar, hand));

  const auto free = run(with_gain("kuramoto4", 0.0));
  const auto& n = free.errors.norms;
  const auto& t = free.errors.times;
  bool growing = true;
  const std::size_t step = n.size() / 8;
  for (std::size_t k = step; k < n.size(); k += step) growing = growing && n[k] > n[k - step];
  const double rate = (n.back() - n[n.size() / 2]) / (t.back() - t[t.size() / 2]);
  c.check(growing && rate > 0.1,
          fmt::format("uncoupled: ||e|| grows monotonically, {:.3f} -> {:.3f}, rate {:.4f}/s", n.front(),
                      n.back(), rate));
  return c.report(seconds_since(t0), 10.0);
}

bool criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  Criterion c("4 ikeda network");
  const auto s = scenario::load_scenario("ikeda10-linear");
  const auto r = scenario::realize(s);
  c.check(graph::is_connected(r.topology) && r.fields.size() == 10, "10-node seeded connected graph");
  bool within = true;
  for (const auto& p : s.nodes.ikeda)
    within = within && std::abs(p.a - 1) <= 0.25 && std::abs(p.b - 4) <= 0.25 && std::abs(p.tau - 2) <= 0.25;
  c.check(within, "parameter mismatches within +-0.25");

  const auto single = run(s);
  const auto& n = single.errors.norms;
  const std::size_t len = n.size();
  double prev = 0.0;
  for (std::size_t k = len * 6 / 10; k < len * 8 / 10; ++k) prev = std::max(prev, n[k]);
  const bool stable = std::isfinite(single.eps_hat) && single.eps_hat <= 2.0 * prev;
  c.check(stable, fmt::format("c = 20: tail eps_hat = {:.4f}, previous window {:.4f}", single.eps_hat, prev));
  c.check(single.eps_hat <= single.report.eps_bar,
          fmt::format("c = 20: eps_hat <= eps_bar = {:.4f}", single.report.eps_bar));

  const auto grid = sim::gain_grid(1.0, 100.0, 20, true);
  const auto rows = sim::sweep_coupling(
      [&](double g) { return commands::evaluate_gain(s, r, g); }, grid);
  bool eb_dec = true, eh_ok = true;
  double worst = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    eb_dec = eb_dec && rows[k].eps_bar < rows[k - 1].eps_bar;
    const double ratio = rows[k].eps_hat / rows[k - 1].eps_hat;
    worst = std::max(worst, ratio);
    eh_ok = eh_ok && ratio <= 1.10;
  }
  c.check(eb_dec, fmt::format("sweep c in [1, 100], 20 points: eps_bar strictly decreasing ({:.3f} -> {:.3f})",
                              rows.front().eps_bar, rows.back().eps_bar));
  c.check(eh_ok, fmt::format("eps_hat non-increasing within 10% (worst step ratio {:.3f}, {:.4f} -> {:.4f})",
                             worst, rows.front().eps_hat, rows.back().eps_hat));

  const auto nls = scenario::load_scenario("ikeda10-nonlinear");
  const auto nl = run(nls);
  const double ups = std::get<NonlinearCoupling>(scenario::realize(nls).coupling).upsilon.front();
  c.check(ups >= 0.749, fmt::format("nonlinear coupling: certified upsilon = {:.6f} >= 0.749", ups));
  c.check(std::isfinite(nl.eps_hat) && nl.eps_hat <= nl.report.eps_bar,
          fmt::format("nonlinear coupling c = 20: eps_hat = {:.4f} <= eps_bar = {:.4f}", nl.eps_hat,
                      nl.report.eps_bar));
  return c.report(seconds_since(t0), 120.0);
}

bool criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  Criterion c("5 property suite");

  // (a)
  {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(2, 6);
    std::uniform_real_distribution<double> weight(0.1, 3.0);
    std::bernoulli_distribution keep(0.6);
    int done = 0;
    double worst = 0.0;
    while (done < 100) {
      const std::size_t n = static_cast<std::size_t>(size(rng));
      Matrix w(n, n);
      oracle::Mat wr(n, std::vector<double>(n, 0.0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (keep(rng)) w(i, j) = w(j, i) = wr[i][j] = wr[j][i] = weight(rng);
      const graph::Topology t(w);
      if (!graph::is_connected(t)) continue;
      const double ref = oracle::kth_eigenvalue(oracle::laplacian(wr), 1);
      worst = std::max(worst, std::abs(graph::lambda2(graph::build_laplacian(t)) - ref));
      ++done;
    }
    c.check(worst <= 1e-8, fmt::format("(a) lambda2 vs inertia oracle, 100 graphs n <= 6: max diff {:.2e}", worst));
  }
  // (b)
  {
    const dynamics::RelayParams rp;
    const auto h = dynamics::relay_field(rp).h;
    const Vec ones(3, 1.0);
    const auto cert = certify::quad_linear_cert(rp.A, ones);
    const auto sound = certify::check_quad_sampled(h, cert, 10.0, 1000000, 17);
    c.check(sound.holds && sound.samples == 1000000, "(b) analytic certificate: no witness in 1e6 samples");
    auto weak = cert;
    for (double& w : weak.w) w -= 1.0;
    const auto refuted = certify::check_quad_sampled(h, weak, 10.0, 10000, 18);
    c.check(!refuted.holds, "(b) W = lambda_max - 1: witness found within 1e4 samples");
  }
  // (c)
  {
    const auto s = scenario::load_scenario("relay5");
    const auto r = scenario::realize(s);
    const Vec p{0.5, 1.0, 0.8};
    const auto cert = certify::quad_linear_cert(s.nodes.relay.A, p);
    const double l2 = graph::lambda2(r.laplacian);
    const double ct = certify::ctilde_objective(cert, l2, s.coupling.gamma);
    const double eb = certify::theorem2_epsbar(cert, r.laplacian, s.coupling.gamma, 80.0, 2.0);
    double worst = 0.0;
    for (double alpha : {0.1, 10.0}) {
      const auto sc = cert.scaled(alpha);
      worst = std::max(worst, std::abs(certify::ctilde_objective(sc, l2, s.coupling.gamma) - ct) / ct);
      worst = std::max(worst, std::abs(certify::theorem2_epsbar(sc, r.laplacian, s.coupling.gamma, 80.0, 2.0) - eb) / eb);
    }
    c.check(worst <= 1e-9, fmt::format("(c) c_tilde, eps_bar scale invariance: max rel diff {:.2e}", worst));
  }
  // (d)
  {
    std::vector<dynamics::AffineDecomposedField> f;
    for (double w : {0.3, -0.1, 0.5, 0.2}) f.push_back(dynamics::kuramoto_error_field({w}, 0.0));
    const auto topo = graph::ring(4);
    const NonlinearCoupling nc{0.8, {sine_coupling()}, {0.8}, 3.0};
    const Vec x0{0.5, -0.7, 1.1, 0.0};
    auto final_state = [&](double dt) { return sim::integrate(f, topo, nc, x0, {dt, 2.0}).states.back(); };
    const Vec ref = final_state(0.1 / 128.0);
    auto err = [&](double dt) {
      const Vec x = final_state(dt);
      double e = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) e = std::max(e, std::abs(x[i] - ref[i]));
      return e;
    };
    const double ratio = err(0.1) / err(0.05);
    c.check(ratio >= 14.0, fmt::format("(d) RK4 error reduction on dt halving = {:.2f} >= 14", ratio));
  }
  // (e)
  {
    const auto s = scenario::load_scenario("contract");
    const auto out = run(s);
    double t_hit = -1.0;
    for (std::size_t k = 0; k < out.errors.norms.size(); ++k)
      if (out.errors.norms[k] < 1e-6) {
        t_hit = out.errors.times[k];
        break;
      }
    c.check(t_hit >= 0.0 && t_hit < s.sim.t_end,
            fmt::format("(e) contracting nodes: ||e|| < 1e-6 at t = {:.3f} (t_end {})", t_hit, s.sim.t_end));
  }
  return c.report(seconds_since(t0), 0.0);
}

}  // namespace

int main() {
  const std::vector<std::function<bool()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                    criterion5};
  int failed = 0;
  for (const auto& crit : criteria) {
    try {
      if (!crit()) ++failed;
    } catch (const std::exception& e) {
      std::cout << "FAIL criterion raised: " << e.what() << "\n";
      ++failed;
    }
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
