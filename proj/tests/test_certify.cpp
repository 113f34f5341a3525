#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pwsync/certify.hpp"

using namespace pwsync;
using namespace pwsync::certify;

namespace {

const dynamics::RelayParams kRelay{};

graph::Laplacian relay_laplacian() {
  const std::vector<graph::Topology::Edge> e{{0, 1, 1}, {0, 3, 1}, {0, 4, 1}, {1, 2, 1},
                                             {1, 3, 1}, {1, 4, 1}, {2, 3, 1}, {3, 4, 1}};
  return graph::build_laplacian(graph::Topology::from_edges(5, e));
}

double relay_lambda_max_oracle() {
  const auto& a = kRelay.A;
  oracle::Mat s(3, std::vector<double>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s[i][j] = 0.5 * (a(i, j) + a(j, i));
  return oracle::sym3_lambda_max(s);
}

graph::Laplacian scaled_to(const graph::Topology& t, double target) {
  const double l2 = graph::lambda2(graph::build_laplacian(t));
  return graph::build_laplacian(t.scaled(target / l2));
}

// Closed-form infimum of the Chua objective: with p3 = 1 and p1 = t the
// best split is rho = (alpha t + beta)/(2 beta), giving
// f(t) = alpha(-1 - a) t / min(t,1) + (alpha t + beta)^2 / (4 beta min(t,1)),
// minimised at t = 1 for the nominal parameters.
double chua_objective_oracle(const dynamics::ChuaParams& p) {
  const double s = p.alpha + p.beta;
  return p.alpha * (-1.0 - std::min(p.slope_a, p.slope_b)) + s * s / (4.0 * p.beta);
}

std::vector<dynamics::AffineDecomposedField> relay_nodes(std::size_t n) {
  return std::vector<dynamics::AffineDecomposedField>(n, dynamics::relay_field(kRelay));
}

}  // namespace

TEST_CASE("relay symmetric part: lambda_max against the closed-form cubic") {
  const double oracle = relay_lambda_max_oracle();
  CHECK(lambda_max_sym(kRelay.A) == doctest::Approx(oracle).epsilon(1e-12));
  const Vec ones(3, 1.0);
  const auto cert = quad_linear_cert(kRelay.A, ones);
  for (double w : cert.w) CHECK(w == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(cert.method == CertMethod::AnalyticLinear);
  // The published figure of 50 is not what the matrix gives.
  CHECK(std::abs(oracle - 50.0) > 0.2);
}

TEST_CASE("analytic certificates have no sampled witness") {
  const auto h = dynamics::relay_field(kRelay).h;
  const Vec ones(3, 1.0);
  const auto cert = quad_linear_cert(kRelay.A, ones);
  const auto v = check_quad_sampled(h, cert, 10.0, 200000, 1);
  CHECK(v.holds);
  CHECK(v.samples == 200000);

  const Vec p{0.3, 2.0, 1.1};
  const auto weighted = quad_linear_cert(kRelay.A, p);
  CHECK(check_quad_sampled(h, weighted, 10.0, 200000, 2).holds);
}

TEST_CASE("a certificate below lambda_max is refuted quickly") {
  const auto h = dynamics::relay_field(kRelay).h;
  const Vec ones(3, 1.0);
  auto cert = quad_linear_cert(kRelay.A, ones);
  for (double& w : cert.w) w -= 1.0;
  const auto v = check_quad_sampled(h, cert, 10.0, 10000, 3);
  REQUIRE_FALSE(v.holds);
  REQUIRE(v.witness);
  CHECK(v.witness->lhs > v.witness->rhs);
}

TEST_CASE("chua certificate family formulas") {
  const dynamics::ChuaParams p;
  const auto c = chua_quad_family(0.7, 1.3, 0.9, p);
  const double p2 = p.beta * 1.3;
  CHECK(c.p[0] == 0.7);
  CHECK(c.p[1] == doctest::Approx(p2));
  CHECK(c.p[2] == 1.3);
  CHECK(c.w[0] == doctest::Approx(p.alpha * 0.34 * 0.7 + 0.9 * (p.alpha * 0.7 + p2) / 2.0));
  CHECK(c.w[1] == doctest::Approx((p.alpha * 0.7 + p2) / (2.0 * 0.9) - p2));
  CHECK(c.w[2] == 0.0);
}

TEST_CASE("chua certificates are sound on sampled pairs") {
  const dynamics::ChuaParams p;
  const auto h = dynamics::chua_field(p, 0, 1).h;
  for (const auto& [p1, p3, rho] : {std::tuple{1.0, 1.0, 0.8}, std::tuple{0.2, 3.0, 2.0},
                                    std::tuple{5.0, 0.5, 0.1}}) {
    const auto cert = chua_quad_family(p1, p3, rho, p);
    CHECK(check_quad_sampled(h, cert, 5.0, 100000, 11).holds);
  }
}

TEST_CASE("chua c_tilde optimisation reaches the closed-form infimum") {
  const dynamics::ChuaParams p;
  const auto lap = scaled_to(graph::random_connected(10, 0.4, 3), 2.22);
  const Vec gamma{1.0, 0.0, 1.0};
  const auto res = theorem2_ctilde(chua_family(p), lap, gamma);
  const double oracle = chua_objective_oracle(p);
  CHECK(oracle == doctest::Approx(14.1700867).epsilon(1e-8));
  // Strict margins keep the optimum just inside the feasible set.
  CHECK(res.objective >= oracle);
  CHECK(res.objective == doctest::Approx(oracle).epsilon(1e-4));
  CHECK(res.c_tilde == doctest::Approx(oracle / 2.22).epsilon(1e-4));
  CHECK(res.cert.p_norm() == doctest::Approx(1.0));
}

TEST_CASE("c_tilde optimum is below 1000 random feasible family points") {
  const dynamics::ChuaParams p;
  const auto lap = scaled_to(graph::random_connected(10, 0.4, 3), 2.22);
  const Vec gamma{1.0, 0.0, 1.0};
  const auto fam = chua_family(p);
  const auto res = theorem2_ctilde(fam, lap, gamma);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  int feasible = 0;
  while (feasible < 1000) {
    const Vec theta{u(rng), u(rng), u(rng)};
    const auto cert = fam.make(theta);
    if ((fam.violation && fam.violation(cert) > 0.0) || !(cert.w[1] < 0.0)) continue;
    ++feasible;
    CHECK(res.c_tilde <= ctilde_objective(cert, lambda2(lap), gamma) * (1.0 + 1e-9));
  }
}

TEST_CASE("m margin by hand") {
  QuadCertificate c{{1.0, 2.0, 1.0}, {3.0, -1.0, 0.5}};
  const Vec gamma{1.0, 0.0, 2.0};
  // coupled block {0, 2}: 3 - 5*2*min(1*1, 1*2) = -7; uncoupled block: -1
  CHECK(m_margin(c, 2.0, gamma, 5.0) == doctest::Approx(1.0));
  CHECK(m_margin(c, 2.0, gamma, 0.1) == doctest::Approx(-2.8));
  // no uncoupled block
  const Vec all{1.0, 1.0, 1.0};
  CHECK(m_margin(c, 2.0, all, 5.0) == doctest::Approx(7.0));
  CHECK(ctilde_objective(c, 2.0, gamma) == doctest::Approx(1.5));
}

TEST_CASE("c_tilde and eps_bar are invariant under (P, W) scaling") {
  const auto lap = relay_laplacian();
  const Vec gamma{1.0, 1.0, 1.0};
  const Vec p{0.5, 1.0, 0.8};
  const auto cert = quad_linear_cert(kRelay.A, p);
  const double ct = ctilde_objective(cert, 2.0, gamma);
  const double eb = theorem2_epsbar(cert, lap, gamma, 80.0, 2.0);
  for (double alpha : {0.1, 10.0}) {
    const auto s = cert.scaled(alpha);
    CHECK(std::abs(ctilde_objective(s, 2.0, gamma) - ct) <= 1e-9 * ct);
    CHECK(std::abs(theorem2_epsbar(s, lap, gamma, 80.0, 2.0) - eb) <= 1e-9 * eb);
  }
  const dynamics::ChuaParams cp;
  const auto chua = chua_quad_family(0.6, 1.4, 1.2, cp);
  const Vec cg{1.0, 0.0, 1.0};
  const double cct = ctilde_objective(chua, 2.22, cg);
  for (double alpha : {0.1, 10.0})
    CHECK(std::abs(ctilde_objective(chua.scaled(alpha), 2.22, cg) - cct) <= 1e-9 * cct);
}

TEST_CASE("eps_bar needs a positive margin") {
  const auto lap = relay_laplacian();
  const Vec ones(3, 1.0);
  const auto cert = quad_linear_cert(kRelay.A, ones);
  CHECK_THROWS_AS(theorem2_epsbar(cert, lap, ones, 20.0, 2.0), PreconditionError);
}

TEST_CASE("relay corollary pipeline matches hand arithmetic") {
  const auto lap = relay_laplacian();
  const auto fields = relay_nodes(5);
  const Vec ones(3, 1.0);
  const LinearCoupling lc{50.0, ones};
  const auto fam = fixed_family(quad_linear_cert(kRelay.A, ones));
  const auto r = corollary1_bounds(fields, lap, lc, fam);
  const double lmax = relay_lambda_max_oracle();
  CHECK(r.lambda2 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.c_tilde == doctest::Approx(lmax / 2.0).epsilon(1e-9));
  CHECK(r.M_bar == doctest::Approx(std::sqrt(6.0)));
  CHECK(r.m_value == doctest::Approx(100.0 - lmax).epsilon(1e-9));
  CHECK(r.eps_bar == doctest::Approx(std::sqrt(5.0) * std::sqrt(6.0) / (100.0 - lmax)).epsilon(1e-9));
  CHECK(r.certified());

  // With the quoted bound M = 2.
  dynamics::RelayParams rp;
  rp.bound_override = 2.0;
  const std::vector<dynamics::AffineDecomposedField> f2(5, dynamics::relay_field(rp));
  const auto r2 = corollary1_bounds(f2, lap, lc, fam);
  CHECK(r2.eps_bar == doctest::Approx(std::sqrt(5.0) * 2.0 / (100.0 - lmax)).epsilon(1e-9));

  // Below c_tilde the gain hypothesis fails and no bound is claimed.
  const LinearCoupling weak{20.0, ones};
  const auto r3 = corollary1_bounds(fields, lap, weak, fam);
  CHECK_FALSE(r3.hypotheses_hold());
  CHECK_FALSE(r3.certified());

  const Vec partial{1.0, 0.0, 1.0};
  CHECK_THROWS(corollary1_bounds(fields, lap, LinearCoupling{50.0, partial}, fam));
}

TEST_CASE("upsilon certification") {
  const auto id = certify_upsilon_scalar(identity_coupling(), kInf);
  CHECK(id.upsilon == 1.0);
  CHECK(id.asymptotic);

  const double third = std::numbers::pi / 3.0;
  const auto s = certify_upsilon_scalar(sine_coupling(), third);
  CHECK(s.upsilon == doctest::Approx(std::sin(third) / third).epsilon(1e-6));
  CHECK(std::abs(s.upsilon - 0.8270) < 1e-3);
  CHECK(s.argmin == doctest::Approx(third).epsilon(1e-6));

  const auto pws = certify_upsilon_scalar(ikeda_pws_coupling(), kInf);
  // min of ((z-1)^2 + 1)/z at z = sqrt(2)
  CHECK(pws.upsilon == doctest::Approx(2.0 * std::sqrt(2.0) - 2.0).epsilon(1e-7));
  CHECK(pws.upsilon >= 0.749);
  CHECK(pws.argmin == doctest::Approx(std::sqrt(2.0)).epsilon(1e-4));
  CHECK(check_upsilon_sampled(ikeda_pws_coupling(), pws.upsilon, 50.0, 100000, 3));
  CHECK_FALSE(check_upsilon_sampled(ikeda_pws_coupling(), pws.upsilon + 0.01, 50.0, 100000, 3));

  const ScalarCoupling even = [](double z) { return z * z; };
  CHECK_THROWS(certify_upsilon_scalar(even, 1.0));
  const std::vector<ScalarCoupling> zeros{[](double) { return 0.0; }};
  CHECK_THROWS_AS(certify_upsilon(zeros, 1.0), PreconditionError);
}

TEST_CASE("kuramoto theorem pipeline matches hand arithmetic") {
  const auto lap = graph::build_laplacian(graph::ring(4));
  const Vec omega{0.1, -0.216, 0.416, -0.3};
  double mean = 0.0;
  for (double w : omega) mean += w;
  mean /= 4.0;
  std::vector<dynamics::AffineDecomposedField> fields;
  double mbar = 0.0;
  for (double w : omega) {
    fields.push_back(dynamics::kuramoto_error_field({w}, mean));
    mbar = std::max(mbar, std::abs(w - mean));
  }
  const double emax = std::numbers::pi / 3.0;
  const double ups = std::sin(emax) / emax;
  NonlinearCoupling nc{1.5, {sine_coupling()}, {ups}, emax};
  const Vec e0{0.1, -0.05, 0.0, -0.05};
  const auto r = theorem4_report(fields, lap, nc, e0, QuadCertificate{{1.0}, {0.0}});
  const double ct = (2.0 * 2.0 * mbar / emax) / (2.0 * ups);
  CHECK(r.c_tilde == doctest::Approx(ct).epsilon(1e-12));
  CHECK(r.eps_bar == doctest::Approx(mbar * 2.0 / (1.5 * 2.0 * ups)).epsilon(1e-12));
  CHECK(r.certified());

  const Vec far{0.6, -0.6, 0.0, 0.0};
  const auto bad = theorem4_report(fields, lap, nc, far, QuadCertificate{{1.0}, {0.0}});
  CHECK_FALSE(bad.hypotheses_hold());
  CHECK(std::isnan(bad.eps_bar));
}

TEST_CASE("two-part bound on identical contracting nodes is zero") {
  const Matrix a{{-1.0, 0.5}, {-0.5, -1.0}};
  const std::vector<dynamics::AffineDecomposedField> f(5, dynamics::linear_field(a));
  const auto lap = graph::build_laplacian(graph::ring(5));
  const Vec ones(2, 1.0);
  const auto r = theorem1_report(f, lap, {1.0, ones}, linear_node_certifier(f));
  CHECK(r.eps_bar == 0.0);
  CHECK(r.eps_source == "eps1");
  CHECK(r.certified());
}

TEST_CASE("two-part bound with Ikeda nodes") {
  std::vector<dynamics::AffineDecomposedField> f;
  const Vec a{0.8, 1.2, 1.0, 0.9};
  for (double ai : a) f.push_back(dynamics::ikeda_field({ai, 4.0, 2.0}));
  const auto lap = graph::build_laplacian(graph::ring(4));
  const Vec one{1.0};
  const auto r = theorem1_report(f, lap, {10.0, one}, linear_node_certifier(f));
  const double sqrt_n = 2.0;
  // P = Q = 1: w_max = -min a, eps1 = 2 sqrt(N) M / min a
  CHECK(r.w_max == doctest::Approx(-0.8));
  CHECK(r.eps1 == doctest::Approx(2.0 * sqrt_n * 4.0 / 0.8));
  CHECK(r.BQ_radius == doctest::Approx(r.eps1 / 2.0));
  CHECK(r.h_max == doctest::Approx(1.2 * r.BQ_radius));
  // m = -max(-min a - c lambda2, ...) with lambda2 = 2
  CHECK(r.m_value == doctest::Approx(0.8 + 20.0));
  CHECK(r.eps2 == doctest::Approx(sqrt_n * (4.0 + r.h_max) / 20.8));
  CHECK(r.eps_bar == std::min(r.eps1, r.eps2));
  CHECK(r.m_value > 0.0);
}

TEST_CASE("two-part bound reports a failed hypothesis for a non-contracting node") {
  const std::vector<dynamics::AffineDecomposedField> f(3, dynamics::linear_field(Matrix{{0.5}}));
  const auto lap = graph::build_laplacian(graph::ring(3));
  const Vec one{1.0};
  const auto r = theorem1_report(f, lap, {10.0, one}, linear_node_certifier(f));
  CHECK_FALSE(r.hypotheses_hold());
  CHECK_FALSE(r.certified());
}

TEST_CASE("nonlinear coupling hypotheses and bound") {
  std::vector<dynamics::AffineDecomposedField> f;
  for (double ai : {0.8, 1.2, 1.0, 0.9}) f.push_back(dynamics::ikeda_field({ai, 4.0, 2.0}));
  const auto lap = graph::build_laplacian(graph::ring(4));
  const double ups = 2.0 * std::sqrt(2.0) - 2.0;
  NonlinearCoupling nc{20.0, {ikeda_pws_coupling()}, {ups}, kInf};
  const Vec x0{0.5, -0.2, 0.1, 0.3};
  const auto r = theorem3_report(f, lap, nc, x0, linear_node_certifier(f));
  CHECK(r.certified());
  CHECK(r.c_tilde == 0.0);
  CHECK(r.eps1 == doctest::Approx(2.0 * 4.0 / 0.8));
  CHECK(r.m_value > 0.0);
  CHECK(r.eps_bar <= r.eps1);

  NonlinearCoupling tight = nc;
  tight.e_max = 0.2;
  const auto bad = theorem3_report(f, lap, tight, x0, linear_node_certifier(f));
  CHECK_FALSE(bad.hypotheses_hold());
  CHECK(std::isnan(bad.eps_bar));
}

TEST_CASE("h_max over a ball") {
  const std::vector<dynamics::AffineDecomposedField> f{dynamics::relay_field(kRelay)};
  const auto hm = h_max_over_ball(f, 2.0);
  CHECK_FALSE(hm.statistical);
  CHECK(hm.value == doctest::Approx(2.0 * spectral_norm(kRelay.A)));

  auto custom = dynamics::relay_field(kRelay);
  custom.h_lipschitz.reset();
  const std::vector<dynamics::AffineDecomposedField> g{custom};
  const auto sampled = h_max_over_ball(g, 2.0);
  CHECK(sampled.statistical);
  CHECK(sampled.value <= hm.value * (1.0 + 1e-12));
  CHECK(sampled.value >= 0.9 * hm.value);
}
