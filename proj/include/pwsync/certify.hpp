#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pwsync/coupling.hpp"
#include "pwsync/dynamics.hpp"
#include "pwsync/graph.hpp"
#include "pwsync/linalg.hpp"

namespace pwsync::certify {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
// Margin enforcing strict inequalities of the certificate sets.
inline constexpr double kStrictMargin = 1e-6;

enum class CertMethod { AnalyticLinear, ChuaFamily, Sampled, User };
std::string to_string(CertMethod m);

// Diagonal pair (P, W) with (x-y)^T P (h(x)-h(y)) <= (x-y)^T W (x-y).
struct QuadCertificate {
  Vec p;
  Vec w;
  double domain_radius = kInf;
  CertMethod method = CertMethod::User;

  double p_norm() const { return max_entry(p); }  // ||P||_2 for diagonal P
  QuadCertificate scaled(double alpha) const;
  QuadCertificate normalized() const { return scaled(1.0 / p_norm()); }
  void validate() const;
};

struct QuadWitness {
  Vec x;
  Vec y;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

// A statistical check: holds == true is absence of a witness, not a proof.
struct QuadVerdict {
  bool holds = true;
  std::optional<QuadWitness> witness;
  std::size_t samples = 0;
};

struct TimeWindow {
  double begin = 0.0;
  double end = 10.0;
};

QuadVerdict check_quad_sampled(const dynamics::DriftFn& h, const QuadCertificate& cert,
                               double radius, std::size_t n_samples, std::uint64_t seed,
                               TimeWindow window = {});

// W = lambda_max(sym(P A)) I, valid on the whole space.
QuadCertificate quad_linear_cert(const Matrix& a, std::span<const double> p);

// Chua certificate with p2 = beta p3 and the Young split parameter rho:
//   w1 = alpha(-1 - min slope) p1 + rho (alpha p1 + p2) / 2
//   w2 = (alpha p1 + p2) / (2 rho) - p2,  w3 = 0.
QuadCertificate chua_quad_family(double p1, double p3, double rho,
                                 const dynamics::ChuaParams& params = {});

struct UpsilonResult {
  double upsilon = 0.0;
  double argmin = 0.0;   // |z| attaining the infimum of eta(z)/z
  bool asymptotic = false;  // e_max was infinite; a finite probe radius was used
};

// inf over 0 < |z| <= e_max of z eta(z) / z^2 on a log/linear grid, refined
// by golden-section search around the grid minimum; clipped at 0. Throws
// if eta is not odd on the probe grid.
UpsilonResult certify_upsilon_scalar(const ScalarCoupling& eta, double e_max,
                                     std::size_t grid_points = 20000);

// Componentwise; throws PreconditionError when no entry is positive.
Vec certify_upsilon(std::span<const ScalarCoupling> eta, double e_max,
                    std::size_t grid_points = 20000);

// Sampled check of z eta(z) >= upsilon z^2 on |z| <= e_max.
bool check_upsilon_sampled(const ScalarCoupling& eta, double upsilon, double e_max,
                           std::size_t n_samples, std::uint64_t seed);

// Parameterised certificate generator, theta in R^k (log-scale by convention).
struct CertFamily {
  std::size_t n_params = 0;
  std::function<QuadCertificate(std::span<const double> theta)> make;
  // Family-specific constraint violation (>= 0, zero when feasible).
  std::function<double(const QuadCertificate&)> violation;
  Vec start_lower;
  Vec start_upper;
};

CertFamily fixed_family(QuadCertificate cert);
// P = diag(exp(theta)), W from quad_linear_cert.
CertFamily linear_diagonal_family(const Matrix& a);
// theta = log(p1, p3, rho).
CertFamily chua_family(const dynamics::ChuaParams& params = {});

// Per-node W_i for a shared diagonal P.
using NodeCertifier = std::function<QuadCertificate(std::size_t node, std::span<const double> p)>;
// Uses each field's linear part; throws if a field has none.
NodeCertifier linear_node_certifier(std::span<const dynamics::AffineDecomposedField> fields);

struct SearchOptions {
  int starts = 20;
  std::uint64_t seed = 20240601;
  double penalty = 1e6;
  bool parallel = true;
  // Fix P = I instead of searching the diagonal family.
  bool identity_p = false;
};

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct BoundReport {
  std::string theorem;
  std::size_t n_nodes = 0;
  std::size_t dim = 0;
  double gain = 0.0;
  double lambda2 = std::numeric_limits<double>::quiet_NaN();
  // lambda2(L kron P_l Gamma_l) or lambda2(L kron Upsilon_r)
  double lambda2_kron = std::numeric_limits<double>::quiet_NaN();
  std::size_t coupled_count = 0;  // l or r

  double M_bar = std::numeric_limits<double>::quiet_NaN();
  double h_bar_0 = std::numeric_limits<double>::quiet_NaN();
  double w_max = std::numeric_limits<double>::quiet_NaN();
  double BQ_radius = std::numeric_limits<double>::quiet_NaN();
  double h_max = std::numeric_limits<double>::quiet_NaN();
  bool h_max_statistical = false;
  Vec W_max_diag;
  double m_value = std::numeric_limits<double>::quiet_NaN();
  double c_tilde = std::numeric_limits<double>::quiet_NaN();
  double ctilde_objective = std::numeric_limits<double>::quiet_NaN();
  double eps1 = std::numeric_limits<double>::quiet_NaN();
  double eps2 = std::numeric_limits<double>::quiet_NaN();
  double eps_bar = std::numeric_limits<double>::quiet_NaN();
  std::string eps_source;
  double r_max = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();
  double nu = std::numeric_limits<double>::quiet_NaN();
  double e0_norm = std::numeric_limits<double>::quiet_NaN();
  std::optional<QuadCertificate> certificate;  // P*, W used for eps2 / c_tilde
  std::optional<QuadCertificate> q_certificate;  // Q* for eps1
  std::vector<HypothesisCheck> hypotheses;

  bool hypotheses_hold() const;
  // Hypotheses hold and a finite eps_bar was produced.
  bool certified() const;
};

// ---- bound building blocks -------------------------------------------------

double m_margin(const QuadCertificate& cert, double lambda2, std::span<const double> gamma,
                double c);
double ctilde_objective(const QuadCertificate& cert, double lambda2,
                        std::span<const double> gamma);

struct CtildeResult {
  double c_tilde = 0.0;
  double objective = 0.0;  // min over the family of max{lmax(W_l)/lambda2(L kron P_l G_l), 0} * lambda2
  QuadCertificate cert;    // normalised to ||P||_2 = 1
};

CtildeResult theorem2_ctilde(const CertFamily& family, const graph::Laplacian& lap,
                             std::span<const double> gamma, const SearchOptions& opts = {});

// M_bar sqrt(N) ||P||_2 / m(c, P, W); throws PreconditionError when m <= 0.
double theorem2_epsbar(const QuadCertificate& cert, const graph::Laplacian& lap,
                       std::span<const double> gamma, double c, double M_bar);

struct EpsSearchResult {
  double eps_bar = kInf;
  QuadCertificate cert;
};
// Minimises theorem2_epsbar over the family restricted to m > 0.
EpsSearchResult theorem2_epsbar_search(const CertFamily& family, const graph::Laplacian& lap,
                                       std::span<const double> gamma, double c,
                                       double M_bar, const SearchOptions& opts = {});

// ---- theorem pipelines -----------------------------------------------------

// Sup of ||h_i|| over the ball of given radius (analytic when every field
// carries a Lipschitz bound, otherwise sampled and flagged).
struct HMax {
  double value = 0.0;
  bool statistical = false;
};
HMax h_max_over_ball(std::span<const dynamics::AffineDecomposedField> fields, double radius,
                     std::uint64_t seed = 7);

BoundReport theorem1_report(std::span<const dynamics::AffineDecomposedField> fields,
                            const graph::Laplacian& lap, const LinearCoupling& coupling,
                            const NodeCertifier& certifier, const SearchOptions& opts = {});

BoundReport theorem2_report(std::span<const dynamics::AffineDecomposedField> fields,
                            const graph::Laplacian& lap, const LinearCoupling& coupling,
                            const CertFamily& family, const SearchOptions& opts = {});

// Linear-coupling bound specialised to a strictly positive inner coupling diagonal.
BoundReport corollary1_bounds(std::span<const dynamics::AffineDecomposedField> fields,
                              const graph::Laplacian& lap, const LinearCoupling& coupling,
                              const CertFamily& family, const SearchOptions& opts = {});

struct NonlinearOptions {
  double delta = 1e-6;
};

BoundReport theorem3_report(std::span<const dynamics::AffineDecomposedField> fields,
                            const graph::Laplacian& lap, const NonlinearCoupling& coupling,
                            std::span<const double> x0, const NodeCertifier& certifier,
                            const NonlinearOptions& opts = {});

// common_cert: the shared h certified with P = I.
BoundReport theorem4_report(std::span<const dynamics::AffineDecomposedField> fields,
                            const graph::Laplacian& lap, const NonlinearCoupling& coupling,
                            std::span<const double> e0, const QuadCertificate& common_cert);

// Stacked error e_i = x_i - mean for an initial state.
Vec initial_error(std::span<const double> x0, std::size_t n_nodes);

}  // namespace pwsync::certify
