#include "pwsync/certify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pwsync/optimize.hpp"

namespace pwsync::certify {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec ones(std::size_t n) { return Vec(n, 1.0); }

double max_over(std::span<const double> v, std::span<const std::size_t> idx) {
  double out = -kInf;
  for (std::size_t i : idx) out = std::max(out, v[i]);
  return out;
}

double min_product_over(std::span<const double> a, std::span<const double> b,
                        std::span<const std::size_t> idx) {
  double out = kInf;
  for (std::size_t i : idx) out = std::min(out, a[i] * b[i]);
  return out;
}

// Uniform point in the n-ball of the given radius.
Vec sample_ball(std::mt19937_64& rng, std::size_t n, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec v(n);
  double norm = 0.0;
  do {
    for (auto& x : v) x = normal(rng);
    norm = norm2(v);
  } while (norm == 0.0);
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
  for (auto& x : v) x *= r / norm;
  return v;
}

void check_fields(std::span<const dynamics::AffineDecomposedField> fields) {
  if (fields.empty()) throw ValidationError("no node fields supplied");
  for (const auto& f : fields)
    if (f.dim != fields.front().dim)
      throw ValidationError("node fields differ in state dimension");
}

double max_bound(std::span<const dynamics::AffineDecomposedField> fields) {
  double m = 0.0;
  for (const auto& f : fields) m = std::max(m, f.bound);
  return m;
}

double max_h_origin(std::span<const dynamics::AffineDecomposedField> fields) {
  double m = 0.0;
  for (const auto& f : fields) m = std::max(m, f.h_at_origin);
  return m;
}

// Sampled comparison of every node's h against node 0.
bool fields_share_h(std::span<const dynamics::AffineDecomposedField> fields) {
  const std::size_t dim = fields.front().dim;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> time(0.0, 10.0);
  Vec ref(dim);
  Vec other(dim);
  for (int s = 0; s < 256; ++s) {
    const Vec x = sample_ball(rng, dim, 10.0);
    const double t = time(rng);
    fields.front().h(t, x, ref);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      fields[i].h(t, x, other);
      for (std::size_t k = 0; k < dim; ++k)
        if (std::abs(ref[k] - other[k]) > 1e-12 * (1.0 + std::abs(ref[k]))) return false;
    }
  }
  return true;
}

// Search a diagonal P (normalised to max entry 1) minimising `cost`.
Vec search_diagonal_p(std::size_t dim, const std::function<double(const Vec&)>& cost,
                      const SearchOptions& opts) {
  if (opts.identity_p || dim == 1) return ones(dim);
  optimize::MultiStartOptions ms;
  ms.starts = opts.starts;
  ms.seed = opts.seed;
  ms.lower.assign(dim, -2.0);
  ms.upper.assign(dim, 2.0);
  ms.parallel = opts.parallel;
  const auto best = optimize::multistart_nelder_mead(
      [&](std::span<const double> theta) {
        Vec p(theta.size());
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(theta[k]);
        const double top = max_entry(p);
        for (auto& v : p) v /= top;
        return cost(p);
      },
      ms);
  Vec p(dim);
  for (std::size_t k = 0; k < dim; ++k) p[k] = std::exp(best.x[k]);
  const double top = max_entry(p);
  for (auto& v : p) v /= top;
  return p;
}

struct FamilyPoint {
  QuadCertificate cert;
  double value = kInf;
};

FamilyPoint minimise_over_family(const CertFamily& family,
                                 const std::function<double(const QuadCertificate&)>& cost,
                                 const SearchOptions& opts) {
  if (family.n_params == 0) {
    QuadCertificate c = family.make({});
    return {c, cost(c)};
  }
  optimize::MultiStartOptions ms;
  ms.starts = opts.starts;
  ms.seed = opts.seed;
  ms.lower = family.start_lower;
  ms.upper = family.start_upper;
  ms.parallel = opts.parallel;
  const auto best = optimize::multistart_nelder_mead(
      [&](std::span<const double> theta) { return cost(family.make(theta)); }, ms);
  QuadCertificate c = family.make(best.x);
  return {c, best.value};
}

double family_violation(const CertFamily& family, const QuadCertificate& cert) {
  return family.violation ? family.violation(cert) : 0.0;
}

double uncoupled_violation(const QuadCertificate& cert, const BlockSplit& split) {
  if (split.rest.empty()) return 0.0;
  return std::max(0.0, max_over(cert.w, split.rest) + kStrictMargin);
}

constexpr double kFeasibleTol = 1e-9;

HypothesisCheck hyp(std::string name, bool passed, std::string detail = {}) {
  return {std::move(name), passed, std::move(detail)};
}

}  // namespace

std::string to_string(CertMethod m) {
  switch (m) {
    case CertMethod::AnalyticLinear: return "analytic-linear";
    case CertMethod::ChuaFamily: return "chua-family";
    case CertMethod::Sampled: return "sampled";
    case CertMethod::User: return "user";
  }
  return "user";
}

QuadCertificate QuadCertificate::scaled(double alpha) const {
  QuadCertificate out = *this;
  for (auto& v : out.p) v *= alpha;
  for (auto& v : out.w) v *= alpha;
  return out;
}

void QuadCertificate::validate() const {
  if (p.empty() || p.size() != w.size())
    throw ValidationError("certificate P and W must be non-empty and equally sized");
  for (double v : p)
    if (!(v > 0.0)) throw ValidationError("certificate P entries must be positive");
  if (!(domain_radius > 0.0)) throw ValidationError("certificate domain radius must be positive");
}

bool BoundReport::hypotheses_hold() const {
  return std::all_of(hypotheses.begin(), hypotheses.end(),
                     [](const HypothesisCheck& h) { return h.passed; });
}

bool BoundReport::certified() const {
  return hypotheses_hold() && std::isfinite(eps_bar);
}

QuadVerdict check_quad_sampled(const dynamics::DriftFn& h, const QuadCertificate& cert,
                               double radius, std::size_t n_samples, std::uint64_t seed,
                               TimeWindow window) {
  cert.validate();
  if (radius > cert.domain_radius)
    throw PreconditionError("sampling radius exceeds the certificate's domain");
  const std::size_t n = cert.p.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(window.begin, window.end);
  Vec hx(n), hy(n);
  QuadVerdict verdict;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Vec x = sample_ball(rng, n, radius);
    const Vec y = sample_ball(rng, n, radius);
    const double t = time(rng);
    h(t, x, hx);
    h(t, y, hy);
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = x[k] - y[k];
      lhs += d * cert.p[k] * (hx[k] - hy[k]);
      rhs += d * cert.w[k] * d;
    }
    verdict.samples = s + 1;
    if (lhs > rhs + 1e-9 * (1.0 + std::abs(rhs))) {
      verdict.holds = false;
      verdict.witness = QuadWitness{x, y, t, lhs, rhs};
      return verdict;
    }
  }
  return verdict;
}

QuadCertificate quad_linear_cert(const Matrix& a, std::span<const double> p) {
  if (!a.square() || a.rows() != p.size())
    throw ValidationError("quad_linear_cert: A must be square and match P");
  for (double v : p)
    if (!(v > 0.0)) throw ValidationError("quad_linear_cert: P must be positive");
  const Matrix pa = Matrix::diagonal(p) * a;
  const double top = lambda_max_sym(pa);
  return {Vec(p.begin(), p.end()), Vec(p.size(), top), kInf, CertMethod::AnalyticLinear};
}

QuadCertificate chua_quad_family(double p1, double p3, double rho,
                                 const dynamics::ChuaParams& params) {
  if (!(p1 > 0.0 && p3 > 0.0 && rho > 0.0))
    throw ValidationError("chua_quad_family: p1, p3 and rho must be positive");
  const double p2 = params.beta * p3;
  // -alpha(1 + phi') p1 is largest at the most negative slope of phi.
  const double gain1 = params.alpha * (-1.0 - std::min(params.slope_a, params.slope_b));
  const double cross = params.alpha * p1 + p2;
  QuadCertificate c;
  c.p = {p1, p2, p3};
  c.w = {gain1 * p1 + rho * cross / 2.0, cross / (2.0 * rho) - p2, 0.0};
  c.method = CertMethod::ChuaFamily;
  return c;
}

UpsilonResult certify_upsilon_scalar(const ScalarCoupling& eta, double e_max,
                                     std::size_t grid_points) {
  if (!(e_max > 0.0)) throw ValidationError("certify_upsilon: e_max must be positive");
  if (grid_points < 16) throw ValidationError("certify_upsilon: grid too coarse");
  UpsilonResult out;
  out.asymptotic = std::isinf(e_max);
  const double radius = out.asymptotic ? 1e3 : e_max;

  std::vector<double> grid;
  grid.reserve(grid_points + 1);
  const std::size_t half = grid_points / 2;
  const double lo = radius * 1e-9;
  for (std::size_t k = 0; k < half; ++k)
    grid.push_back(lo * std::pow(radius / lo, static_cast<double>(k) / static_cast<double>(half)));
  for (std::size_t k = 1; k <= grid_points - half; ++k)
    grid.push_back(radius * static_cast<double>(k) / static_cast<double>(grid_points - half));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  for (std::size_t k = 0; k < grid.size(); k += std::max<std::size_t>(1, grid.size() / 256)) {
    const double z = grid[k];
    const double fp = eta(z);
    const double fm = eta(-z);
    if (std::abs(fp + fm) > 1e-12 * (1.0 + std::abs(fp)))
      throw PreconditionError("coupling function is not odd");
  }

  auto ratio = [&](double z) {
    const double a = z * eta(z) / (z * z);
    const double b = (-z) * eta(-z) / (z * z);
    return std::min(a, b);
  };

  std::size_t arg = 0;
  double best = kInf;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double r = ratio(grid[k]);
    if (r < best) {
      best = r;
      arg = k;
    }
  }
  out.argmin = grid[arg];

  // Golden-section refinement on the bracketing grid cell(s).
  double a = arg > 0 ? grid[arg - 1] : grid[arg];
  double b = arg + 1 < grid.size() ? grid[arg + 1] : grid[arg];
  if (b > a) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = ratio(c);
    double fd = ratio(d);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * b; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = ratio(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = ratio(d);
      }
    }
    const double z = 0.5 * (a + b);
    const double r = ratio(z);
    if (r < best) {
      best = r;
      out.argmin = z;
    }
  }
  out.upsilon = std::max(best, 0.0);
  return out;
}

Vec certify_upsilon(std::span<const ScalarCoupling> eta, double e_max, std::size_t grid_points) {
  Vec out;
  out.reserve(eta.size());
  for (const auto& f : eta) out.push_back(certify_upsilon_scalar(f, e_max, grid_points).upsilon);
  if (std::none_of(out.begin(), out.end(), [](double u) { return u > 0.0; }))
    throw PreconditionError("coupling function gives no positive upsilon entry");
  return out;
}

bool check_upsilon_sampled(const ScalarCoupling& eta, double upsilon, double e_max,
                           std::size_t n_samples, std::uint64_t seed) {
  const double radius = std::isinf(e_max) ? 1e3 : e_max;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-radius, radius);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double z = dist(rng);
    if (z == 0.0) continue;
    if (z * eta(z) < upsilon * z * z - 1e-9 * z * z) return false;
  }
  return true;
}

CertFamily fixed_family(QuadCertificate cert) {
  cert.validate();
  CertFamily f;
  f.n_params = 0;
  f.make = [cert](std::span<const double>) { return cert; };
  return f;
}

CertFamily linear_diagonal_family(const Matrix& a) {
  if (!a.square()) throw ValidationError("linear_diagonal_family: A must be square");
  CertFamily f;
  f.n_params = a.rows();
  f.make = [a](std::span<const double> theta) {
    Vec p(theta.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(theta[k]);
    return quad_linear_cert(a, p);
  };
  f.start_lower.assign(a.rows(), -2.0);
  f.start_upper.assign(a.rows(), 2.0);
  return f;
}

CertFamily chua_family(const dynamics::ChuaParams& params) {
  CertFamily f;
  f.n_params = 3;
  f.make = [params](std::span<const double> theta) {
    return chua_quad_family(std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2]), params);
  };
  f.start_lower = {-3.0, -3.0, -3.0};
  f.start_upper = {3.0, 3.0, 3.0};
  return f;
}

NodeCertifier linear_node_certifier(std::span<const dynamics::AffineDecomposedField> fields) {
  std::vector<Matrix> parts;
  for (const auto& f : fields) {
    if (!f.h_linear) throw ValidationError("field '" + f.family + "' has no linear part");
    parts.push_back(*f.h_linear);
  }
  return [parts](std::size_t node, std::span<const double> p) {
    return quad_linear_cert(parts.at(node), p);
  };
}

double m_margin(const QuadCertificate& cert, double lambda2, std::span<const double> gamma,
                double c) {
  if (gamma.size() != cert.w.size()) throw ValidationError("m_margin: size mismatch");
  const BlockSplit split = split_positive(gamma);
  const double uncoupled = max_over(cert.w, split.rest);
  if (split.positive.empty()) return -uncoupled;
  const double coupled = max_over(cert.w, split.positive) -
                         c * lambda2 * min_product_over(cert.p, gamma, split.positive);
  return -std::max(coupled, uncoupled);
}

double ctilde_objective(const QuadCertificate& cert, double lambda2,
                        std::span<const double> gamma) {
  if (gamma.size() != cert.w.size()) throw ValidationError("ctilde_objective: size mismatch");
  const BlockSplit split = split_positive(gamma);
  if (split.positive.empty()) return max_entry(cert.w) < 0.0 ? 0.0 : kInf;
  const double ratio = max_over(cert.w, split.positive) /
                       (lambda2 * min_product_over(cert.p, gamma, split.positive));
  return std::max(ratio, 0.0);
}

CtildeResult theorem2_ctilde(const CertFamily& family, const graph::Laplacian& lap,
                             std::span<const double> gamma, const SearchOptions& opts) {
  const double l2 = graph::lambda2(lap);
  const BlockSplit split = split_positive(gamma);
  auto violation = [&](const QuadCertificate& c) {
    return family_violation(family, c) + uncoupled_violation(c, split);
  };
  const FamilyPoint best = minimise_over_family(
      family,
      [&](const QuadCertificate& c) {
        const double v = violation(c);
        const double obj = ctilde_objective(c, l2, gamma);
        return v > 0.0 ? obj + opts.penalty * (1.0 + v) : obj;
      },
      opts);
  if (violation(best.cert) > kFeasibleTol)
    throw PreconditionError(
        "no certificate in the family has negative W on every uncoupled component "
        "(coupled-index count l is below the number of non-negative W entries)");
  CtildeResult out;
  out.cert = best.cert.normalized();
  out.c_tilde = ctilde_objective(out.cert, l2, gamma);
  out.objective = out.c_tilde * l2;
  return out;
}

double theorem2_epsbar(const QuadCertificate& cert, const graph::Laplacian& lap,
                       std::span<const double> gamma, double c, double M_bar) {
  cert.validate();
  const double m = m_margin(cert, graph::lambda2(lap), gamma, c);
  if (!(m > 0.0))
    throw PreconditionError(
        "certificate is outside the admissible set at this gain: the coupled block needs "
        "c*lambda2(L kron P_l Gamma_l) > lambda_max(W_l) and the uncoupled block W < 0");
  return M_bar * std::sqrt(static_cast<double>(lap.size())) * cert.p_norm() / m;
}

EpsSearchResult theorem2_epsbar_search(const CertFamily& family, const graph::Laplacian& lap,
                                       std::span<const double> gamma, double c,
                                       double M_bar, const SearchOptions& opts) {
  const double l2 = graph::lambda2(lap);
  const double sqrt_n = std::sqrt(static_cast<double>(lap.size()));
  const FamilyPoint best = minimise_over_family(
      family,
      [&](const QuadCertificate& cert) {
        const double m = m_margin(cert, l2, gamma, c) / cert.p_norm();
        const double v = family_violation(family, cert);
        if (m <= kStrictMargin || v > 0.0)
          return opts.penalty * (1.0 + v + std::max(0.0, kStrictMargin - m));
        return M_bar * sqrt_n / m;
      },
      opts);
  EpsSearchResult out;
  out.cert = best.cert.normalized();
  const double m = m_margin(out.cert, l2, gamma, c);
  if (!(m > 0.0) || family_violation(family, out.cert) > kFeasibleTol)
    throw PreconditionError("no certificate in the family has a positive decay margin at this gain");
  out.eps_bar = M_bar * sqrt_n * out.cert.p_norm() / m;
  return out;
}

HMax h_max_over_ball(std::span<const dynamics::AffineDecomposedField> fields, double radius,
                     std::uint64_t seed) {
  HMax out;
  if (std::isinf(radius)) {
    out.value = kInf;
    return out;
  }
  for (const auto& f : fields) {
    if (f.h_lipschitz) {
      out.value = std::max(out.value, f.h_at_origin + *f.h_lipschitz * radius);
      continue;
    }
    out.statistical = true;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> time(0.0, 10.0);
    Vec hx(f.dim);
    for (int s = 0; s < 100000; ++s) {
      Vec x = sample_ball(rng, f.dim, radius);
      if (s % 2 == 0) {
        const double nx = norm2(x);
        for (auto& v : x) v *= radius / nx;
      }
      f.h(time(rng), x, hx);
      out.value = std::max(out.value, norm2(hx));
    }
  }
  return out;
}

BoundReport theorem1_report(std::span<const dynamics::AffineDecomposedField> fields,
                            const graph::Laplacian& lap, const LinearCoupling& coupling,
                            const NodeCertifier& certifier, const SearchOptions& opts) {
  check_fields(fields);
  const std::size_t n_nodes = fields.size();
  const std::size_t dim = fields.front().dim;
  if (lap.size() != n_nodes) throw ValidationError("topology size differs from node count");
  coupling.validate(dim);

  BoundReport r;
  r.theorem = "theorem1";
  r.n_nodes = n_nodes;
  r.dim = dim;
  r.gain = coupling.gain;
  r.lambda2 = graph::lambda2(lap);
  r.coupled_count = coupling.blocks().count();
  r.M_bar = max_bound(fields);
  r.h_bar_0 = max_h_origin(fields);
  const double sqrt_n = std::sqrt(static_cast<double>(n_nodes));

  auto node_certs = [&](const Vec& p) {
    std::vector<QuadCertificate> out;
    out.reserve(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) out.push_back(certifier(i, p));
    return out;
  };
  auto worst_eigen = [](const std::vector<QuadCertificate>& certs) {
    double w = -kInf;
    for (const auto& c : certs) w = std::max(w, max_entry(c.w));
    return w;
  };
  auto w_max_diag = [&](const std::vector<QuadCertificate>& certs) {
    Vec out(dim, -kInf);
    for (const auto& c : certs)
      for (std::size_t k = 0; k < dim; ++k) out[k] = std::max(out[k], c.w[k]);
    return out;
  };

  // eps1: smallest invariant state ball over the normalised Q family.
  const Vec q = search_diagonal_p(
      dim,
      [&](const Vec& p) {
        const double w = worst_eigen(node_certs(p));
        if (w >= -kStrictMargin) return opts.penalty * (1.0 + w + kStrictMargin);
        return 2.0 * sqrt_n * max_entry(p) * (r.M_bar + r.h_bar_0) / (-w);
      },
      opts);
  const auto q_certs = node_certs(q);
  r.w_max = worst_eigen(q_certs);
  const bool common_negative = r.w_max < 0.0;
  r.hypotheses.push_back(hyp("common_negative_quad", common_negative,
                             "max_i lambda_max(W_i(Q*)) = " + std::to_string(r.w_max)));
  r.hypotheses.push_back(hyp("gain_positive", coupling.gain > 0.0));
  if (!common_negative) return r;

  r.q_certificate = QuadCertificate{q, w_max_diag(q_certs), kInf, q_certs.front().method};
  r.eps1 = 2.0 * sqrt_n * max_entry(q) * (r.M_bar + r.h_bar_0) / (-r.w_max);
  r.BQ_radius = r.eps1 / 2.0;
  const HMax hm = h_max_over_ball(fields, r.BQ_radius);
  r.h_max = hm.value;
  r.h_max_statistical = hm.statistical;

  // eps2: decay-margin bound over the same family with W^max(P).
  auto eps2_of = [&](const Vec& p, double* margin) {
    const auto certs = node_certs(p);
    if (worst_eigen(certs) >= -kStrictMargin) return kInf;
    const QuadCertificate wmax{p, w_max_diag(certs), kInf, certs.front().method};
    const double m = m_margin(wmax, r.lambda2, coupling.gamma, coupling.gain);
    if (margin) *margin = m;
    if (!(m > 0.0)) return kInf;
    return sqrt_n * max_entry(p) * (r.M_bar + r.h_max) / m;
  };
  const Vec p = search_diagonal_p(
      dim,
      [&](const Vec& pp) {
        const double e = eps2_of(pp, nullptr);
        return std::isfinite(e) ? e : opts.penalty;
      },
      opts);
  double m = kNaN;
  r.eps2 = eps2_of(p, &m);
  r.m_value = m;
  const auto p_certs = node_certs(p);
  r.W_max_diag = w_max_diag(p_certs);
  r.certificate = QuadCertificate{p, r.W_max_diag, kInf, p_certs.front().method};
  const BlockSplit split = coupling.blocks();
  if (split.count() > 0)
    r.lambda2_kron = r.lambda2 * min_product_over(p, coupling.gamma, split.positive);

  if (r.eps1 <= r.eps2) {
    r.eps_bar = r.eps1;
    r.eps_source = "eps1";
  } else {
    r.eps_bar = r.eps2;
    r.eps_source = "eps2";
  }
  return r;
}

BoundReport theorem2_report(std::span<const dynamics::AffineDecomposedField> fields,
                            const graph::Laplacian& lap, const LinearCoupling& coupling,
                            const CertFamily& family, const SearchOptions& opts) {
  check_fields(fields);
  const std::size_t n_nodes = fields.size();
  const std::size_t dim = fields.front().dim;
  if (lap.size() != n_nodes) throw ValidationError("topology size differs from node count");
  coupling.validate(dim);

  BoundReport r;
  r.theorem = "theorem2";
  r.n_nodes = n_nodes;
  r.dim = dim;
  r.gain = coupling.gain;
  r.lambda2 = graph::lambda2(lap);
  r.coupled_count = coupling.blocks().count();
  r.M_bar = max_bound(fields);
  r.hypotheses.push_back(hyp("common_h", fields_share_h(fields),
                             "sampled comparison of h across nodes"));

  CtildeResult ct;
  try {
    ct = theorem2_ctilde(family, lap, coupling.gamma, opts);
  } catch (const PreconditionError& e) {
    r.hypotheses.push_back(hyp("uncoupled_block_negative", false, e.what()));
    return r;
  }
  r.hypotheses.push_back(hyp("uncoupled_block_negative", true));
  r.c_tilde = ct.c_tilde;
  r.ctilde_objective = ct.objective;
  r.hypotheses.push_back(hyp("gain_above_ctilde", coupling.gain > ct.c_tilde,
                             "c = " + std::to_string(coupling.gain) +
                                 ", c_tilde = " + std::to_string(ct.c_tilde)));
  if (!(coupling.gain > ct.c_tilde)) {
    r.certificate = ct.cert;
    return r;
  }

  const EpsSearchResult es =
      theorem2_epsbar_search(family, lap, coupling.gamma, coupling.gain, r.M_bar, opts);
  r.certificate = es.cert;
  r.W_max_diag = es.cert.w;
  r.m_value = m_margin(es.cert, r.lambda2, coupling.gamma, coupling.gain);
  const BlockSplit split = coupling.blocks();
  if (split.count() > 0)
    r.lambda2_kron = r.lambda2 * min_product_over(es.cert.p, coupling.gamma, split.positive);
  r.eps2 = es.eps_bar;
  r.eps_bar = es.eps_bar;
  r.eps_source = "eps2";
  return r;
}

BoundReport corollary1_bounds(std::span<const dynamics::AffineDecomposedField> fields,
                              const graph::Laplacian& lap, const LinearCoupling& coupling,
                              const CertFamily& family, const SearchOptions& opts) {
  for (double g : coupling.gamma)
    if (!(g > 0.0))
      throw PreconditionError("corollary1 needs every inner coupling entry strictly positive");
  BoundReport r = theorem2_report(fields, lap, coupling, family, opts);
  r.theorem = "corollary1";
  return r;
}

Vec initial_error(std::span<const double> x0, std::size_t n_nodes) {
  if (n_nodes == 0 || x0.size() % n_nodes != 0)
    throw ValidationError("stacked state length is not a multiple of the node count");
  const std::size_t dim = x0.size() / n_nodes;
  Vec mean(dim, 0.0);
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t k = 0; k < dim; ++k) mean[k] += x0[i * dim + k];
  for (auto& v : mean) v /= static_cast<double>(n_nodes);
  Vec e(x0.begin(), x0.end());
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t k = 0; k < dim; ++k) e[i * dim + k] -= mean[k];
  return e;
}

namespace {

struct NonlinearBlocks {
  BlockSplit split;
  double lambda2_kron = kNaN;
  double w_r = -kInf;     // lambda_max(W_r)
  double w_rest = -kInf;  // lambda_max(W_{n-r}); -inf when the block is empty
};

NonlinearBlocks nonlinear_blocks(const NonlinearCoupling& coupling, std::span<const double> w,
                                 double lambda2) {
  NonlinearBlocks b;
  b.split = coupling.blocks();
  if (b.split.count() > 0) {
    double u = kInf;
    for (std::size_t i : b.split.positive) u = std::min(u, coupling.upsilon[i]);
    b.lambda2_kron = lambda2 * u;
    b.w_r = max_over(w, b.split.positive);
  }
  b.w_rest = max_over(w, b.split.rest);
  return b;
}

void check_upsilon(const NonlinearCoupling& coupling, BoundReport& r) {
  bool sound = !coupling.upsilon.empty();
  if (sound)
    for (std::size_t k = 0; k < coupling.upsilon.size(); ++k)
      if (coupling.upsilon[k] > 0.0 &&
          !check_upsilon_sampled(coupling.component(k), coupling.upsilon[k], coupling.e_max,
                                 20000, 11 + k))
        sound = false;
  r.hypotheses.push_back(hyp("upsilon_certified", sound,
                             "z eta(z) >= upsilon z^2 sampled on |z| <= e_max"));
  r.hypotheses.push_back(hyp("upsilon_positive_entry", coupling.blocks().count() > 0));
}

}  // namespace

BoundReport theorem3_report(std::span<const dynamics::AffineDecomposedField> fields,
                            const graph::Laplacian& lap, const NonlinearCoupling& coupling,
                            std::span<const double> x0, const NodeCertifier& certifier,
                            const NonlinearOptions& opts) {
  check_fields(fields);
  const std::size_t n_nodes = fields.size();
  const std::size_t dim = fields.front().dim;
  if (lap.size() != n_nodes) throw ValidationError("topology size differs from node count");
  if (x0.size() != n_nodes * dim) throw ValidationError("initial state has wrong length");
  coupling.validate(dim);
  if (coupling.upsilon.empty())
    throw PreconditionError("theorem3 needs a certified upsilon diagonal");

  BoundReport r;
  r.theorem = "theorem3";
  r.n_nodes = n_nodes;
  r.dim = dim;
  r.gain = coupling.gain;
  r.lambda2 = graph::lambda2(lap);
  r.delta = opts.delta;
  r.M_bar = max_bound(fields);
  r.h_bar_0 = max_h_origin(fields);
  const double sqrt_n = std::sqrt(static_cast<double>(n_nodes));
  check_upsilon(coupling, r);

  Vec w_max(dim, -kInf);
  r.w_max = -kInf;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const QuadCertificate c = certifier(i, ones(dim));
    r.w_max = std::max(r.w_max, max_entry(c.w));
    for (std::size_t k = 0; k < dim; ++k) w_max[k] = std::max(w_max[k], c.w[k]);
  }
  r.W_max_diag = w_max;
  r.certificate = QuadCertificate{ones(dim), w_max, kInf, CertMethod::AnalyticLinear};
  const bool negative = r.w_max < 0.0;
  r.hypotheses.push_back(hyp("negative_definite_quad", negative,
                             "max_i lambda_max(W_i) = " + std::to_string(r.w_max)));
  if (!negative) return r;

  r.eps1 = sqrt_n * (r.M_bar + r.h_bar_0) / (-r.w_max);
  r.BQ_radius = r.eps1;
  r.nu = norm2(x0);
  r.r_max = std::max(r.eps1, r.nu) + r.delta;
  const HMax hm = h_max_over_ball(fields, r.r_max);
  r.h_max = hm.value;
  r.h_max_statistical = hm.statistical;

  const NonlinearBlocks b = nonlinear_blocks(coupling, w_max, r.lambda2);
  r.coupled_count = b.split.count();
  r.lambda2_kron = b.lambda2_kron;
  r.e0_norm = norm2(initial_error(x0, n_nodes));
  const double half = coupling.e_max / 2.0;
  r.hypotheses.push_back(hyp("initial_error_within_half_emax", r.e0_norm <= half,
                             "||e(0)|| = " + std::to_string(r.e0_norm)));
  const bool ii = b.split.rest.empty() ||
                  -sqrt_n * (r.M_bar + r.h_max) / b.w_rest < half;
  r.hypotheses.push_back(hyp("uncoupled_block_bound", ii));
  if (b.split.count() == 0) return r;

  const double drive = std::isinf(coupling.e_max)
                           ? 0.0
                           : 2.0 * sqrt_n * (r.M_bar + r.h_max) / coupling.e_max;
  r.c_tilde = std::max((drive + b.w_r) / b.lambda2_kron, 0.0);
  r.hypotheses.push_back(hyp("gain_above_ctilde", coupling.gain > r.c_tilde,
                             "c = " + std::to_string(coupling.gain) +
                                 ", c_tilde = " + std::to_string(r.c_tilde)));
  r.m_value = -std::max(b.w_r - coupling.gain * b.lambda2_kron, b.w_rest);
  r.eps2 = r.m_value > 0.0 ? sqrt_n * (r.M_bar + r.h_max) / r.m_value : kInf;
  if (r.hypotheses_hold()) {
    if (r.eps1 <= r.eps2) {
      r.eps_bar = r.eps1;
      r.eps_source = "eps1";
    } else {
      r.eps_bar = r.eps2;
      r.eps_source = "eps2";
    }
  }
  return r;
}

BoundReport theorem4_report(std::span<const dynamics::AffineDecomposedField> fields,
                            const graph::Laplacian& lap, const NonlinearCoupling& coupling,
                            std::span<const double> e0, const QuadCertificate& common_cert) {
  check_fields(fields);
  const std::size_t n_nodes = fields.size();
  const std::size_t dim = fields.front().dim;
  if (lap.size() != n_nodes) throw ValidationError("topology size differs from node count");
  if (e0.size() != n_nodes * dim) throw ValidationError("initial error has wrong length");
  coupling.validate(dim);
  common_cert.validate();
  if (common_cert.w.size() != dim) throw ValidationError("certificate dimension mismatch");
  for (double p : common_cert.p)
    if (p != 1.0) throw PreconditionError("theorem4 is stated for P = I");
  if (coupling.upsilon.empty())
    throw PreconditionError("theorem4 needs a certified upsilon diagonal");

  BoundReport r;
  r.theorem = "theorem4";
  r.n_nodes = n_nodes;
  r.dim = dim;
  r.gain = coupling.gain;
  r.lambda2 = graph::lambda2(lap);
  r.M_bar = max_bound(fields);
  r.certificate = common_cert;
  r.W_max_diag = common_cert.w;
  const double sqrt_n = std::sqrt(static_cast<double>(n_nodes));
  r.hypotheses.push_back(hyp("common_h", fields_share_h(fields),
                             "sampled comparison of h across nodes"));
  check_upsilon(coupling, r);

  const NonlinearBlocks b = nonlinear_blocks(coupling, common_cert.w, r.lambda2);
  r.coupled_count = b.split.count();
  r.lambda2_kron = b.lambda2_kron;
  r.hypotheses.push_back(hyp("uncoupled_block_negative", b.w_rest < 0.0,
                             "W must be negative on components with zero upsilon"));
  r.e0_norm = norm2(e0);
  const double half = coupling.e_max / 2.0;
  r.hypotheses.push_back(hyp("initial_error_within_half_emax", r.e0_norm <= half,
                             "||e(0)|| = " + std::to_string(r.e0_norm)));
  const bool ii = b.split.rest.empty() || -sqrt_n * r.M_bar / b.w_rest <= half;
  r.hypotheses.push_back(hyp("uncoupled_block_bound", ii));
  if (b.split.count() == 0) return r;

  const double drive = std::isinf(coupling.e_max) ? 0.0 : 2.0 * sqrt_n * r.M_bar / coupling.e_max;
  r.c_tilde = std::max((drive + b.w_r) / b.lambda2_kron, 0.0);
  r.hypotheses.push_back(hyp("gain_above_ctilde", coupling.gain > r.c_tilde,
                             "c = " + std::to_string(coupling.gain) +
                                 ", c_tilde = " + std::to_string(r.c_tilde)));
  r.m_value = -std::max(b.w_r - coupling.gain * b.lambda2_kron, b.w_rest);
  r.eps2 = r.m_value > 0.0 ? r.M_bar * sqrt_n / r.m_value : kInf;
  if (r.hypotheses_hold()) {
    r.eps_bar = r.eps2;
    r.eps_source = "eps2";
  }
  return r;
}

}  // namespace pwsync::certify
