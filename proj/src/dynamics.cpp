#include "pwsync/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pwsync::dynamics {

double switch_sign(double y, double width) {
  if (width > 0.0) return std::clamp(y / width, -1.0, 1.0);
  return (y > 0.0) - (y < 0.0);
}

Vec AffineDecomposedField::eval_h(double t, std::span<const double> x) const {
  Vec out(dim, 0.0);
  h(t, x, out);
  return out;
}

Vec AffineDecomposedField::eval_g(double t, std::span<const double> x, const History& hist,
                                  double sign_width) const {
  Vec out(dim, 0.0);
  g(BoundedTermInput{t, x, hist, sign_width}, out);
  return out;
}

AffineDecomposedField ikeda_field(const IkedaParams& p) {
  if (!(p.a > 0.0 && p.b > 0.0 && p.tau > 0.0))
    throw ValidationError("Ikeda parameters a, b, tau must be positive");
  AffineDecomposedField f;
  f.family = "ikeda";
  f.dim = 1;
  const double a = p.a;
  const double b = p.b;
  const double tau = p.tau;
  f.h = [a](double, std::span<const double> x, std::span<double> out) { out[0] = -a * x[0]; };
  f.g = [b, tau](const BoundedTermInput& in, std::span<double> out) {
    out[0] = b * std::sin(in.history.at(0, in.t - tau));
  };
  f.bound = b;
  f.delay = tau;
  f.h_lipschitz = a;
  f.h_linear = Matrix{{-a}};
  return f;
}

double chua_phi(const ChuaParams& p, double x) {
  return p.slope_b * x + (p.slope_a - p.slope_b) * (std::abs(x + 1.0) - std::abs(x - 1.0)) / 2.0;
}

AffineDecomposedField chua_field(const ChuaParams& p, std::size_t node_index,
                                 std::size_t n_nodes) {
  if (n_nodes < 1 || node_index >= n_nodes)
    throw ValidationError("chua_field: node index out of range");
  if (!(p.alpha > 0.0 && p.beta > 0.0))
    throw ValidationError("chua_field: alpha and beta must be positive");
  AffineDecomposedField f;
  f.family = "chua";
  f.dim = 3;
  f.h = [p](double, std::span<const double> x, std::span<double> out) {
    out[0] = p.alpha * (x[1] - x[0] - chua_phi(p, x[0]));
    out[1] = x[0] - x[1] + x[2];
    out[2] = -p.beta * x[1];
  };
  const double phase = static_cast<double>(node_index) * std::numbers::pi /
                       static_cast<double>(n_nodes);
  f.g = [phase](const BoundedTermInput& in, std::span<double> out) {
    out[0] = switch_sign(std::sin(in.t - phase), in.sign_width);
    out[1] = 0.0;
    out[2] = 0.0;
  };
  f.bound = 1.0;
  f.discontinuous = true;
  // h is continuous piecewise linear with h(0) = 0: bound by the steepest sector.
  double lip = 0.0;
  for (double slope : {p.slope_a, p.slope_b}) {
    const Matrix sector{{-p.alpha * (1.0 + slope), p.alpha, 0.0},
                        {1.0, -1.0, 1.0},
                        {0.0, -p.beta, 0.0}};
    lip = std::max(lip, spectral_norm(sector));
  }
  f.h_lipschitz = lip;
  return f;
}

AffineDecomposedField relay_field(const RelayParams& p) {
  if (p.A.rows() != 3 || p.A.cols() != 3 || p.B.size() != 3 || p.C.size() != 3)
    throw ValidationError("relay_field: A must be 3x3, B and C length 3");
  AffineDecomposedField f;
  f.family = "relay";
  f.dim = 3;
  const Matrix a = p.A;
  f.h = [a](double, std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 3; ++j) acc += a(i, j) * x[j];
      out[i] = acc;
    }
  };
  const Vec b = p.B;
  const Vec c = p.C;
  f.g = [b, c](const BoundedTermInput& in, std::span<double> out) {
    const double y = c[0] * in.x[0] + c[1] * in.x[1] + c[2] * in.x[2];
    const double r = -switch_sign(y, in.sign_width);
    for (std::size_t i = 0; i < 3; ++i) out[i] = b[i] * r;
  };
  f.bound = p.bound_override.value_or(norm2(p.B));
  f.discontinuous = true;
  f.h_lipschitz = spectral_norm(p.A);
  f.h_linear = p.A;
  return f;
}

AffineDecomposedField kuramoto_error_field(const KuramotoParams& p, double omega_mean) {
  AffineDecomposedField f;
  f.family = "kuramoto";
  f.dim = 1;
  f.h = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  const double detuning = p.omega - omega_mean;
  f.g = [detuning](const BoundedTermInput&, std::span<double> out) { out[0] = detuning; };
  f.bound = std::abs(detuning);
  f.h_lipschitz = 0.0;
  f.h_linear = Matrix{{0.0}};
  return f;
}

AffineDecomposedField linear_field(const Matrix& a) {
  if (!a.square() || a.rows() == 0) throw ValidationError("linear_field: A must be square");
  AffineDecomposedField f;
  f.family = "linear";
  f.dim = a.rows();
  f.h = [a](double, std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
      out[i] = acc;
    }
  };
  f.g = [](const BoundedTermInput&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  f.bound = 0.0;
  f.h_lipschitz = spectral_norm(a);
  f.h_linear = a;
  return f;
}

Vec eval_stack(std::span<const AffineDecomposedField> fields, double t,
               std::span<const double> x_stack,
               std::span<const History* const> histories, double sign_width) {
  if (fields.empty()) return {};
  const std::size_t dim = fields.front().dim;
  for (const auto& f : fields)
    if (f.dim != dim) throw ValidationError("eval_stack: fields differ in dimension");
  if (x_stack.size() != fields.size() * dim)
    throw ValidationError("eval_stack: stacked state has wrong length");
  if (!histories.empty() && histories.size() != fields.size())
    throw ValidationError("eval_stack: one history per node required");

  Vec out(x_stack.size(), 0.0);
  Vec g_buf(dim);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto x = x_stack.subspan(i * dim, dim);
    std::span<double> block(out.data() + i * dim, dim);
    fields[i].h(t, x, block);
    std::optional<ConstantHistory> fallback;
    const History* hist = histories.empty() ? nullptr : histories[i];
    if (hist == nullptr) {
      fallback.emplace(Vec(x.begin(), x.end()));
      hist = &*fallback;
    }
    fields[i].g(BoundedTermInput{t, x, *hist, sign_width}, g_buf);
    for (std::size_t k = 0; k < dim; ++k) block[k] += g_buf[k];
  }
  return out;
}

}  // namespace pwsync::dynamics
