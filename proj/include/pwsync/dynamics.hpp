#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pwsync/linalg.hpp"

namespace pwsync::dynamics {

// Read-only view of one node's past states.
class History {
 public:
  virtual ~History() = default;
  virtual double at(std::size_t component, double t) const = 0;
};

// History that returns a fixed state for every time; used for pointwise
// evaluation outside the integrator.
class ConstantHistory final : public History {
 public:
  explicit ConstantHistory(Vec state) : state_(std::move(state)) {}
  double at(std::size_t component, double) const override { return state_.at(component); }

 private:
  Vec state_;
};

// sgn with the sgn(0) = 0 convention; width > 0 replaces it by the
// boundary-layer clamp(y / width, -1, 1).
double switch_sign(double y, double width = 0.0);

using DriftFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

struct BoundedTermInput {
  double t;
  std::span<const double> x;
  const History& history;
  double sign_width;
};
using BoundedFn = std::function<void(const BoundedTermInput& in, std::span<double> out)>;

// Node vector field f = h + g with ||g||_2 <= bound.
struct AffineDecomposedField {
  std::string family;
  std::size_t dim = 0;
  DriftFn h;
  BoundedFn g;
  double bound = 0.0;              // M
  std::optional<double> delay;     // consumed by g only
  bool discontinuous = false;
  // Growth data for sup ||h|| over a ball of radius R:
  //   ||h(t,x)|| <= h_at_origin + h_lipschitz * ||x||.
  // Empty lipschitz means only a sampled estimate is available.
  double h_at_origin = 0.0;
  std::optional<double> h_lipschitz;
  // Linear part when h(t,x) = A x, enabling analytic certificates.
  std::optional<Matrix> h_linear;

  Vec eval_h(double t, std::span<const double> x) const;
  Vec eval_g(double t, std::span<const double> x, const History& hist,
             double sign_width = 0.0) const;
};

struct IkedaParams {
  double a = 1.0;
  double b = 4.0;
  double tau = 2.0;
};

struct ChuaParams {
  double alpha = 10.0;
  double beta = 17.30;
  double slope_a = -1.34;
  double slope_b = -0.73;
};

struct RelayParams {
  Matrix A{{1.35, 1.0, 0.0}, {-99.93, 0.0, 1.0}, {-5.0, 0.0, 0.0}};
  Vec B{1.0, -2.0, 1.0};
  Vec C{1.0, 0.0, 0.0};
  // Replaces the analytic ||B||_2 when set (the published example quotes 2).
  std::optional<double> bound_override;
};

struct KuramotoParams {
  double omega = 0.0;  // rad/s
};

// h = -a x, g = b sin(x(t - tau)), M = b.
AffineDecomposedField ikeda_field(const IkedaParams& p);

// Chua piecewise-linear phi(x) = b x + (a - b)(|x+1| - |x-1|)/2.
double chua_phi(const ChuaParams& p, double x);

// Chua circuit forced by g = [sgn(sin(t - i*pi/N)), 0, 0], M = 1.
AffineDecomposedField chua_field(const ChuaParams& p, std::size_t node_index,
                                 std::size_t n_nodes);

// x' = A x - B sgn(C x), M = ||B||_2 unless overridden.
AffineDecomposedField relay_field(const RelayParams& p);

// Kuramoto phase error about the mean frequency: h = 0, g = omega - mean.
AffineDecomposedField kuramoto_error_field(const KuramotoParams& p, double omega_mean);

// h = A x with g = 0: identical linear nodes with no bounded part.
AffineDecomposedField linear_field(const Matrix& a);

// Stacked h + g over all nodes. histories may be empty when no field is
// delayed, otherwise one per node.
Vec eval_stack(std::span<const AffineDecomposedField> fields, double t,
               std::span<const double> x_stack,
               std::span<const History* const> histories = {}, double sign_width = 0.0);

}  // namespace pwsync::dynamics
