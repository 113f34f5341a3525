#include "pwsync/coupling.hpp"

#include <cmath>

#include "pwsync/dynamics.hpp"

namespace pwsync {

std::vector<std::size_t> BlockSplit::order() const {
  std::vector<std::size_t> out = positive;
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

BlockSplit split_positive(std::span<const double> diag) {
  BlockSplit split;
  for (std::size_t i = 0; i < diag.size(); ++i)
    (diag[i] > 0.0 ? split.positive : split.rest).push_back(i);
  return split;
}

void LinearCoupling::validate(std::size_t dim) const {
  if (!(gain >= 0.0) || !std::isfinite(gain))
    throw ValidationError("coupling gain must be finite and non-negative");
  if (gamma.size() != dim)
    throw ValidationError("inner coupling diagonal has " + std::to_string(gamma.size()) +
                          " entries, node dimension is " + std::to_string(dim));
  for (double g : gamma)
    if (!(g >= 0.0)) throw ValidationError("inner coupling entries must be non-negative");
}

void NonlinearCoupling::validate(std::size_t dim) const {
  if (!(gain >= 0.0) || !std::isfinite(gain))
    throw ValidationError("coupling gain must be finite and non-negative");
  if (eta.size() != 1 && eta.size() != dim)
    throw ValidationError("coupling function must be scalar or one per component");
  for (const auto& f : eta)
    if (!f) throw ValidationError("empty coupling function");
  if (!upsilon.empty() && upsilon.size() != dim)
    throw ValidationError("upsilon diagonal size does not match node dimension");
  for (double u : upsilon)
    if (!(u >= 0.0)) throw ValidationError("upsilon entries must be non-negative");
  if (!(e_max > 0.0)) throw ValidationError("e_max must be positive");
}

double coupling_gain(const CouplingSpec& spec) {
  return std::visit([](const auto& c) { return c.gain; }, spec);
}

CouplingSpec with_gain(CouplingSpec spec, double gain) {
  std::visit([gain](auto& c) { c.gain = gain; }, spec);
  return spec;
}

ScalarCoupling identity_coupling() {
  return [](double z) { return z; };
}

ScalarCoupling sine_coupling() {
  return [](double z) { return std::sin(z); };
}

ScalarCoupling ikeda_pws_coupling(double sign_width) {
  return [sign_width](double z) {
    const double s = dynamics::switch_sign(z, sign_width);
    const double a = std::abs(z);
    if (a < 1.0) return s;
    return s * ((a - 1.0) * (a - 1.0) + 1.0);
  };
}

}  // namespace pwsync
