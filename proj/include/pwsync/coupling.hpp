#pragma once

#include <functional>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "pwsync/linalg.hpp"

namespace pwsync {

// Componentwise coupling nonlinearity eta(z).
using ScalarCoupling = std::function<double(double)>;

// Index split of a diagonal into strictly positive entries (the "first l")
// and the rest, each kept in original order. Theorems written with the
// positive entries leading are applied through this permutation.
struct BlockSplit {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> rest;

  std::size_t count() const { return positive.size(); }
  std::vector<std::size_t> order() const;
};

BlockSplit split_positive(std::span<const double> diag);

// -c sum_j a_ij Gamma (x_i - x_j)
struct LinearCoupling {
  double gain = 0.0;
  Vec gamma;  // diagonal of the inner coupling matrix

  BlockSplit blocks() const { return split_positive(gamma); }
  void validate(std::size_t dim) const;
};

// -c sum_j a_ij eta(x_i - x_j)
struct NonlinearCoupling {
  double gain = 0.0;
  // One function per component, or a single function applied to all.
  std::vector<ScalarCoupling> eta;
  Vec upsilon;
  double e_max = std::numeric_limits<double>::infinity();

  const ScalarCoupling& component(std::size_t k) const {
    return eta.size() == 1 ? eta.front() : eta[k];
  }
  BlockSplit blocks() const { return split_positive(upsilon); }
  void validate(std::size_t dim) const;
};

using CouplingSpec = std::variant<LinearCoupling, NonlinearCoupling>;

double coupling_gain(const CouplingSpec& spec);
CouplingSpec with_gain(CouplingSpec spec, double gain);

// Built-in nonlinearities.
ScalarCoupling identity_coupling();
ScalarCoupling sine_coupling();
// sign(z) for |z| < 1, sign(z) ((|z| - 1)^2 + 1) otherwise. A positive
// sign_width replaces sign by its boundary-layer clamp.
ScalarCoupling ikeda_pws_coupling(double sign_width = 0.0);

}  // namespace pwsync
