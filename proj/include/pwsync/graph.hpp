#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "pwsync/linalg.hpp"

namespace pwsync::graph {

// Weighted undirected graph: symmetric, non-negative weights, zero diagonal.
class Topology {
 public:
  // Validates symmetry, sign and diagonal; throws ValidationError.
  explicit Topology(Matrix weights);

  struct Edge {
    std::size_t i;
    std::size_t j;
    double weight;
  };
  static Topology from_edges(std::size_t n_nodes, std::span<const Edge> edges);

  std::size_t size() const { return weights_.rows(); }
  double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }
  const Matrix& weights() const { return weights_; }

  Topology scaled(double factor) const;
  // Node k of the result is node perm[k] of this graph.
  Topology permuted(std::span<const std::size_t> perm) const;

 private:
  Matrix weights_;
};

class Laplacian {
 public:
  explicit Laplacian(Matrix matrix);

  const Matrix& matrix() const { return matrix_; }
  std::size_t size() const { return matrix_.rows(); }
  // Ascending spectrum, computed once at construction.
  const Vec& eigenvalues() const { return eigenvalues_; }

 private:
  Matrix matrix_;
  Vec eigenvalues_;
};

Laplacian build_laplacian(const Topology& topo);

// Breadth-first reachability over positive-weight edges.
bool is_connected(const Topology& topo);

// Smallest nonzero eigenvalue. Throws PreconditionError if the graph is
// disconnected (the second eigenvalue is numerically zero).
double lambda2(const Laplacian& lap);

// lambda2(L kron diag(d)) = lambda2(L) * min_i d_i for d_i > 0.
double lambda2_kron_diag(const Laplacian& lap, std::span<const double> d);

// "i j weight" per line, zero-based, '#' comments. Node count is the largest
// index + 1 unless n_nodes is given.
Topology load_edge_list(const std::filesystem::path& path,
                        std::size_t n_nodes = 0);

// Erdos-Renyi G(n, p) with unit weights, redrawn until connected.
Topology random_connected(std::size_t n, double p, std::uint64_t seed);

Topology ring(std::size_t n, double weight = 1.0);

}  // namespace pwsync::graph
