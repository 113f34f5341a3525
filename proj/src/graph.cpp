#include "pwsync/graph.hpp"

#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <string>

namespace pwsync::graph {

namespace {

constexpr double kZeroModeTol = 1e-9;

}  // namespace

Topology::Topology(Matrix weights) : weights_(std::move(weights)) {
  if (!weights_.square() || weights_.rows() == 0)
    throw ValidationError("topology weights must be a non-empty square matrix");
  const std::size_t n = weights_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    if (weights_(i, i) != 0.0)
      throw ValidationError("topology has a self-loop at node " + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double w = weights_(i, j);
      if (!std::isfinite(w) || w < 0.0)
        throw ValidationError("negative or non-finite weight at (" + std::to_string(i) +
                              "," + std::to_string(j) + ")");
      if (w != weights_(j, i))
        throw ValidationError("asymmetric weight at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
    }
  }
}

Topology Topology::from_edges(std::size_t n_nodes, std::span<const Edge> edges) {
  Matrix w(n_nodes, n_nodes);
  for (const auto& e : edges) {
    if (e.i >= n_nodes || e.j >= n_nodes)
      throw ValidationError("edge index out of range");
    if (e.i == e.j) throw ValidationError("self-loop edge");
    if (e.weight < 0.0) throw ValidationError("negative edge weight");
    w(e.i, e.j) = e.weight;
    w(e.j, e.i) = e.weight;
  }
  return Topology(std::move(w));
}

Topology Topology::scaled(double factor) const {
  if (!(factor >= 0.0)) throw ValidationError("weight scale must be non-negative");
  return Topology(weights_ * factor);
}

Topology Topology::permuted(std::span<const std::size_t> perm) const {
  const std::size_t n = size();
  if (perm.size() != n) throw ValidationError("permutation size mismatch");
  Matrix w(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) w(a, b) = weights_(perm[a], perm[b]);
  return Topology(std::move(w));
}

Laplacian::Laplacian(Matrix matrix)
    : matrix_(std::move(matrix)), eigenvalues_(symmetric_eigenvalues(matrix_)) {}

Laplacian build_laplacian(const Topology& topo) {
  const std::size_t n = topo.size();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      degree += topo.weight(i, k);
      l(i, k) = -topo.weight(i, k);
    }
    l(i, i) = degree;
  }
  return Laplacian(std::move(l));
}

bool is_connected(const Topology& topo) {
  const std::size_t n = topo.size();
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < n; ++v) {
      if (!seen[v] && topo.weight(u, v) > 0.0) {
        seen[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

double lambda2(const Laplacian& lap) {
  const Vec& eig = lap.eigenvalues();
  if (eig.size() < 2)
    throw PreconditionError("lambda2 needs at least two nodes");
  const double scale = std::max(1.0, std::abs(eig.back()));
  if (std::abs(eig[0]) > kZeroModeTol * scale)
    throw PreconditionError("Laplacian has no structural zero eigenvalue");
  if (eig[1] <= kZeroModeTol * scale)
    throw PreconditionError("graph is disconnected: lambda2 is zero");
  return eig[1];
}

double lambda2_kron_diag(const Laplacian& lap, std::span<const double> d) {
  if (d.empty()) throw ValidationError("lambda2_kron_diag: empty diagonal");
  for (double v : d)
    if (!(v > 0.0)) throw ValidationError("lambda2_kron_diag: diagonal entries must be > 0");
  return lambda2(lap) * min_entry(d);
}

Topology load_edge_list(const std::filesystem::path& path, std::size_t n_nodes) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge list: " + path.string());
  std::vector<Topology::Edge> edges;
  std::size_t max_index = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    long long i = 0;
    long long j = 0;
    double w = 0.0;
    if (!(ss >> i)) continue;
    if (!(ss >> j >> w) || i < 0 || j < 0)
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 'i j weight'");
    std::string trailing;
    if (ss >> trailing)
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": trailing tokens");
    edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), w});
    max_index = std::max({max_index, static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
  }
  const std::size_t n = n_nodes ? n_nodes : (edges.empty() ? 0 : max_index + 1);
  return Topology::from_edges(n, edges);
}

Topology random_connected(std::size_t n, double p, std::uint64_t seed) {
  if (n < 2) throw ValidationError("random_connected needs n >= 2");
  if (!(p > 0.0 && p <= 1.0)) throw ValidationError("edge probability must be in (0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Matrix w(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (unit(rng) < p) w(i, j) = w(j, i) = 1.0;
    Topology topo(std::move(w));
    if (is_connected(topo)) return topo;
  }
  throw ValidationError("random_connected: no connected draw found");
}

Topology ring(std::size_t n, double weight) {
  if (n < 3) throw ValidationError("ring needs n >= 3");
  std::vector<Topology::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, weight});
  return Topology::from_edges(n, edges);
}

}  // namespace pwsync::graph
