#include "pwsync/scenario.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace pwsync::scenario {

namespace {

// ---- built-ins --------------------------------------------------------------

const std::map<std::string, std::string>& builtins() {
  static const std::map<std::string, std::string> table{
      {"ikeda10-linear", R"(name: ikeda10-linear
description: ten mismatched Ikeda delay systems, diffusive coupling
seed: 7
topology: {kind: erdos_renyi, n: 10, p: 0.5}
nodes: {family: ikeda, a: 1, b: 4, tau: 2, mismatch: 0.25}
coupling: {kind: linear, gain: 20, gamma: [1]}
theorem: thm1
sim: {dt: 0.001, t_end: 200, tail_fraction: 0.2}
initial: {kind: normal, sigma: 1}
)"},
      {"ikeda10-nonlinear", R"(name: ikeda10-nonlinear
description: ten mismatched Ikeda delay systems, piecewise-smooth coupling
seed: 7
topology: {kind: erdos_renyi, n: 10, p: 0.5}
nodes: {family: ikeda, a: 1, b: 4, tau: 2, mismatch: 0.25}
coupling: {kind: nonlinear, gain: 20, eta: ikeda_pws, e_max: inf}
theorem: thm3
sim: {dt: 0.001, t_end: 200, tail_fraction: 0.2}
initial: {kind: normal, sigma: 1}
)"},
      {"chua10", R"(name: chua10
description: ten Chua circuits with phase-shifted square-wave forcing
seed: 3
topology: {kind: erdos_renyi, n: 10, p: 0.4, lambda2_target: 2.22}
nodes: {family: chua, alpha: 10, beta: 17.30, slope_a: -1.34, slope_b: -0.73}
coupling: {kind: linear, gain: 10, gamma: [1, 0, 1]}
theorem: thm2
sim: {dt: 0.001, t_end: 60, tail_fraction: 0.2}
initial: {kind: uniform, radius: 1}
)"},
      {"relay5", R"(name: relay5
description: five chaotic relay systems on a fixed five-node graph
seed: 5
topology:
  kind: edges
  n: 5
  edges: [[0, 1, 1], [0, 3, 1], [0, 4, 1], [1, 2, 1], [1, 3, 1], [1, 4, 1], [2, 3, 1], [3, 4, 1]]
nodes:
  family: relay
  A: [[1.35, 1, 0], [-99.93, 0, 1], [-5, 0, 0]]
  B: [1, -2, 1]
  C: [1, 0, 0]
coupling: {kind: linear, gain: 50, gamma: [1, 1, 1]}
certificate: {p_family: identity}
theorem: cor1
sim: {dt: 0.00001, t_end: 0.2, regularization_width: 0.0001, tail_fraction: 0.2}
initial: {kind: normal, sigma: 0.1}
)"},
      {"kuramoto4", R"(name: kuramoto4
description: four Kuramoto oscillators on a ring, phase error frame
seed: 4
topology: {kind: ring, n: 4}
nodes: {family: kuramoto, omega_draw: {sigma: 1, max_deviation: 0.316}}
coupling: {kind: nonlinear, gain: 0.75, eta: sine, e_max: pi/3}
theorem: thm4
sim: {dt: 0.001, t_end: 40, tail_fraction: 0.2}
initial: {kind: uniform, radius: 0.2}
)"},
      {"contract", R"(name: contract
description: identical contracting linear nodes, no bounded term
seed: 1
topology: {kind: ring, n: 5}
nodes:
  family: linear
  A: [[-1, 0.5], [-0.5, -1]]
coupling: {kind: linear, gain: 1, gamma: [1, 1]}
theorem: thm1
sim: {dt: 0.001, t_end: 20, tail_fraction: 0.2}
initial: {kind: normal, sigma: 1}
)"},
  };
  return table;
}

// ---- YAML helpers -----------------------------------------------------------

void check_keys(const YAML::Node& node, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError(fmt::format("'{}' must be a mapping", section));
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key))
      throw ConfigError(fmt::format("unknown key '{}' in '{}'", key, section));
  }
}

std::string field_name(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

// Numbers plus "inf", "pi", "pi/k" and "k*pi".
double parse_number(const YAML::Node& n, const std::string& where) {
  if (!n.IsScalar()) throw ConfigError(fmt::format("'{}' must be a number", where));
  std::string s = n.Scalar();
  s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
  if (s == "inf" || s == ".inf" || s == "infinity") return certify::kInf;
  auto as_double = [&](const std::string& t) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || t.empty())
      throw ConfigError(fmt::format("'{}' is not a number: '{}'", where, n.Scalar()));
    return v;
  };
  if (s == "pi") return std::numbers::pi;
  if (s.rfind("pi/", 0) == 0) return std::numbers::pi / as_double(s.substr(3));
  if (s.size() > 3 && s.compare(s.size() - 3, 3, "*pi") == 0)
    return as_double(s.substr(0, s.size() - 3)) * std::numbers::pi;
  return as_double(s);
}

double get_number(const YAML::Node& map, const std::string& section, const std::string& key,
                  double fallback) {
  const auto n = map[key];
  if (!n) return fallback;
  return parse_number(n, field_name(section, key));
}

std::uint64_t get_seed(const YAML::Node& map, const std::string& section, std::uint64_t fallback) {
  const auto n = map["seed"];
  if (!n) return fallback;
  try {
    return n.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("'{}' must be a non-negative integer", field_name(section, "seed")));
  }
}

std::string get_string(const YAML::Node& map, const std::string& section, const std::string& key,
                       const std::string& fallback) {
  const auto n = map[key];
  if (!n) return fallback;
  if (!n.IsScalar()) throw ConfigError(fmt::format("'{}' must be a string", field_name(section, key)));
  return n.Scalar();
}

Vec get_vector(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence()) throw ConfigError(fmt::format("'{}' must be a list", where));
  Vec v;
  for (std::size_t i = 0; i < n.size(); ++i)
    v.push_back(parse_number(n[i], fmt::format("{}[{}]", where, i)));
  return v;
}

Matrix get_matrix(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence() || n.size() == 0)
    throw ConfigError(fmt::format("'{}' must be a list of rows", where));
  const std::size_t rows = n.size();
  std::vector<Vec> data;
  for (std::size_t i = 0; i < rows; ++i) data.push_back(get_vector(n[i], fmt::format("{}[{}]", where, i)));
  const std::size_t cols = data.front().size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (data[i].size() != cols) throw ConfigError(fmt::format("'{}' rows differ in length", where));
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = data[i][j];
  }
  return m;
}

// Scalar or per-node list.
Vec per_node(const YAML::Node& map, const std::string& section, const std::string& key,
             std::size_t n, double fallback) {
  const auto node = map[key];
  if (!node) return Vec(n, fallback);
  if (node.IsSequence()) {
    Vec v = get_vector(node, field_name(section, key));
    if (v.size() != n)
      throw ConfigError(fmt::format("'{}' has {} entries for {} nodes", field_name(section, key),
                                    v.size(), n));
    return v;
  }
  return Vec(n, parse_number(node, field_name(section, key)));
}

// Sub-seeds derived from the scenario seed.
constexpr std::uint64_t kParamSalt = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kInitialSalt = 0xC2B2AE3D27D4EB4FULL;

std::string join(const Vec& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt::format("{:.17g}", v[i]);
  return "[" + out + "]";
}

// ---- section parsers --------------------------------------------------------

void parse_topology(const YAML::Node& n, Scenario& s) {
  check_keys(n, "topology", {"kind", "n", "edges", "p", "weight", "path", "lambda2_target", "seed"});
  auto& t = s.topology;
  t.kind = get_string(n, "topology", "kind", "");
  if (t.kind.empty()) throw ConfigError("'topology.kind' is required");
  const double nn = get_number(n, "topology", "n", 0.0);
  if (nn < 0 || nn != std::floor(nn)) throw ConfigError("'topology.n' must be a non-negative integer");
  t.n = static_cast<std::size_t>(nn);
  t.seed = get_seed(n, "topology", s.seed);
  if (n["lambda2_target"]) t.lambda2_target = get_number(n, "topology", "lambda2_target", 0.0);
  if (t.kind == "edges") {
    if (!n["edges"]) throw ConfigError("'topology.edges' is required for kind edges");
    const auto e = n["edges"];
    if (!e.IsSequence()) throw ConfigError("'topology.edges' must be a list");
    for (std::size_t k = 0; k < e.size(); ++k) {
      const Vec triple = get_vector(e[k], fmt::format("topology.edges[{}]", k));
      if (triple.size() != 3 && triple.size() != 2)
        throw ConfigError(fmt::format("'topology.edges[{}]' must be [i, j] or [i, j, w]", k));
      for (std::size_t q = 0; q < 2; ++q)
        if (triple[q] < 0 || triple[q] != std::floor(triple[q]))
          throw ConfigError(fmt::format("'topology.edges[{}]' has a bad node index", k));
      t.edges.push_back({static_cast<std::size_t>(triple[0]), static_cast<std::size_t>(triple[1]),
                         triple.size() == 3 ? triple[2] : 1.0});
    }
    if (t.n == 0)
      for (const auto& ed : t.edges) t.n = std::max({t.n, ed.i + 1, ed.j + 1});
  } else if (t.kind == "erdos_renyi") {
    t.p = get_number(n, "topology", "p", 0.5);
    if (!(t.p > 0.0 && t.p <= 1.0)) throw ConfigError("'topology.p' must lie in (0, 1]");
  } else if (t.kind == "ring") {
    t.ring_weight = get_number(n, "topology", "weight", 1.0);
  } else if (t.kind == "file") {
    t.path = get_string(n, "topology", "path", "");
    if (t.path.empty()) throw ConfigError("'topology.path' is required for kind file");
    if (t.n == 0) t.n = graph::load_edge_list(t.path).size();
  } else {
    throw ConfigError(fmt::format("'topology.kind' must be edges, erdos_renyi, ring or file, got '{}'",
                                  t.kind));
  }
  if (t.n < 2) throw ConfigError("'topology.n' must be at least 2");
}

void parse_nodes(const YAML::Node& n, Scenario& s) {
  const std::string fam = get_string(n, "nodes", "family", "");
  const std::size_t count = s.topology.n;
  auto& ns = s.nodes;
  const std::uint64_t seed = get_seed(n, "nodes", s.seed ^ kParamSalt);
  if (fam == "ikeda") {
    check_keys(n, "nodes", {"family", "a", "b", "tau", "mismatch", "seed"});
    ns.family = Family::Ikeda;
    Vec a = per_node(n, "nodes", "a", count, 1.0);
    Vec b = per_node(n, "nodes", "b", count, 4.0);
    Vec tau = per_node(n, "nodes", "tau", count, 2.0);
    const double width = get_number(n, "nodes", "mismatch", 0.0);
    if (width < 0.0) throw ConfigError("'nodes.mismatch' must be non-negative");
    if (width > 0.0) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-width, width);
      for (std::size_t i = 0; i < count; ++i) {
        a[i] += u(rng);
        b[i] += u(rng);
        tau[i] += u(rng);
      }
      ns.expansion = fmt::format("uniform mismatch +-{} on a, b, tau, seed {}", width, seed);
    }
    for (std::size_t i = 0; i < count; ++i) ns.ikeda.push_back({a[i], b[i], tau[i]});
  } else if (fam == "chua") {
    check_keys(n, "nodes", {"family", "alpha", "beta", "slope_a", "slope_b"});
    ns.family = Family::Chua;
    ns.chua.alpha = get_number(n, "nodes", "alpha", ns.chua.alpha);
    ns.chua.beta = get_number(n, "nodes", "beta", ns.chua.beta);
    ns.chua.slope_a = get_number(n, "nodes", "slope_a", ns.chua.slope_a);
    ns.chua.slope_b = get_number(n, "nodes", "slope_b", ns.chua.slope_b);
  } else if (fam == "relay") {
    check_keys(n, "nodes", {"family", "A", "B", "C", "bound_override"});
    ns.family = Family::Relay;
    if (n["A"]) ns.relay.A = get_matrix(n["A"], "nodes.A");
    if (n["B"]) ns.relay.B = get_vector(n["B"], "nodes.B");
    if (n["C"]) ns.relay.C = get_vector(n["C"], "nodes.C");
    if (n["bound_override"]) ns.relay.bound_override = get_number(n, "nodes", "bound_override", 0.0);
  } else if (fam == "kuramoto") {
    check_keys(n, "nodes", {"family", "omega", "omega_draw", "seed"});
    ns.family = Family::Kuramoto;
    if (n["omega"] && n["omega_draw"])
      throw ConfigError("'nodes.omega' and 'nodes.omega_draw' are exclusive");
    if (n["omega"]) {
      ns.omega = per_node(n, "nodes", "omega", count, 0.0);
    } else if (n["omega_draw"]) {
      const auto d = n["omega_draw"];
      check_keys(d, "nodes.omega_draw", {"mean", "sigma", "max_deviation"});
      const double mean = get_number(d, "nodes.omega_draw", "mean", 0.0);
      const double sigma = get_number(d, "nodes.omega_draw", "sigma", 1.0);
      if (!(sigma > 0.0)) throw ConfigError("'nodes.omega_draw.sigma' must be positive");
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g(mean, sigma);
      for (std::size_t i = 0; i < count; ++i) ns.omega.push_back(g(rng));
      std::string note = fmt::format("normal(mean {}, sigma {}) seed {}", mean, sigma, seed);
      if (d["max_deviation"]) {
        const double target = get_number(d, "nodes.omega_draw", "max_deviation", 0.0);
        if (!(target > 0.0)) throw ConfigError("'nodes.omega_draw.max_deviation' must be positive");
        double avg = 0.0;
        for (double w : ns.omega) avg += w;
        avg /= static_cast<double>(count);
        double dev = 0.0;
        for (double w : ns.omega) dev = std::max(dev, std::abs(w - avg));
        for (double& w : ns.omega) w = avg + (w - avg) * target / dev;
        note += fmt::format(", deviations rescaled to max {}", target);
      }
      ns.expansion = note;
    } else {
      throw ConfigError("'nodes' needs omega or omega_draw for family kuramoto");
    }
  } else if (fam == "linear") {
    check_keys(n, "nodes", {"family", "A"});
    ns.family = Family::Linear;
    if (!n["A"]) throw ConfigError("'nodes.A' is required for family linear");
    ns.linear_a = get_matrix(n["A"], "nodes.A");
  } else {
    throw ConfigError(fmt::format(
        "'nodes.family' must be ikeda, chua, relay, kuramoto or linear, got '{}'", fam));
  }
}

std::size_t family_dim(const Scenario& s) {
  switch (s.nodes.family) {
    case Family::Ikeda:
    case Family::Kuramoto: return 1;
    case Family::Chua:
    case Family::Relay: return 3;
    case Family::Linear: return s.nodes.linear_a.rows();
  }
  return 0;
}

void parse_coupling(const YAML::Node& n, Scenario& s) {
  check_keys(n, "coupling", {"kind", "gain", "gamma", "eta", "sign_width", "e_max", "upsilon"});
  auto& c = s.coupling;
  c.kind = get_string(n, "coupling", "kind", "linear");
  c.gain = get_number(n, "coupling", "gain", 1.0);
  const std::size_t dim = family_dim(s);
  if (c.kind == "linear") {
    for (const char* k : {"eta", "sign_width", "e_max", "upsilon"})
      if (n[k]) throw ConfigError(fmt::format("'coupling.{}' applies to nonlinear coupling only", k));
    c.gamma = n["gamma"] ? get_vector(n["gamma"], "coupling.gamma") : Vec(dim, 1.0);
    if (c.gamma.size() == 1 && dim > 1) c.gamma.assign(dim, c.gamma.front());
  } else if (c.kind == "nonlinear") {
    if (n["gamma"]) throw ConfigError("'coupling.gamma' applies to linear coupling only");
    c.eta = get_string(n, "coupling", "eta", "identity");
    if (c.eta != "identity" && c.eta != "sine" && c.eta != "ikeda_pws")
      throw ConfigError(fmt::format("'coupling.eta' must be identity, sine or ikeda_pws, got '{}'", c.eta));
    c.eta_sign_width = get_number(n, "coupling", "sign_width", 0.0);
    c.e_max = get_number(n, "coupling", "e_max", certify::kInf);
    if (n["upsilon"]) {
      Vec u = get_vector(n["upsilon"], "coupling.upsilon");
      if (u.size() == 1 && dim > 1) u.assign(dim, u.front());
      c.upsilon = u;
    }
  } else {
    throw ConfigError(fmt::format("'coupling.kind' must be linear or nonlinear, got '{}'", c.kind));
  }
}

void parse_certificate(const YAML::Node& n, Scenario& s) {
  check_keys(n, "certificate", {"p_family", "starts", "seed", "delta"});
  auto& c = s.certificate;
  const std::string fam = get_string(n, "certificate", "p_family", "diagonal");
  if (fam != "identity" && fam != "diagonal")
    throw ConfigError("'certificate.p_family' must be identity or diagonal");
  c.identity_p = fam == "identity";
  const double starts = get_number(n, "certificate", "starts", c.starts);
  if (starts < 1 || starts != std::floor(starts))
    throw ConfigError("'certificate.starts' must be a positive integer");
  c.starts = static_cast<int>(starts);
  c.seed = get_seed(n, "certificate", c.seed);
  c.delta = get_number(n, "certificate", "delta", c.delta);
}

void parse_sim(const YAML::Node& n, Scenario& s) {
  check_keys(n, "sim", {"dt", "t_end", "regularization_width", "tail_fraction"});
  auto& c = s.sim;
  c.dt = get_number(n, "sim", "dt", c.dt);
  c.t_end = get_number(n, "sim", "t_end", c.t_end);
  c.regularization_width = get_number(n, "sim", "regularization_width", c.regularization_width);
  c.tail_fraction = get_number(n, "sim", "tail_fraction", c.tail_fraction);
}

void parse_initial(const YAML::Node& n, Scenario& s) {
  check_keys(n, "initial", {"kind", "sigma", "radius", "values", "seed"});
  auto& c = s.initial;
  c.kind = get_string(n, "initial", "kind", "normal");
  c.seed = get_seed(n, "initial", s.seed ^ kInitialSalt);
  c.sigma = get_number(n, "initial", "sigma", 1.0);
  c.radius = get_number(n, "initial", "radius", 1.0);
  if (c.kind == "explicit") {
    if (!n["values"]) throw ConfigError("'initial.values' is required for kind explicit");
    c.values = get_vector(n["values"], "initial.values");
  } else if (c.kind != "normal" && c.kind != "uniform") {
    throw ConfigError(fmt::format("'initial.kind' must be normal, uniform or explicit, got '{}'", c.kind));
  }
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::Ikeda: return "ikeda";
    case Family::Chua: return "chua";
    case Family::Relay: return "relay";
    case Family::Kuramoto: return "kuramoto";
    case Family::Linear: return "linear";
  }
  return "?";
}

void Scenario::validate() const {
  const std::size_t dim = family_dim(*this);
  if (dim == 0) throw ConfigError("node dimension is zero");
  if (nodes.family == Family::Ikeda && nodes.ikeda.size() != topology.n)
    throw ConfigError("'nodes' parameter count does not match 'topology.n'");
  if (nodes.family == Family::Kuramoto && nodes.omega.size() != topology.n)
    throw ConfigError("'nodes.omega' count does not match 'topology.n'");
  if (nodes.family == Family::Linear && !nodes.linear_a.square())
    throw ConfigError("'nodes.A' must be square");
  for (const auto& e : topology.edges)
    if (e.i >= topology.n || e.j >= topology.n)
      throw ConfigError("'topology.edges' references a node outside 'topology.n'");
  const bool linear = coupling.kind == "linear";
  static const std::set<std::string> lin{"thm1", "thm2", "cor1"};
  static const std::set<std::string> nonlin{"thm3", "thm4"};
  if (theorem != "auto" && !lin.count(theorem) && !nonlin.count(theorem))
    throw ConfigError(fmt::format("'theorem' must be thm1, thm2, cor1, thm3, thm4 or auto, got '{}'",
                                  theorem));
  if ((linear && nonlin.count(theorem)) || (!linear && lin.count(theorem)))
    throw ConfigError(fmt::format("'theorem' {} does not match {} coupling", theorem, coupling.kind));
  if (linear && coupling.gamma.size() != dim)
    throw ConfigError(fmt::format("'coupling.gamma' has {} entries, node dimension is {}",
                                  coupling.gamma.size(), dim));
  if (coupling.upsilon && coupling.upsilon->size() != dim)
    throw ConfigError("'coupling.upsilon' does not match the node dimension");
  if (initial.kind == "explicit" && initial.values.size() != topology.n * dim)
    throw ConfigError(fmt::format("'initial.values' needs {} entries", topology.n * dim));
  try {
    sim.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("'sim': ") + e.what());
  }
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : builtins()) out.push_back(k);
  return out;
}

std::string builtin_yaml(const std::string& name) {
  const auto it = builtins().find(name);
  if (it == builtins().end()) throw ConfigError(fmt::format("no built-in scenario '{}'", name));
  return it->second;
}

Scenario parse_scenario(const std::string& yaml_text, std::optional<std::uint64_t> seed_override) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  check_keys(root, "scenario", {"name", "description", "seed", "topology", "nodes", "coupling",
                                "certificate", "theorem", "sim", "initial"});
  Scenario s;
  s.name = get_string(root, "", "name", "unnamed");
  s.description = get_string(root, "", "description", "");
  s.seed = seed_override ? *seed_override : get_seed(root, "", 1);
  s.theorem = get_string(root, "", "theorem", "auto");
  for (const char* k : {"topology", "nodes", "coupling"})
    if (!root[k]) throw ConfigError(fmt::format("'{}' section is required", k));
  parse_topology(root["topology"], s);
  parse_nodes(root["nodes"], s);
  parse_coupling(root["coupling"], s);
  if (root["certificate"]) parse_certificate(root["certificate"], s);
  if (root["sim"]) parse_sim(root["sim"], s);
  if (root["initial"]) {
    parse_initial(root["initial"], s);
  } else {
    s.initial.seed = s.seed ^ kInitialSalt;
  }
  s.sim.seed = s.seed;
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& name_or_path, std::optional<std::uint64_t> seed_override) {
  if (builtins().count(name_or_path)) return parse_scenario(builtin_yaml(name_or_path), seed_override);
  std::ifstream in(name_or_path);
  if (!in)
    throw ConfigError(fmt::format("'{}' is neither a built-in scenario nor a readable file", name_or_path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), seed_override);
}

Realized realize(const Scenario& s) {
  s.validate();
  const auto& t = s.topology;
  std::optional<graph::Topology> topo;
  if (t.kind == "edges") topo = graph::Topology::from_edges(t.n, t.edges);
  else if (t.kind == "erdos_renyi") topo = graph::random_connected(t.n, t.p, t.seed);
  else if (t.kind == "ring") topo = graph::ring(t.n, t.ring_weight);
  else topo = graph::load_edge_list(t.path, t.n);
  if (topo->size() != t.n) throw ConfigError("topology node count does not match 'topology.n'");
  if (t.lambda2_target) {
    const double l2 = graph::lambda2(graph::build_laplacian(*topo));
    topo = topo->scaled(*t.lambda2_target / l2);
  }
  auto lap = graph::build_laplacian(*topo);

  std::vector<dynamics::AffineDecomposedField> fields;
  const std::size_t n = t.n;
  switch (s.nodes.family) {
    case Family::Ikeda:
      for (const auto& p : s.nodes.ikeda) fields.push_back(dynamics::ikeda_field(p));
      break;
    case Family::Chua:
      for (std::size_t i = 0; i < n; ++i) fields.push_back(dynamics::chua_field(s.nodes.chua, i, n));
      break;
    case Family::Relay:
      for (std::size_t i = 0; i < n; ++i) fields.push_back(dynamics::relay_field(s.nodes.relay));
      break;
    case Family::Kuramoto: {
      double mean = 0.0;
      for (double w : s.nodes.omega) mean += w;
      mean /= static_cast<double>(n);
      for (double w : s.nodes.omega) fields.push_back(dynamics::kuramoto_error_field({w}, mean));
      break;
    }
    case Family::Linear:
      for (std::size_t i = 0; i < n; ++i) fields.push_back(dynamics::linear_field(s.nodes.linear_a));
      break;
  }
  const std::size_t dim = fields.front().dim;

  CouplingSpec coupling;
  if (s.coupling.kind == "linear") {
    LinearCoupling lc{s.coupling.gain, s.coupling.gamma};
    lc.validate(dim);
    coupling = lc;
  } else {
    NonlinearCoupling nc;
    nc.gain = s.coupling.gain;
    nc.e_max = s.coupling.e_max;
    if (s.coupling.eta == "identity") nc.eta = {identity_coupling()};
    else if (s.coupling.eta == "sine") nc.eta = {sine_coupling()};
    else nc.eta = {ikeda_pws_coupling(s.coupling.eta_sign_width)};
    if (s.coupling.upsilon) {
      nc.upsilon = *s.coupling.upsilon;
    } else {
      const double u = certify::certify_upsilon_scalar(nc.eta.front(), nc.e_max).upsilon;
      nc.upsilon.assign(dim, u);
    }
    nc.validate(dim);
    coupling = nc;
  }

  Vec x0;
  const auto& init = s.initial;
  if (init.kind == "explicit") {
    x0 = init.values;
  } else {
    std::mt19937_64 rng(init.seed);
    if (init.kind == "normal") {
      std::normal_distribution<double> g(0.0, init.sigma);
      for (std::size_t k = 0; k < n * dim; ++k) x0.push_back(g(rng));
    } else {
      std::uniform_real_distribution<double> u(-init.radius, init.radius);
      for (std::size_t k = 0; k < n * dim; ++k) x0.push_back(u(rng));
    }
  }
  return Realized{*topo, std::move(lap), std::move(fields), std::move(coupling), std::move(x0)};
}

namespace {

bool identical_linear(const std::vector<dynamics::AffineDecomposedField>& fields) {
  if (!fields.front().h_linear) return false;
  for (const auto& f : fields)
    if (!f.h_linear || !(*f.h_linear == *fields.front().h_linear)) return false;
  return true;
}

certify::CertFamily family_for(const Scenario& s, const Realized& r) {
  if (s.nodes.family == Family::Chua) return certify::chua_family(s.nodes.chua);
  if (!identical_linear(r.fields))
    throw PreconditionError("a common certificate needs identical linear node dynamics");
  const Matrix& a = *r.fields.front().h_linear;
  if (s.certificate.identity_p) {
    const Vec ones(a.rows(), 1.0);
    return certify::fixed_family(certify::quad_linear_cert(a, ones));
  }
  return certify::linear_diagonal_family(a);
}

}  // namespace

std::string resolve_theorem(const Scenario& s, const Realized& r) {
  if (s.theorem != "auto") return s.theorem;
  if (s.coupling.kind == "linear") {
    bool all_negative = true;
    for (const auto& f : r.fields)
      all_negative = all_negative && f.h_linear && lambda_max_sym(*f.h_linear) < 0.0;
    if (all_negative) return "thm1";
    return min_entry(s.coupling.gamma) > 0.0 ? "cor1" : "thm2";
  }
  return identical_linear(r.fields) ? "thm4" : "thm3";
}

certify::BoundReport certify_scenario(const Scenario& s, const Realized& r) {
  certify::SearchOptions opts;
  opts.starts = s.certificate.starts;
  opts.seed = s.certificate.seed;
  opts.identity_p = s.certificate.identity_p;
  const std::string thm = resolve_theorem(s, r);
  if (thm == "thm1" || thm == "thm2" || thm == "cor1") {
    const auto& lc = std::get<LinearCoupling>(r.coupling);
    if (thm == "thm1")
      return certify::theorem1_report(r.fields, r.laplacian, lc,
                                      certify::linear_node_certifier(r.fields), opts);
    const auto family = family_for(s, r);
    if (thm == "thm2") return certify::theorem2_report(r.fields, r.laplacian, lc, family, opts);
    return certify::corollary1_bounds(r.fields, r.laplacian, lc, family, opts);
  }
  const auto& nc = std::get<NonlinearCoupling>(r.coupling);
  if (thm == "thm3")
    return certify::theorem3_report(r.fields, r.laplacian, nc, r.x0,
                                    certify::linear_node_certifier(r.fields),
                                    {s.certificate.delta});
  if (!identical_linear(r.fields))
    throw PreconditionError("thm4 needs identical linear node dynamics");
  const Matrix& a = *r.fields.front().h_linear;
  const Vec ones(a.rows(), 1.0);
  return certify::theorem4_report(r.fields, r.laplacian, nc,
                                  certify::initial_error(r.x0, r.fields.size()),
                                  certify::quad_linear_cert(a, ones));
}

std::string header(const Scenario& s) {
  std::string h;
  auto line = [&h](std::string_view k, const std::string& v) { h += fmt::format("# {}: {}\n", k, v); };
  line("scenario", s.name);
  line("seed", std::to_string(s.seed));
  line("theorem", s.theorem);
  line("topology", fmt::format("{} n={}", s.topology.kind, s.topology.n));
  if (s.topology.kind == "erdos_renyi")
    line("topology.generator", fmt::format("p={} seed={}", s.topology.p, s.topology.seed));
  if (s.topology.lambda2_target)
    line("topology.lambda2_target", fmt::format("{:.17g}", *s.topology.lambda2_target));
  line("family", to_string(s.nodes.family));
  if (!s.nodes.expansion.empty()) line("expansion", s.nodes.expansion);
  if (s.nodes.family == Family::Ikeda) {
    Vec a, b, tau;
    for (const auto& p : s.nodes.ikeda) {
      a.push_back(p.a);
      b.push_back(p.b);
      tau.push_back(p.tau);
    }
    line("nodes.a", join(a));
    line("nodes.b", join(b));
    line("nodes.tau", join(tau));
  }
  if (s.nodes.family == Family::Kuramoto) line("nodes.omega", join(s.nodes.omega));
  if (s.nodes.family == Family::Relay && s.nodes.relay.bound_override)
    line("nodes.bound_override", fmt::format("{:.17g}", *s.nodes.relay.bound_override));
  line("coupling", fmt::format("{} gain={:.17g}", s.coupling.kind, s.coupling.gain));
  if (s.coupling.kind == "linear") {
    line("coupling.gamma", join(s.coupling.gamma));
  } else {
    line("coupling.eta", s.coupling.eta);
    line("coupling.e_max", fmt::format("{:.17g}", s.coupling.e_max));
  }
  line("sim", fmt::format("rk4 dt={:.17g} t_end={:.17g} regularization_width={:.17g}", s.sim.dt,
                          s.sim.t_end, s.sim.regularization_width));
  line("initial", fmt::format("{} seed={}", s.initial.kind, s.initial.seed));
  return h;
}

}  // namespace pwsync::scenario
