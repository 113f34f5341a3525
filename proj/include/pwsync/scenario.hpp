#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pwsync/certify.hpp"
#include "pwsync/coupling.hpp"
#include "pwsync/dynamics.hpp"
#include "pwsync/graph.hpp"
#include "pwsync/sim.hpp"

namespace pwsync::scenario {

// Schema violation; the message names the offending field.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class Family { Ikeda, Chua, Relay, Kuramoto, Linear };
std::string to_string(Family f);

struct TopologySpec {
  std::string kind;  // edges | erdos_renyi | ring | file
  std::size_t n = 0;
  std::vector<graph::Topology::Edge> edges;
  double p = 0.5;
  double ring_weight = 1.0;
  std::filesystem::path path;
  std::optional<double> lambda2_target;
  std::uint64_t seed = 0;
};

// Per-node parameters after mismatch expansion.
struct NodeSpec {
  Family family = Family::Linear;
  std::vector<dynamics::IkedaParams> ikeda;
  dynamics::ChuaParams chua;
  dynamics::RelayParams relay;
  Vec omega;
  Matrix linear_a;
  // "uniform +-0.25 seed 11" style note for output headers; empty when explicit.
  std::string expansion;
};

struct CouplingConfig {
  std::string kind = "linear";  // linear | nonlinear
  double gain = 1.0;
  Vec gamma;
  std::string eta = "identity";  // identity | sine | ikeda_pws
  double eta_sign_width = 0.0;
  double e_max = certify::kInf;
  std::optional<Vec> upsilon;
};

struct CertConfig {
  bool identity_p = false;
  int starts = 20;
  std::uint64_t seed = 20240601;
  double delta = 1e-6;
};

struct InitialSpec {
  std::string kind = "normal";  // normal | uniform | explicit
  double sigma = 1.0;
  double radius = 1.0;
  Vec values;
  std::uint64_t seed = 0;
};

struct Scenario {
  std::string name;
  std::string description;
  std::uint64_t seed = 1;
  TopologySpec topology;
  NodeSpec nodes;
  CouplingConfig coupling;
  CertConfig certificate;
  sim::SimConfig sim;
  InitialSpec initial;
  std::string theorem = "auto";  // thm1 | thm2 | cor1 | thm3 | thm4 | auto

  std::size_t n_nodes() const { return topology.n; }
  void validate() const;
};

std::vector<std::string> builtin_names();
// YAML text of a built-in; throws ConfigError for an unknown name.
std::string builtin_yaml(const std::string& name);

// Parses YAML text. seed_override replaces the top-level seed before any
// randomised expansion. Unknown keys throw ConfigError.
Scenario parse_scenario(const std::string& yaml_text, std::optional<std::uint64_t> seed_override = {});

// Built-in name or path to a YAML file.
Scenario load_scenario(const std::string& name_or_path,
                       std::optional<std::uint64_t> seed_override = {});

// Concrete objects built from a scenario.
struct Realized {
  graph::Topology topology;
  graph::Laplacian laplacian;
  std::vector<dynamics::AffineDecomposedField> fields;
  CouplingSpec coupling;
  Vec x0;
};

Realized realize(const Scenario& s);

// Theorem actually run for "auto".
std::string resolve_theorem(const Scenario& s, const Realized& r);

certify::BoundReport certify_scenario(const Scenario& s, const Realized& r);

// "# key: value" lines echoing the scenario and expanded parameters.
std::string header(const Scenario& s);

}  // namespace pwsync::scenario
