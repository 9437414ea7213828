#pragma once

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>

#include "speclab/grid.hpp"
#include "speclab/sets.hpp"

namespace speclab {

/// Raised on configuration problems; the message names the offending field
/// path. Maps to exit code 2 in the CLI.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parsed experiment description. The file dialect is JSON: a key-value
/// tree with nested blocks, documented in the README and covered by
/// round-trip tests.
struct ExperimentConfig {
  int dim = 1;
  double extent = 1.0;
  int resolution = 64;

  CoefficientSpec coefficients;
  std::optional<SetSpec> omega;

  struct Cells {
    double R = 0.0;
    double T1 = 0.0;
    double T2 = 0.0;
    double pitch = 0.0;
  };
  std::optional<Cells> cells;

  std::string experiment;        // spectrum | specineq | propagation | ...
  nlohmann::json parameters;     // experiment-specific block
  std::string output;

  unsigned long long seed = 1;
  bool strict = false;  // under-resolution fails instead of warns

  nlohmann::json raw;  // canonical source (nlohmann orders keys)
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a hash of the canonicalized (key-sorted) config serialization.
std::string config_hash(const nlohmann::json& j);

SetSpec parse_set_spec(const nlohmann::json& j, const std::string& path);
CoefficientSpec parse_coefficient_spec(const nlohmann::json& j,
                                       const std::string& path);

}  // namespace speclab
