#include "speclab/config.hpp"

#include <fstream>
#include <set>

namespace speclab {

namespace {

const nlohmann::json& require(const nlohmann::json& j, const std::string& key,
                              const std::string& path) {
  if (!j.contains(key)) {
    throw ConfigError("config: missing field " + path + "." + key);
  }
  return j.at(key);
}

double requireNumber(const nlohmann::json& j, const std::string& key,
                     const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_number()) {
    throw ConfigError("config: " + path + "." + key + " must be a number");
  }
  return v.get<double>();
}

int requireInt(const nlohmann::json& j, const std::string& key,
               const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_number_integer()) {
    throw ConfigError("config: " + path + "." + key + " must be an integer");
  }
  return v.get<int>();
}

std::string requireString(const nlohmann::json& j, const std::string& key,
                          const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_string()) {
    throw ConfigError("config: " + path + "." + key + " must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

SetSpec parse_set_spec(const nlohmann::json& j, const std::string& path) {
  const std::string type = requireString(j, "type", path);
  if (type == "full") {
    return SetSpec::full();
  }
  if (type == "periodic-balls") {
    return SetSpec::periodicBalls(requireNumber(j, "radius", path),
                                  requireNumber(j, "pitch", path));
  }
  if (type == "fat-cantor") {
    return SetSpec::fatCantor(requireInt(j, "depth", path),
                              requireNumber(j, "removed_fraction", path));
  }
  if (type == "cantor-dust") {
    return SetSpec::cantorDust(requireInt(j, "depth", path),
                               requireNumber(j, "ratio", path));
  }
  if (type == "random-density") {
    return SetSpec::randomDensity(
        requireNumber(j, "delta", path), requireNumber(j, "R", path),
        static_cast<unsigned long long>(requireInt(j, "seed", path)));
  }
  throw ConfigError("config: " + path + ".type has unknown value '" + type +
                    "'");
}

CoefficientSpec parse_coefficient_spec(const nlohmann::json& j,
                                       const std::string& path) {
  const std::string type = requireString(j, "type", path);
  if (type == "constant") {
    double kappa = j.value("kappa", 1.0);
    double gxx = j.value("gxx", 1.0);
    double gxy = j.value("gxy", 0.0);
    double gyy = j.value("gyy", 1.0);
    return CoefficientSpec::constant(kappa, gxx, gxy, gyy);
  }
  if (type == "smooth-periodic") {
    return CoefficientSpec::smoothPeriodic(
        j.value("kappa_base", 2.0), j.value("kappa_amp", 1.0),
        j.value("kappa_harmonic", 1), j.value("g_base", 1.0),
        j.value("g_amp", 0.0), j.value("g_harmonic", 1),
        j.value("g_cross_amp", 0.0));
  }
  if (type == "piecewise-lipschitz") {
    return CoefficientSpec::piecewiseLipschitz(
        j.value("kappa_min", 1.0), j.value("kappa_max", 2.0),
        j.value("g_min", 1.0), j.value("g_max", 1.0));
  }
  throw ConfigError("config: " + path + ".type has unknown value '" + type +
                    "'");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;

  const auto& domain = require(j, "domain", "");
  cfg.dim = requireInt(domain, "dim", "domain");
  cfg.extent = requireNumber(domain, "extent", "domain");
  cfg.resolution = requireInt(domain, "resolution", "domain");

  cfg.coefficients =
      parse_coefficient_spec(require(j, "coefficients", ""), "coefficients");

  if (j.contains("sets")) {
    const auto& sets = j.at("sets");
    if (sets.contains("omega")) {
      cfg.omega = parse_set_spec(sets.at("omega"), "sets.omega");
    }
  }

  if (j.contains("cells")) {
    const auto& c = j.at("cells");
    ExperimentConfig::Cells cells;
    cells.R = requireNumber(c, "R", "cells");
    cells.T1 = requireNumber(c, "T1", "cells");
    cells.T2 = requireNumber(c, "T2", "cells");
    cells.pitch = requireNumber(c, "pitch", "cells");
    cfg.cells = cells;
  }

  cfg.experiment = requireString(j, "experiment", "");
  static const std::set<std::string> kinds = {
      "spectrum", "specineq", "propagation", "sobolev",
      "control",  "obster",   "sets"};
  if (!kinds.count(cfg.experiment)) {
    throw ConfigError("config: experiment has unknown value '" +
                      cfg.experiment + "'");
  }

  cfg.parameters = j.value("parameters", nlohmann::json::object());
  cfg.output = j.value("output", std::string("run"));
  // Seeds are part of the provenance contract: every run names one.
  if (!cfg.parameters.contains("seed")) {
    throw ConfigError("config: missing field parameters.seed");
  }
  cfg.seed = cfg.parameters.at("seed").get<unsigned long long>();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse error in " + path + ": " + e.what());
  }
  return parse_config(j);
}

std::string config_hash(const nlohmann::json& j) {
  const std::string canonical = j.dump();  // nlohmann objects sort keys
  unsigned long long h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", h);
  return buf;
}

}  // namespace speclab
