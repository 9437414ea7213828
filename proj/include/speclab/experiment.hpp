#pragma once

#include <string>
#include <vector>

#include "speclab/config.hpp"

namespace speclab {

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Provenance record of one experiment run: canonical config hash, emitted
/// files and the pass/fail status of every hard assertion.
struct RunRecord {
  std::string configHash;
  std::string timestamp;
  std::string version;
  unsigned long long seed = 0;
  std::string outputDir;
  std::vector<std::string> files;
  std::vector<CheckLine> checks;
  std::vector<std::string> warnings;

  bool allPassed() const;
};

/// Runs the experiment named by the config, writes every table/plot under
/// the output directory together with summary.txt and run_record.json, and
/// returns the record. Deterministic for a fixed config and seed; all CSV
/// content comes from module operations, the runner only formats.
RunRecord run_experiment(const ExperimentConfig& cfg);

}  // namespace speclab
