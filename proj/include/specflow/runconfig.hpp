#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specflow/cfm.hpp"
#include "specflow/flow_model.hpp"
#include "specflow/likelihood.hpp"
#include "specflow/synth.hpp"

namespace specflow {

inline constexpr const char* kCfgFormat = "specflow-cfg-v1";

struct FitSection {
  int k = 12;
};

struct EvalSection {
  int bins = 40;
};

struct TraverseSection {
  int pc = 1;  // principal component, 1-based for the command line
  std::vector<double> offsets = {-2.0, -1.0, 0.0, 1.0, 2.0};
};

struct SweepSection {
  std::vector<int> grid = {5, 10, 20, 50};
  int limit = 256;  // validation scenarios used for the sweep
};

// One config file drives every subcommand; each consumes its own section
// and flags override individual values. Missing sections and keys take
// these defaults, unknown ones are rejected.
struct RunConfig {
  uint64_t seed = 7;        // dataset build seed
  std::string out = "run";  // directory for default artifact paths
  GeneratorConfig generate;
  FitSection fit;
  ModelConfig model;  // nested as "model" inside the "train" section
  TrainConfig train;
  OdeOptions score;
  EvalSection eval;
  TraverseSection traverse;
  SweepSection sweep;

  void validate() const;
  ojson to_json() const;
  static RunConfig from_json(const ojson& j);
};

std::string serialize_run_config(const RunConfig& c);
void save_run_config(const RunConfig& c, const std::string& path);
RunConfig load_run_config(const std::string& path);

}  // namespace specflow
