#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "passlab/estimator.hpp"
#include "passlab/harness.hpp"
#include "passlab/probe.hpp"
#include "passlab/reward.hpp"
#include "passlab/trainer.hpp"

namespace passlab {

struct CorpusConfig {
  std::string kind = "easy";  // easy | conflict | file
  std::string path;           // input for "file", output name for gen
  int n_tasks = 8;
  int tests = 6;
  double harmful_pass_fraction = 0.84;
  double correlation = 0.0;
};

struct ProbeSectionConfig {
  double eta = 1e-4;
  std::string condition = "all";  // one condition name or "all"
  bool length_normalize = true;
  int group_size = 16;
  double boost = 5.0;  // biased-init strength for the without-full regime
  std::string method = "grpo";
};

struct ReportConfig {
  std::string snapshot_a;  // policy snapshot paths; empty = uniform policy
  std::string snapshot_b;
  int samples = 16;
};

struct ExecConfig {
  std::string problem_dir;
  double multiplier = 3.0;
  double t_min = 10.0;
  double t_max = 30.0;
  int memory_mb = 512;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  CorpusConfig corpus;
  TrainConfig train;
  ProbeSectionConfig probe;
  ReportConfig report;
  ExecConfig exec;
};

/// Parses the TOML-style config file. Unknown sections or keys are rejected
/// with the offending line number and key name.
ExperimentConfig load_config(const std::string& path);

}  // namespace passlab
