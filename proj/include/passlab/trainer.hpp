#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "passlab/estimator.hpp"
#include "passlab/policy.hpp"
#include "passlab/reward.hpp"

namespace passlab {

struct TrainConfig {
  int batch_tasks = 64;
  int group_size = 16;
  int steps = 768;
  double learning_rate = 0.1;
  RewardSpec reward;
  Method method = Method::Grpo;
  double grpo_epsilon = 1e-4;
  std::uint64_t seed = 0;
  int snapshot_interval = 0;        // 0 = no intermediate snapshots
  std::string snapshot_dir;
};

struct StepRecord {
  int step = 0;
  double mean_reward = 0.0;
  double effective_group_frac = 0.0;
  double solved_rate = 0.0;  // fraction of batch groups with a full-pass sample
};

struct TrainTrace {
  std::vector<StepRecord> records;
  RewardKind reward_kind = RewardKind::Binary;
  Method method = Method::Grpo;
  std::uint64_t seed = 0;

  void write_csv(const std::string& path) const;
};

struct GroupInput {
  int task_index = 0;
  std::vector<std::vector<int>> sequences;
};

struct StepStats {
  double mean_reward = 0.0;
  double effective_group_frac = 0.0;
  double solved_rate = 0.0;
};

struct TrainResult {
  Policy policy;
  TrainTrace trace;
};

/// One strict on-policy update: score the batch, compute group advantages,
/// average A_i * grad log pi over every sampled sequence, apply one step.
/// Groups with all-equal rewards contribute exactly zero.
std::pair<Policy, StepStats> train_step(
    const Policy& policy, const Corpus& corpus,
    const std::vector<GroupInput>& batch, const TrainConfig& cfg, int step,
    const std::map<std::string, std::vector<double>>& test_weights = {});

/// Full loop: per step, draw batch_tasks tasks uniformly, sample group_size
/// rollouts per task from the current policy, apply one update.
/// `test_weights` (task id -> per-test weights) is required for Reweighted.
TrainResult train(const TrainConfig& cfg, const Corpus& corpus,
                  const Policy& init,
                  const std::map<std::string, std::vector<double>>& test_weights = {});

/// Realizes the three-tier difficulty input for Reweighted training: three
/// frozen policies of decreasing optimization budget are produced by short
/// binary-reward GRPO runs, tier weights are each tier's pass@1 on the
/// corpus. Returns per-task test weights through label_difficulty.
std::map<std::string, std::vector<double>> compute_difficulty_weights(
    const Corpus& corpus, const RewardSpec& spec, std::uint64_t seed);

}  // namespace passlab
