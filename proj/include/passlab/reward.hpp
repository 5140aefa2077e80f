#pragma once

#include <map>
#include <optional>
#include <vector>

#include "passlab/corpus.hpp"

namespace passlab {

enum class RewardKind { Binary, PassRate, Reweighted, TwoStage };

const char* reward_kind_name(RewardKind k);
RewardKind reward_kind_from_name(const std::string& s);

enum class Difficulty { Easy, Medium, Hard };

const char* difficulty_name(Difficulty d);

struct RewardSpec {
  RewardKind kind = RewardKind::Binary;
  int switch_step = 0;  // TwoStage: pass-rate before, binary from this step on
  std::map<Difficulty, double> weight_map = {
      {Difficulty::Easy, 1.0}, {Difficulty::Medium, 2.0}, {Difficulty::Hard, 3.0}};
};

/// Per-test pass rates from three model tiers plus their weights, the input
/// to the heuristic difficulty labeling.
struct DifficultyInput {
  std::vector<std::vector<double>> tier_rates;  // [tier][test], 3 tiers
  std::vector<double> tier_weights;             // > 0, one per tier
  double epsilon = 0.1;
};

/// 1 iff every test passes.
double binary_reward(const PassVector& pv);

/// The test-case pass rate itself.
double pass_rate_reward(const PassVector& pv);

/// Weighted fraction of passed tests: sum(w_k s_k) / sum(w_k).
double reweighted_reward(const PassVector& pv, const std::vector<double>& weights);

/// Weighted pass signal per test, then Easy/Medium/Hard by within-task
/// 33rd/67th percentiles, with all-Easy / all-Hard shortcuts at epsilon.
std::vector<Difficulty> label_difficulty(const DifficultyInput& input);

/// Difficulty labels mapped through spec.weight_map.
std::vector<double> difficulty_weights(const std::vector<Difficulty>& labels,
                                       const RewardSpec& spec);

/// Dispatch on spec.kind; `weights` is required iff kind == Reweighted.
double reward_for_step(const RewardSpec& spec, int step, const PassVector& pv,
                       const std::optional<std::vector<double>>& weights = std::nullopt);

/// Linear-interpolation percentile on a sorted copy of values, pct in [0,100].
double percentile(std::vector<double> values, double pct);

}  // namespace passlab
