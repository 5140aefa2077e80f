#include "passlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace passlab {

namespace {

double sequence_reward(const Task& task, const std::vector<int>& tokens,
                       const RewardSpec& spec, int step,
                       const std::map<std::string, std::vector<double>>& test_weights) {
  const int idx = task.find_candidate(tokens);
  PassVector pv;
  if (idx >= 0) {
    pv = task.programs[idx].pass;
  } else {
    pv.assign(task.test_count, 0);  // off-table samples fail every test
  }
  std::optional<std::vector<double>> weights;
  if (spec.kind == RewardKind::Reweighted) {
    auto it = test_weights.find(task.id);
    if (it == test_weights.end())
      throw std::invalid_argument("no test weights for task " + task.id);
    weights = it->second;
  }
  return reward_for_step(spec, step, pv, weights);
}

bool group_has_full_pass(const Task& task, const std::vector<std::vector<int>>& seqs) {
  for (const std::vector<int>& s : seqs) {
    const int idx = task.find_candidate(s);
    if (idx >= 0 && pass_rate(task.programs[idx].pass) == 1.0) return true;
  }
  return false;
}

}  // namespace

std::pair<Policy, StepStats> train_step(
    const Policy& policy, const Corpus& corpus,
    const std::vector<GroupInput>& batch, const TrainConfig& cfg, int step,
    const std::map<std::string, std::vector<double>>& test_weights) {
  if (batch.empty()) throw std::invalid_argument("training batch is empty");

  GradientVector direction = policy.zero_gradient();
  bool any_signal = false;
  double reward_sum = 0.0;
  std::size_t sample_count = 0;
  std::size_t effective = 0, solved = 0;

  for (const GroupInput& group : batch) {
    if (group.task_index < 0 || group.task_index >= static_cast<int>(corpus.tasks.size()))
      throw std::invalid_argument("batch task index out of range");
    const Task& task = corpus.tasks[group.task_index];

    std::vector<double> rewards;
    rewards.reserve(group.sequences.size());
    for (const std::vector<int>& seq : group.sequences)
      rewards.push_back(sequence_reward(task, seq, cfg.reward, step, test_weights));
    for (double r : rewards) reward_sum += r;
    sample_count += rewards.size();
    if (group_has_full_pass(task, group.sequences)) ++solved;

    const bool degenerate =
        std::all_of(rewards.begin(), rewards.end(),
                    [&](double r) { return r == rewards.front(); });
    if (degenerate) continue;  // exact zero contribution
    ++effective;

    const AdvantageGroup adv =
        compute_advantages(cfg.method, rewards, cfg.grpo_epsilon);
    for (std::size_t i = 0; i < group.sequences.size(); ++i) {
      if (adv.advantages[i] == 0.0) continue;
      direction.add_scaled(policy.grad_log_prob(task, group.sequences[i]),
                           adv.advantages[i]);
      any_signal = true;
    }
  }

  StepStats stats;
  stats.mean_reward = sample_count == 0 ? 0.0 : reward_sum / sample_count;
  stats.effective_group_frac = static_cast<double>(effective) / batch.size();
  stats.solved_rate = static_cast<double>(solved) / batch.size();

  if (!any_signal || cfg.learning_rate == 0.0) {
    return {policy, stats};  // parameters bit-identical on zero-signal steps
  }
  direction.scale(1.0 / static_cast<double>(sample_count));
  return {policy.apply_update(direction, cfg.learning_rate), stats};
}

TrainResult train(const TrainConfig& cfg, const Corpus& corpus, const Policy& init,
                  const std::map<std::string, std::vector<double>>& test_weights) {
  if (corpus.tasks.empty()) throw std::invalid_argument("corpus is empty");
  if (cfg.batch_tasks < 1 || cfg.group_size < 2 || cfg.steps < 0)
    throw std::invalid_argument("invalid training configuration");
  for (const Task& task : corpus.tasks) init.block_for(task);  // dimension check

  TrainResult result;
  result.policy = init;
  result.trace.reward_kind = cfg.reward.kind;
  result.trace.method = cfg.method;
  result.trace.seed = cfg.seed;

  for (int step = 0; step < cfg.steps; ++step) {
    std::mt19937_64 task_rng(seed_combine(cfg.seed, 0x5441534bull + step));
    std::vector<GroupInput> batch;
    batch.reserve(cfg.batch_tasks);
    for (int slot = 0; slot < cfg.batch_tasks; ++slot) {
      GroupInput group;
      group.task_index = static_cast<int>(task_rng() % corpus.tasks.size());
      const std::uint64_t rollout_seed = seed_combine(
          cfg.seed, (static_cast<std::uint64_t>(step) << 20) ^ (slot + 1));
      group.sequences = result.policy.sample(corpus.tasks[group.task_index],
                                             cfg.group_size, rollout_seed);
      batch.push_back(std::move(group));
    }

    auto [updated, stats] = train_step(result.policy, corpus, batch, cfg, step, test_weights);
    result.policy = std::move(updated);
    result.trace.records.push_back(
        {step, stats.mean_reward, stats.effective_group_frac, stats.solved_rate});

    if (cfg.snapshot_interval > 0 && !cfg.snapshot_dir.empty() &&
        (step + 1) % cfg.snapshot_interval == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "policy_step_%06d.json", step + 1);
      result.policy.save(cfg.snapshot_dir + "/" + name);
    }
  }
  return result;
}

void TrainTrace::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  out << "step,mean_reward,effective_group_frac,solved_rate,reward_kind,method,seed\n";
  char line[256];
  for (const StepRecord& r : records) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%s,%s,%llu\n", r.step,
                  r.mean_reward, r.effective_group_frac, r.solved_rate,
                  reward_kind_name(reward_kind), method_name(method),
                  static_cast<unsigned long long>(seed));
    out << line;
  }
  if (!out) throw std::runtime_error("failed writing trace file: " + path);
}

std::map<std::string, std::vector<double>> compute_difficulty_weights(
    const Corpus& corpus, const RewardSpec& spec, std::uint64_t seed) {
  // Three frozen tiers of decreasing optimization budget, each a short
  // binary-reward GRPO run from uniform init.
  const int budgets[3] = {200, 50, 0};
  const int rollouts = 32;

  std::vector<Policy> tiers;
  for (int i = 0; i < 3; ++i) {
    TrainConfig tier_cfg;
    tier_cfg.batch_tasks = static_cast<int>(corpus.tasks.size());
    tier_cfg.group_size = 8;
    tier_cfg.steps = budgets[i];
    tier_cfg.learning_rate = 0.1;
    tier_cfg.reward.kind = RewardKind::Binary;
    tier_cfg.method = Method::Grpo;
    tier_cfg.seed = seed_combine(seed, 0x7469657200ull + i);
    tiers.push_back(train(tier_cfg, corpus, Policy::uniform_init(corpus)).policy);
  }

  // Per-tier, per-task, per-test pass rates plus tier pass@1 weights.
  std::vector<std::map<std::string, std::vector<double>>> tier_rates(3);
  std::vector<double> tier_weights(3, 0.0);
  for (int i = 0; i < 3; ++i) {
    std::size_t full = 0, total = 0;
    for (std::size_t t = 0; t < corpus.tasks.size(); ++t) {
      const Task& task = corpus.tasks[t];
      const auto samples = tiers[i].sample(
          task, rollouts, seed_combine(seed, 0x726f6c6cull + i * 1000 + t));
      std::vector<double> rates(task.test_count, 0.0);
      for (const std::vector<int>& seq : samples) {
        const int idx = task.find_candidate(seq);
        ++total;
        if (idx < 0) continue;
        const PassVector& pv = task.programs[idx].pass;
        for (int k = 0; k < task.test_count; ++k) rates[k] += pv[k] ? 1.0 : 0.0;
        if (pass_rate(pv) == 1.0) ++full;
      }
      for (double& r : rates) r /= rollouts;
      tier_rates[i][task.id] = std::move(rates);
    }
    // Floor keeps the weight positive even for a tier that solves nothing.
    tier_weights[i] = std::max(1e-3, static_cast<double>(full) / total);
  }

  std::map<std::string, std::vector<double>> weights;
  for (const Task& task : corpus.tasks) {
    DifficultyInput input;
    input.tier_weights = tier_weights;
    for (int i = 0; i < 3; ++i) input.tier_rates.push_back(tier_rates[i].at(task.id));
    weights[task.id] = difficulty_weights(label_difficulty(input), spec);
  }
  return weights;
}

}  // namespace passlab
