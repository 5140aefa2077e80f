#include <stdexcept>
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "passlab/trainer.hpp"

using namespace passlab;

namespace {

TrainConfig small_config(RewardKind kind, int steps = 20) {
  TrainConfig cfg;
  cfg.batch_tasks = 4;
  cfg.group_size = 8;
  cfg.steps = steps;
  cfg.learning_rate = 0.1;
  cfg.reward.kind = kind;
  cfg.seed = 7;
  return cfg;
}

// Batch containing every table candidate of each task once.
std::vector<GroupInput> full_table_batch(const Corpus& corpus) {
  std::vector<GroupInput> batch;
  for (std::size_t t = 0; t < corpus.tasks.size(); ++t) {
    GroupInput g;
    g.task_index = static_cast<int>(t);
    for (const Candidate& c : corpus.tasks[t].programs) g.sequences.push_back(c.tokens);
    batch.push_back(std::move(g));
  }
  return batch;
}

}  // namespace

TEST_CASE("train_step matches the hand-built update") {
  const Corpus corpus = gen_easy_corpus(2, 4, 31);
  const Policy policy = Policy::uniform_init(corpus);
  const auto batch = full_table_batch(corpus);
  TrainConfig cfg = small_config(RewardKind::PassRate);
  cfg.learning_rate = 0.05;

  // Oracle: rewards from the table, GRPO advantages, averaged direction.
  GradientVector direction = policy.zero_gradient();
  std::size_t total = 0;
  for (const GroupInput& g : batch) {
    const Task& task = corpus.tasks[g.task_index];
    std::vector<double> rewards;
    for (const std::vector<int>& seq : g.sequences)
      rewards.push_back(pass_rate(task.programs[task.find_candidate(seq)].pass));
    total += rewards.size();
    const auto adv = grpo_advantages(rewards, cfg.grpo_epsilon);
    for (std::size_t i = 0; i < g.sequences.size(); ++i)
      if (adv.advantages[i] != 0.0)
        direction.add_scaled(policy.grad_log_prob(task, g.sequences[i]),
                             adv.advantages[i]);
  }
  direction.scale(1.0 / static_cast<double>(total));
  const Policy expected = policy.apply_update(direction, cfg.learning_rate);

  const auto [updated, stats] = train_step(policy, corpus, batch, cfg, 0);
  CHECK(updated.same_params(expected));
  CHECK(stats.solved_rate == 1.0);  // every group contains the references
  CHECK(stats.effective_group_frac == 1.0);
}

TEST_CASE("zero learning rate returns bit-identical parameters") {
  const Corpus corpus = gen_easy_corpus(2, 4, 31);
  const Policy policy = Policy::uniform_init(corpus);
  TrainConfig cfg = small_config(RewardKind::PassRate);
  cfg.learning_rate = 0.0;
  const auto [updated, stats] = train_step(policy, corpus, full_table_batch(corpus), cfg, 0);
  CHECK(updated.same_params(policy));
  CHECK(stats.mean_reward > 0.0);
}

TEST_CASE("degenerate groups contribute exactly nothing") {
  const Corpus corpus = gen_easy_corpus(1, 4, 31);
  const Task& task = corpus.tasks[0];
  const Policy policy = Policy::uniform_init(corpus);
  TrainConfig cfg = small_config(RewardKind::Binary);

  // Two non-reference sequences: binary reward 0 for both.
  GroupInput g;
  g.task_index = 0;
  for (const Candidate& c : task.programs) {
    if (pass_rate(c.pass) < 1.0) g.sequences.push_back(c.tokens);
    if (g.sequences.size() == 2) break;
  }
  REQUIRE(g.sequences.size() == 2);
  const auto [updated, stats] = train_step(policy, corpus, {g}, cfg, 0);
  CHECK(updated.same_params(policy));
  CHECK(stats.effective_group_frac == 0.0);
  CHECK(stats.solved_rate == 0.0);
}

TEST_CASE("train_step validation") {
  const Corpus corpus = gen_easy_corpus(1, 4, 31);
  const Policy policy = Policy::uniform_init(corpus);
  const TrainConfig cfg = small_config(RewardKind::Binary);
  CHECK_THROWS_AS(train_step(policy, corpus, {}, cfg, 0), std::invalid_argument);
  GroupInput g;
  g.task_index = 5;
  g.sequences = {{0, 0, 0}};
  CHECK_THROWS_AS(train_step(policy, corpus, {g}, cfg, 0), std::invalid_argument);
}

TEST_CASE("reweighted training requires per-task test weights") {
  const Corpus corpus = gen_easy_corpus(1, 4, 31);
  const Policy policy = Policy::uniform_init(corpus);
  const TrainConfig cfg = small_config(RewardKind::Reweighted);
  CHECK_THROWS_AS(train_step(policy, corpus, full_table_batch(corpus), cfg, 0),
                  std::invalid_argument);

  std::map<std::string, std::vector<double>> weights;
  weights[corpus.tasks[0].id] = std::vector<double>(corpus.tasks[0].test_count, 2.0);
  const auto [updated, stats] =
      train_step(policy, corpus, full_table_batch(corpus), cfg, 0, weights);
  CHECK(stats.mean_reward > 0.0);
}

TEST_CASE("training is deterministic in the seed") {
  const Corpus corpus = gen_easy_corpus(3, 5, 11);
  const Policy init = Policy::uniform_init(corpus);
  const TrainConfig cfg = small_config(RewardKind::PassRate, 15);

  const TrainResult a = train(cfg, corpus, init);
  const TrainResult b = train(cfg, corpus, init);
  CHECK(a.policy.same_params(b.policy));
  REQUIRE(a.trace.records.size() == b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    CHECK(a.trace.records[i].mean_reward == b.trace.records[i].mean_reward);
    CHECK(a.trace.records[i].solved_rate == b.trace.records[i].solved_rate);
  }

  TrainConfig other = cfg;
  other.seed = 8;
  CHECK(!train(other, corpus, init).policy.same_params(a.policy));
}

TEST_CASE("training raises the mean reward on the easy corpus") {
  const Corpus corpus = gen_easy_corpus(4, 6, 21);
  const TrainConfig cfg = small_config(RewardKind::PassRate, 400);
  const TrainResult result = train(cfg, corpus, Policy::uniform_init(corpus));
  REQUIRE(result.trace.records.size() == 400);
  const double early = result.trace.records.front().mean_reward;
  const double late = result.trace.records.back().mean_reward;
  CHECK(late > early + 0.1);
  CHECK(result.trace.records.back().solved_rate > 0.9);
}

TEST_CASE("two-stage switches reward mid-run") {
  const Corpus corpus = gen_easy_corpus(2, 4, 5);
  TrainConfig cfg = small_config(RewardKind::TwoStage, 0);
  cfg.reward.switch_step = 3;
  const Policy policy = Policy::uniform_init(corpus);
  const auto batch = full_table_batch(corpus);

  // Before the switch the reward is the pass rate, after it the indicator.
  const auto before = train_step(policy, corpus, batch, cfg, 2).second;
  const auto after = train_step(policy, corpus, batch, cfg, 3).second;
  TrainConfig rate_cfg = cfg;
  rate_cfg.reward.kind = RewardKind::PassRate;
  TrainConfig bin_cfg = cfg;
  bin_cfg.reward.kind = RewardKind::Binary;
  CHECK(before.mean_reward ==
        train_step(policy, corpus, batch, rate_cfg, 2).second.mean_reward);
  CHECK(after.mean_reward ==
        train_step(policy, corpus, batch, bin_cfg, 3).second.mean_reward);
  CHECK(before.mean_reward > after.mean_reward);
}

TEST_CASE("trace CSV layout") {
  TrainTrace trace;
  trace.reward_kind = RewardKind::PassRate;
  trace.method = Method::Rloo;
  trace.seed = 42;
  trace.records = {{0, 0.5, 1.0, 0.25}, {1, 0.625, 0.75, 0.5}};

  const auto path = std::filesystem::temp_directory_path() / "passlab_trace_test.csv";
  trace.write_csv(path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,mean_reward,effective_group_frac,solved_rate,reward_kind,method,seed");
  std::getline(in, line);
  CHECK(line == "0,0.5,1,0.25,pass_rate,rloo,42");
  std::getline(in, line);
  CHECK(line == "1,0.625,0.75,0.5,pass_rate,rloo,42");
  CHECK(!std::getline(in, line));
  std::filesystem::remove(path);
}

TEST_CASE("snapshots land on the configured interval") {
  const Corpus corpus = gen_easy_corpus(1, 4, 2);
  const auto dir = std::filesystem::temp_directory_path() / "passlab_snap_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  TrainConfig cfg = small_config(RewardKind::PassRate, 6);
  cfg.snapshot_interval = 3;
  cfg.snapshot_dir = dir.string();
  train(cfg, corpus, Policy::uniform_init(corpus));

  CHECK(std::filesystem::exists(dir / "policy_step_000003.json"));
  CHECK(std::filesystem::exists(dir / "policy_step_000006.json"));
  CHECK(!std::filesystem::exists(dir / "policy_step_000001.json"));
  const Policy snap = Policy::load((dir / "policy_step_000006.json").string());
  snap.block_for(corpus.tasks[0]);  // loads with matching dimensions
  std::filesystem::remove_all(dir);
}

TEST_CASE("train validation") {
  const Corpus corpus = gen_easy_corpus(1, 4, 2);
  const Policy init = Policy::uniform_init(corpus);
  TrainConfig cfg = small_config(RewardKind::Binary, 1);
  cfg.group_size = 1;
  CHECK_THROWS_AS(train(cfg, corpus, init), std::invalid_argument);
  cfg = small_config(RewardKind::Binary, 1);
  CHECK_THROWS_AS(train(cfg, Corpus{}, init), std::invalid_argument);
  // Policy built for a different corpus is rejected up front.
  const Corpus other = gen_conflict_corpus(1, 6, 0.5, 3);
  CHECK_THROWS_AS(train(cfg, other, init), std::invalid_argument);
}

TEST_CASE("difficulty weights cover every task and test") {
  const Corpus corpus = gen_easy_corpus(3, 5, 13);
  RewardSpec spec;
  spec.kind = RewardKind::Reweighted;
  const auto weights = compute_difficulty_weights(corpus, spec, 9);
  CHECK(weights.size() == corpus.tasks.size());
  for (const Task& task : corpus.tasks) {
    const auto& w = weights.at(task.id);
    REQUIRE(w.size() == static_cast<std::size_t>(task.test_count));
    for (double v : w) {
      const bool known = v == 1.0 || v == 2.0 || v == 3.0;
      CHECK(known);
    }
  }
  // Deterministic in the seed.
  CHECK(compute_difficulty_weights(corpus, spec, 9) == weights);
}
