#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "passlab/config.hpp"
#include "passlab/corpus.hpp"
#include "passlab/harness.hpp"
#include "passlab/metrics.hpp"
#include "passlab/policy.hpp"
#include "passlab/probe.hpp"
#include "passlab/trainer.hpp"

namespace fs = std::filesystem;
using namespace passlab;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Write-to-temp-then-rename so a failed command never leaves partial files.
void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing output file: " + tmp.string());
  }
  fs::rename(tmp, path);
}

Corpus make_corpus(const ExperimentConfig& cfg) {
  if (cfg.corpus.kind == "easy")
    return gen_easy_corpus(cfg.corpus.n_tasks, cfg.corpus.tests, cfg.seed,
                           cfg.corpus.correlation);
  if (cfg.corpus.kind == "conflict")
    return gen_conflict_corpus(cfg.corpus.n_tasks, cfg.corpus.tests,
                               cfg.corpus.harmful_pass_fraction, cfg.seed);
  return load_corpus(cfg.corpus.path);
}

PassVector pass_vector_for(const Task& task, const std::vector<int>& seq) {
  const int idx = task.find_candidate(seq);
  if (idx >= 0) return task.programs[idx].pass;
  return PassVector(task.test_count, 0);
}

int cmd_gen(const ExperimentConfig& cfg) {
  const Corpus corpus = make_corpus(cfg);
  fs::create_directories(cfg.out_dir);
  std::string name = cfg.corpus.path.empty() ? "corpus.jsonl" : cfg.corpus.path;
  std::ostringstream buf;
  write_corpus(corpus, buf);
  write_file_atomic(fs::path(cfg.out_dir) / fs::path(name).filename(), buf.str());
  std::cout << "wrote corpus with " << corpus.tasks.size() << " tasks\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  const Corpus corpus = make_corpus(cfg);
  fs::create_directories(cfg.out_dir);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;
  if (tcfg.snapshot_interval > 0) tcfg.snapshot_dir = cfg.out_dir;

  std::map<std::string, std::vector<double>> weights;
  if (tcfg.reward.kind == RewardKind::Reweighted)
    weights = compute_difficulty_weights(corpus, tcfg.reward,
                                         seed_combine(cfg.seed, 0xd1ffull));

  const TrainResult result = train(tcfg, corpus, Policy::uniform_init(corpus), weights);
  result.trace.write_csv((fs::path(cfg.out_dir) / "train_trace.csv").string());
  result.policy.save((fs::path(cfg.out_dir) / "policy_final.json").string());
  std::cout << "trained " << tcfg.steps << " steps; final solved_rate "
            << (result.trace.records.empty() ? 0.0
                                             : result.trace.records.back().solved_rate)
            << "\n";
  return 0;
}

int cmd_probe(const ExperimentConfig& cfg) {
  const Corpus corpus = make_corpus(cfg);
  fs::create_directories(cfg.out_dir);
  const Policy policy = Policy::biased_init(corpus, cfg.probe.boost);

  std::vector<ProbeCondition> conditions;
  if (cfg.probe.condition == "all") {
    conditions = {ProbeCondition::PassRateWithoutFull, ProbeCondition::PassRateWithFull,
                  ProbeCondition::BinaryWithoutFull, ProbeCondition::BinaryWithFull};
  } else {
    conditions = {probe_condition_from_name(cfg.probe.condition)};
  }

  std::ostringstream probe_csv, samples_csv;
  probe_csv << "task_id,condition,method,eta,delta_grp,delta_grp_norm\n";
  samples_csv << "task_id,sample_index,mode,pass_rate,advantage,delta_i_norm\n";
  std::vector<std::vector<LabeledSample>> labeled_tasks;

  for (std::size_t t = 0; t < corpus.tasks.size(); ++t) {
    const Task& task = corpus.tasks[t];
    const auto group = policy.sample(task, cfg.probe.group_size,
                                     seed_combine(cfg.seed, 0x70726f6265ull + t));
    const bool without_full = is_without_full_group(task, group);

    for (ProbeCondition condition : conditions) {
      const bool needs_without_full = condition == ProbeCondition::PassRateWithoutFull ||
                                      condition == ProbeCondition::BinaryWithoutFull;
      if (needs_without_full && !without_full) continue;

      ProbeConfig pcfg;
      pcfg.eta = cfg.probe.eta;
      pcfg.condition = condition;
      pcfg.length_normalize = false;
      pcfg.method = method_from_name(cfg.probe.method);
      const ProbeReport report = group_probe(policy, task, group, pcfg);
      const double norm = report.delta_grp / task.seq_len;
      probe_csv << task.id << ',' << probe_condition_name(condition) << ','
                << cfg.probe.method << ',' << fmt(pcfg.eta) << ','
                << fmt(report.delta_grp) << ',' << fmt(norm) << "\n";

      if (condition == ProbeCondition::PassRateWithoutFull) {
        std::vector<LabeledSample> labels;
        for (std::size_t i = 0; i < group.size(); ++i) {
          const int idx = task.find_candidate(group[i]);
          const Mode mode = idx >= 0 ? task.programs[idx].mode : Mode::Other;
          const double rate = pass_rate(pass_vector_for(task, group[i]));
          samples_csv << task.id << ',' << i << ',' << mode_name(mode) << ','
                      << fmt(rate) << ',' << fmt(report.advantages[i]) << ','
                      << fmt(report.delta_i[i] / task.seq_len) << "\n";
          labels.push_back({mode, rate, report.advantages[i]});
        }
        labeled_tasks.push_back(std::move(labels));
      }
    }
  }

  write_file_atomic(fs::path(cfg.out_dir) / "probe.csv", probe_csv.str());
  write_file_atomic(fs::path(cfg.out_dir) / "probe_samples.csv", samples_csv.str());

  if (!labeled_tasks.empty()) {
    const ConflictReport conflict = conflict_report(labeled_tasks);
    std::ostringstream conflict_csv;
    conflict_csv << "tasks_any_judged,tasks_with_both,reversal_count,reversal_rate,"
                    "conflict_count,conflict_rate\n"
                 << conflict.tasks_any_judged << ',' << conflict.tasks_with_both << ','
                 << conflict.reversal_count << ',' << fmt(conflict.reversal_rate) << ','
                 << conflict.conflict_count << ',' << fmt(conflict.conflict_rate) << "\n";
    write_file_atomic(fs::path(cfg.out_dir) / "conflict.csv", conflict_csv.str());
  }
  std::cout << "probed " << corpus.tasks.size() << " tasks\n";
  return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
  const Corpus corpus = make_corpus(cfg);
  fs::create_directories(cfg.out_dir);
  const int n = cfg.report.samples;

  struct RunEval {
    std::string label;
    std::set<std::string> solved;
    std::vector<std::vector<double>> reward_groups;
    std::map<std::string, int> full_counts;
  };

  auto evaluate_policy = [&](const std::string& snapshot, const std::string& label,
                             std::uint64_t stream) {
    RunEval eval;
    eval.label = label;
    const Policy policy =
        snapshot.empty() ? Policy::uniform_init(corpus) : Policy::load(snapshot);
    for (std::size_t t = 0; t < corpus.tasks.size(); ++t) {
      const Task& task = corpus.tasks[t];
      const auto samples =
          policy.sample(task, n, seed_combine(cfg.seed, stream * 100003 + t));
      int full = 0;
      std::vector<double> rewards;
      for (const std::vector<int>& seq : samples) {
        const double rate = pass_rate(pass_vector_for(task, seq));
        rewards.push_back(rate);
        if (rate == 1.0) ++full;
      }
      eval.full_counts[task.id] = full;
      eval.reward_groups.push_back(std::move(rewards));
      if (full > 0) eval.solved.insert(task.id);
    }
    return eval;
  };

  std::vector<RunEval> runs;
  runs.push_back(evaluate_policy(cfg.report.snapshot_a, "A", 1));
  if (!cfg.report.snapshot_b.empty())
    runs.push_back(evaluate_policy(cfg.report.snapshot_b, "B", 2));

  const int ks[4] = {1, 4, 8, 16};
  std::ostringstream metrics_csv;
  metrics_csv << "run,corpus,samples,pass_at_1,pass_at_4,pass_at_8,pass_at_16\n";
  for (const RunEval& run : runs) {
    metrics_csv << run.label << ',' << corpus.name << ',' << n;
    for (int k : ks) {
      if (k > n) {
        metrics_csv << ",";
        continue;
      }
      double mean = 0.0;
      for (const Task& task : corpus.tasks)
        mean += pass_at_k(n, run.full_counts.at(task.id), k);
      metrics_csv << ',' << fmt(mean / corpus.tasks.size());
    }
    metrics_csv << "\n";
  }
  write_file_atomic(fs::path(cfg.out_dir) / "metrics.csv", metrics_csv.str());

  std::set<std::string> universe;
  for (const Task& task : corpus.tasks) universe.insert(task.id);
  const std::set<std::string>& solved_b = runs.size() > 1 ? runs[1].solved : runs[0].solved;
  const OverlapMatrix overlap = solvability_overlap(runs[0].solved, solved_b, universe);
  std::ostringstream overlap_csv;
  overlap_csv << "both_solved,a_only,b_only,both_failed,agreement\n"
              << overlap.both_solved << ',' << overlap.a_only << ',' << overlap.b_only
              << ',' << overlap.both_failed << ',' << fmt(overlap.agreement) << "\n";
  write_file_atomic(fs::path(cfg.out_dir) / "overlap.csv", overlap_csv.str());

  const DensityReport density = density_report(runs[0].reward_groups);
  std::ostringstream density_csv;
  density_csv << "distinct_values,group_count,total_groups,effective_groups,"
                 "intermediate_fraction\n";
  if (density.distinct_value_histogram.empty()) {
    density_csv << "0,0," << density.total_groups << ',' << density.effective_groups
                << ',' << fmt(density.intermediate_fraction) << "\n";
  }
  for (const auto& [distinct, count] : density.distinct_value_histogram) {
    density_csv << distinct << ',' << count << ',' << density.total_groups << ','
                << density.effective_groups << ',' << fmt(density.intermediate_fraction)
                << "\n";
  }
  write_file_atomic(fs::path(cfg.out_dir) / "density.csv", density_csv.str());
  std::cout << "report written for " << runs.size() << " run(s)\n";
  return 0;
}

int cmd_exec(const ExperimentConfig& cfg, int workers) {
  if (cfg.exec.problem_dir.empty())
    throw std::runtime_error("[exec] problem_dir is required");
  fs::create_directories(cfg.out_dir);
  TimeoutPolicy policy;
  policy.multiplier = cfg.exec.multiplier;
  policy.t_min = cfg.exec.t_min;
  policy.t_max = cfg.exec.t_max;
  const SuiteReport report =
      eval_suite(cfg.exec.problem_dir, policy, workers,
                 static_cast<std::size_t>(cfg.exec.memory_mb) << 20);

  std::ostringstream exec_csv, rewards_csv;
  exec_csv << "candidate,test_index,outcome,wall_ms\n";
  rewards_csv << "candidate,binary,pass_rate\n";
  for (const CandidateResult& cand : report.candidates) {
    for (std::size_t i = 0; i < cand.exec.outcomes.size(); ++i) {
      exec_csv << cand.name << ',' << i << ',' << outcome_name(cand.exec.outcomes[i])
               << ',' << fmt(cand.exec.wall_seconds[i] * 1000.0) << "\n";
    }
    rewards_csv << cand.name << ',' << fmt(cand.binary) << ',' << fmt(cand.pass_rate)
                << "\n";
  }
  write_file_atomic(fs::path(cfg.out_dir) / "exec_report.csv", exec_csv.str());
  write_file_atomic(fs::path(cfg.out_dir) / "rewards.csv", rewards_csv.str());
  std::cout << "evaluated " << report.candidates.size() << " candidates (timeout "
            << report.timeout_seconds << "s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"passlab: reward-design laboratory for critic-free RL on code tasks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  int workers = 1;
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--workers", workers, "worker pool size for exec");

  auto* gen = app.add_subcommand("gen", "generate a corpus file");
  auto* train = app.add_subcommand("train", "run the on-policy training loop");
  auto* probe = app.add_subcommand("probe", "gradient-direction probes");
  auto* report = app.add_subcommand("report", "pass@k, overlap, and density reports");
  auto* exec = app.add_subcommand("exec", "judge real candidate programs");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (seed_override) {
      cfg.seed = *seed_override;
      cfg.train.seed = *seed_override;
    }
    if (out_override) cfg.out_dir = *out_override;

    if (gen->parsed()) return cmd_gen(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (probe->parsed()) return cmd_probe(cfg);
    if (report->parsed()) return cmd_report(cfg);
    if (exec->parsed()) return cmd_exec(cfg, workers);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
