#include "passlab/probe.hpp"

#include <algorithm>
#include <stdexcept>

#include "passlab/reward.hpp"

namespace passlab {

const char* probe_condition_name(ProbeCondition c) {
  switch (c) {
    case ProbeCondition::PassRateWithoutFull: return "pass_rate_without_full";
    case ProbeCondition::PassRateWithFull: return "pass_rate_with_full";
    case ProbeCondition::BinaryWithoutFull: return "binary_without_full";
    case ProbeCondition::BinaryWithFull: return "binary_with_full";
  }
  return "pass_rate_without_full";
}

ProbeCondition probe_condition_from_name(const std::string& s) {
  if (s == "pass_rate_without_full") return ProbeCondition::PassRateWithoutFull;
  if (s == "pass_rate_with_full") return ProbeCondition::PassRateWithFull;
  if (s == "binary_without_full") return ProbeCondition::BinaryWithoutFull;
  if (s == "binary_with_full") return ProbeCondition::BinaryWithFull;
  throw std::invalid_argument("unknown probe condition: " + s);
}

namespace {

bool uses_binary(ProbeCondition c) {
  return c == ProbeCondition::BinaryWithoutFull || c == ProbeCondition::BinaryWithFull;
}

bool appends_full(ProbeCondition c) {
  return c == ProbeCondition::PassRateWithFull || c == ProbeCondition::BinaryWithFull;
}

double sequence_pass_rate(const Task& task, const std::vector<int>& tokens) {
  const int idx = task.find_candidate(tokens);
  if (idx < 0) return 0.0;  // off-table samples fail every test
  return pass_rate(task.programs[idx].pass);
}

struct ProbeSetup {
  std::vector<std::vector<int>> members;  // group (+ appended rewrite)
  std::vector<double> rewards;
  std::vector<double> advantages;
  const Candidate* y_full = nullptr;
};

ProbeSetup prepare(const Task& task, const std::vector<std::vector<int>>& group,
                   const ProbeConfig& cfg) {
  if (cfg.eta <= 0.0) throw std::invalid_argument("probe eta must be positive");
  if (task.reference_ids.size() < 2)
    throw std::invalid_argument("task " + task.id + " lacks a reference and rewrite pair");

  ProbeSetup setup;
  setup.y_full = &task.programs[task.reference_ids[0]];
  if (!std::all_of(setup.y_full->pass.begin(), setup.y_full->pass.end(),
                   [](std::uint8_t b) { return b != 0; }))
    throw std::invalid_argument("probe reference is not full-pass");

  setup.members = group;
  for (const std::vector<int>& seq : setup.members) {
    const double rate = sequence_pass_rate(task, seq);
    setup.rewards.push_back(uses_binary(cfg.condition) ? (rate == 1.0 ? 1.0 : 0.0) : rate);
  }
  if (appends_full(cfg.condition)) {
    // The rewrite enters the update group so the probe never measures a
    // sequence that appears verbatim in the update.
    const Candidate& rewrite = task.programs[task.reference_ids[1]];
    setup.members.push_back(rewrite.tokens);
    setup.rewards.push_back(1.0);
  }
  setup.advantages =
      compute_advantages(cfg.method, setup.rewards, cfg.grpo_epsilon).advantages;
  return setup;
}

double delta_for_direction(const Policy& policy, const Task& task,
                           const GradientVector& direction, double eta,
                           const std::vector<int>& reference, bool normalize) {
  const double before = policy.log_prob(task, reference);
  const Policy updated = policy.apply_update(direction, eta);
  const double after = updated.log_prob(task, reference);
  double delta = after - before;
  if (normalize) delta /= static_cast<double>(reference.size());
  return delta;
}

}  // namespace

bool is_without_full_group(const Task& task,
                           const std::vector<std::vector<int>>& group) {
  for (const std::vector<int>& seq : group) {
    if (sequence_pass_rate(task, seq) == 1.0) return false;
  }
  return true;
}

ProbeReport group_probe(const Policy& policy, const Task& task,
                        const std::vector<std::vector<int>>& group,
                        const ProbeConfig& cfg) {
  if (group.empty()) throw std::invalid_argument("probe group is empty");
  const ProbeSetup setup = prepare(task, group, cfg);

  GradientVector direction = policy.zero_gradient();
  bool any_nonzero = false;
  for (std::size_t i = 0; i < setup.members.size(); ++i) {
    if (setup.advantages[i] == 0.0) continue;
    direction.add_scaled(policy.grad_log_prob(task, setup.members[i]),
                         setup.advantages[i]);
    any_nonzero = true;
  }

  ProbeReport report;
  report.task_id = task.id;
  report.advantages = setup.advantages;
  report.rewards = setup.rewards;
  report.normalized = cfg.length_normalize;
  report.delta_grp =
      any_nonzero ? delta_for_direction(policy, task, direction, cfg.eta,
                                        setup.y_full->tokens, cfg.length_normalize)
                  : 0.0;
  for (std::size_t i = 0; i < setup.members.size(); ++i) {
    if (setup.advantages[i] == 0.0) {
      report.delta_i.push_back(0.0);
      continue;
    }
    GradientVector single = policy.grad_log_prob(task, setup.members[i]);
    single.scale(setup.advantages[i]);
    report.delta_i.push_back(delta_for_direction(policy, task, single, cfg.eta,
                                                 setup.y_full->tokens,
                                                 cfg.length_normalize));
  }
  return report;
}

double sample_probe(const Policy& policy, const Task& task,
                    const std::vector<std::vector<int>>& group, int index,
                    const ProbeConfig& cfg) {
  if (group.empty()) throw std::invalid_argument("probe group is empty");
  const ProbeSetup setup = prepare(task, group, cfg);
  if (index < 0 || index >= static_cast<int>(setup.members.size()))
    throw std::invalid_argument("probe sample index out of range");
  if (setup.advantages[index] == 0.0) return 0.0;
  GradientVector single = policy.grad_log_prob(task, setup.members[index]);
  single.scale(setup.advantages[index]);
  return delta_for_direction(policy, task, single, cfg.eta, setup.y_full->tokens,
                             cfg.length_normalize);
}

ConflictReport conflict_report(const std::vector<std::vector<LabeledSample>>& tasks) {
  ConflictReport report;
  for (const std::vector<LabeledSample>& samples : tasks) {
    bool any_helpful = false, any_harmful = false;
    double best_helpful = -1.0, best_harmful = -1.0;
    bool harmful_pos = false, helpful_neg = false;
    for (const LabeledSample& s : samples) {
      if (!s.mode) throw std::invalid_argument("conflict report sample lacks a mode label");
      if (*s.mode == Mode::Helpful) {
        any_helpful = true;
        best_helpful = std::max(best_helpful, s.pass_rate);
        if (s.advantage < 0.0) helpful_neg = true;
      } else if (*s.mode == Mode::Harmful) {
        any_harmful = true;
        best_harmful = std::max(best_harmful, s.pass_rate);
        if (s.advantage > 0.0) harmful_pos = true;
      }
    }
    ++report.tasks_any_judged;
    if (any_helpful && any_harmful) {
      ++report.tasks_with_both;
      if (best_harmful > best_helpful) ++report.reversal_count;
    }
    if (harmful_pos && helpful_neg) ++report.conflict_count;
  }
  report.reversal_rate =
      report.tasks_with_both == 0
          ? 0.0
          : static_cast<double>(report.reversal_count) / report.tasks_with_both;
  report.conflict_rate =
      report.tasks_any_judged == 0
          ? 0.0
          : static_cast<double>(report.conflict_count) / report.tasks_any_judged;
  return report;
}

}  // namespace passlab
