#pragma once

#include <optional>
#include <string>
#include <vector>

#include "passlab/estimator.hpp"
#include "passlab/policy.hpp"

namespace passlab {

enum class ProbeCondition {
  PassRateWithoutFull,
  PassRateWithFull,
  BinaryWithoutFull,
  BinaryWithFull,
};

const char* probe_condition_name(ProbeCondition c);
ProbeCondition probe_condition_from_name(const std::string& s);

struct ProbeConfig {
  double eta = 1e-4;
  ProbeCondition condition = ProbeCondition::PassRateWithoutFull;
  bool length_normalize = true;
  Method method = Method::Grpo;
  double grpo_epsilon = 1e-4;
};

struct ProbeReport {
  std::string task_id;
  double delta_grp = 0.0;
  std::vector<double> delta_i;     // one per group member (+ appended rewrite)
  std::vector<double> advantages;  // the advantages used for the update
  std::vector<double> rewards;
  bool normalized = true;
};

/// Applies the single-step group update to a scratch parameter copy and
/// returns the induced log-probability change of the task's full-pass
/// reference. With-full conditions append the stored rewrite with reward 1.
ProbeReport group_probe(const Policy& policy, const Task& task,
                        const std::vector<std::vector<int>>& group,
                        const ProbeConfig& cfg);

/// Same measurement for a single group member, with advantages still
/// computed over the whole group.
double sample_probe(const Policy& policy, const Task& task,
                    const std::vector<std::vector<int>>& group, int index,
                    const ProbeConfig& cfg);

/// True iff no group member has pass rate 1 under the task's table.
bool is_without_full_group(const Task& task,
                           const std::vector<std::vector<int>>& group);

struct LabeledSample {
  std::optional<Mode> mode;
  double pass_rate = 0.0;
  double advantage = 0.0;
};

struct ConflictReport {
  std::size_t tasks_any_judged = 0;
  std::size_t tasks_with_both = 0;  // >= 1 helpful and >= 1 harmful
  std::size_t reversal_count = 0;   // best harmful out-passes best helpful
  std::size_t conflict_count = 0;   // harmful A>0 and helpful A<0 coexist
  double reversal_rate = 0.0;       // over tasks_with_both
  double conflict_rate = 0.0;       // over tasks_any_judged
};

ConflictReport conflict_report(const std::vector<std::vector<LabeledSample>>& tasks);

}  // namespace passlab
