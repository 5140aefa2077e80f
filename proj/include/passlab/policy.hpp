#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "passlab/corpus.hpp"

namespace passlab {

/// Flat per-task logit block indexed (position, previous token incl. a
/// begin-of-sequence marker, next token), row-major.
struct TaskBlock {
  std::string task_id;
  int seq_len = 0;
  int vocab_size = 0;
  std::vector<double> values;  // seq_len * (vocab_size + 1) * vocab_size

  int bos() const { return vocab_size; }
  std::size_t offset(int pos, int prev, int tok) const {
    return (static_cast<std::size_t>(pos) * (vocab_size + 1) + prev) * vocab_size + tok;
  }
};

/// Same index space as the policy parameters; used both for log-prob
/// gradients and accumulated update directions.
struct GradientVector {
  std::vector<TaskBlock> blocks;

  GradientVector& add_scaled(const GradientVector& other, double scale);
  void scale(double factor);
  double dot(const GradientVector& other) const;
};

/// Exact tabular autoregressive softmax policy over each task's sequence
/// space. All operations are closed-form; sampling is exact categorical.
class Policy {
 public:
  Policy() = default;

  /// All logits zero: the uniform policy over every task's sequence space.
  static Policy uniform_init(const Corpus& corpus, double temperature = 1.0);

  /// Adds `boost` to the logits along the token path of every non-reference
  /// candidate, concentrating sampling mass on partial-pass programs. Used
  /// to realize the without-full regime.
  static Policy biased_init(const Corpus& corpus, double boost,
                            double temperature = 1.0);

  double temperature() const { return temperature_; }
  const std::vector<TaskBlock>& blocks() const { return blocks_; }
  std::vector<TaskBlock>& blocks() { return blocks_; }

  const TaskBlock& block_for(const Task& task) const;

  /// Sum over positions of log softmax(logits/T)[token]; always <= 0.
  double log_prob(const Task& task, const std::vector<int>& tokens) const;

  /// d log_prob / d params: (1[chosen] - softmax prob) / T at each visited
  /// (position, prev) slice, zero elsewhere.
  GradientVector grad_log_prob(const Task& task,
                               const std::vector<int>& tokens) const;

  /// A zero gradient with this policy's shape.
  GradientVector zero_gradient() const;

  std::vector<std::vector<int>> sample(const Task& task, int n,
                                       std::uint64_t rng_seed) const;

  /// Returns params + eta * direction as a fresh policy; *this untouched.
  Policy apply_update(const GradientVector& direction, double eta) const;

  /// Next-token distribution for one slice (softmax of logits/T).
  std::vector<double> slice_probs(const Task& task, int pos, int prev) const;

  void save(const std::string& path) const;
  static Policy load(const std::string& path);

  bool same_params(const Policy& other) const;

 private:
  double temperature_ = 1.0;
  std::vector<TaskBlock> blocks_;
  std::unordered_map<std::string, int> index_;

  void rebuild_index();
  friend GradientVector;
};

}  // namespace passlab
