#include "passlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace passlab {

using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "passlab-policy";
constexpr int kFormatVersion = 1;

void check_shapes(const TaskBlock& a, const TaskBlock& b) {
  if (a.task_id != b.task_id || a.seq_len != b.seq_len ||
      a.vocab_size != b.vocab_size || a.values.size() != b.values.size())
    throw std::invalid_argument("parameter shape mismatch for task " + a.task_id);
}

// Stable softmax over one (pos, prev) slice of logits / temperature.
std::vector<double> softmax_slice(const TaskBlock& block, int pos, int prev,
                                  double temperature) {
  const std::size_t base = block.offset(pos, prev, 0);
  const int v = block.vocab_size;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < v; ++t)
    max_logit = std::max(max_logit, block.values[base + t] / temperature);
  std::vector<double> probs(v);
  double total = 0.0;
  for (int t = 0; t < v; ++t) {
    probs[t] = std::exp(block.values[base + t] / temperature - max_logit);
    total += probs[t];
  }
  for (double& p : probs) p /= total;
  return probs;
}

void check_tokens(const Task& task, const std::vector<int>& tokens) {
  if (static_cast<int>(tokens.size()) != task.seq_len)
    throw std::invalid_argument("token sequence length != task seq_len");
  for (int t : tokens) {
    if (t < 0 || t >= task.vocab_size)
      throw std::invalid_argument("token out of vocab range");
  }
}

}  // namespace

GradientVector& GradientVector::add_scaled(const GradientVector& other, double scale) {
  if (blocks.size() != other.blocks.size())
    throw std::invalid_argument("gradient shape mismatch");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    check_shapes(blocks[i], other.blocks[i]);
    for (std::size_t j = 0; j < blocks[i].values.size(); ++j)
      blocks[i].values[j] += scale * other.blocks[i].values[j];
  }
  return *this;
}

void GradientVector::scale(double factor) {
  for (TaskBlock& b : blocks)
    for (double& v : b.values) v *= factor;
}

double GradientVector::dot(const GradientVector& other) const {
  if (blocks.size() != other.blocks.size())
    throw std::invalid_argument("gradient shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    check_shapes(blocks[i], other.blocks[i]);
    for (std::size_t j = 0; j < blocks[i].values.size(); ++j)
      acc += blocks[i].values[j] * other.blocks[i].values[j];
  }
  return acc;
}

void Policy::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    index_[blocks_[i].task_id] = static_cast<int>(i);
}

Policy Policy::uniform_init(const Corpus& corpus, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be positive");
  Policy p;
  p.temperature_ = temperature;
  for (const Task& task : corpus.tasks) {
    TaskBlock block;
    block.task_id = task.id;
    block.seq_len = task.seq_len;
    block.vocab_size = task.vocab_size;
    block.values.assign(
        static_cast<std::size_t>(task.seq_len) * (task.vocab_size + 1) * task.vocab_size, 0.0);
    p.blocks_.push_back(std::move(block));
  }
  p.rebuild_index();
  return p;
}

Policy Policy::biased_init(const Corpus& corpus, double boost, double temperature) {
  Policy p = uniform_init(corpus, temperature);
  for (std::size_t i = 0; i < corpus.tasks.size(); ++i) {
    const Task& task = corpus.tasks[i];
    TaskBlock& block = p.blocks_[i];
    for (std::size_t c = 0; c < task.programs.size(); ++c) {
      if (std::find(task.reference_ids.begin(), task.reference_ids.end(),
                    static_cast<int>(c)) != task.reference_ids.end())
        continue;
      const std::vector<int>& tokens = task.programs[c].tokens;
      int prev = block.bos();
      for (int pos = 0; pos < task.seq_len; ++pos) {
        block.values[block.offset(pos, prev, tokens[pos])] += boost;
        prev = tokens[pos];
      }
    }
  }
  return p;
}

const TaskBlock& Policy::block_for(const Task& task) const {
  auto it = index_.find(task.id);
  if (it == index_.end())
    throw std::invalid_argument("policy has no parameters for task " + task.id);
  const TaskBlock& block = blocks_[it->second];
  if (block.seq_len != task.seq_len || block.vocab_size != task.vocab_size)
    throw std::invalid_argument("policy dimensions do not match task " + task.id);
  return block;
}

std::vector<double> Policy::slice_probs(const Task& task, int pos, int prev) const {
  const TaskBlock& block = block_for(task);
  if (pos < 0 || pos >= block.seq_len || prev < 0 || prev > block.vocab_size)
    throw std::invalid_argument("slice index out of range");
  return softmax_slice(block, pos, prev, temperature_);
}

double Policy::log_prob(const Task& task, const std::vector<int>& tokens) const {
  check_tokens(task, tokens);
  const TaskBlock& block = block_for(task);
  double total = 0.0;
  int prev = block.bos();
  for (int pos = 0; pos < task.seq_len; ++pos) {
    const std::vector<double> probs = softmax_slice(block, pos, prev, temperature_);
    total += std::log(probs[tokens[pos]]);
    prev = tokens[pos];
  }
  return total;
}

GradientVector Policy::grad_log_prob(const Task& task,
                                     const std::vector<int>& tokens) const {
  check_tokens(task, tokens);
  const TaskBlock& policy_block = block_for(task);
  GradientVector g = zero_gradient();
  TaskBlock& block = g.blocks[index_.at(task.id)];
  int prev = policy_block.bos();
  for (int pos = 0; pos < task.seq_len; ++pos) {
    const std::vector<double> probs = softmax_slice(policy_block, pos, prev, temperature_);
    for (int t = 0; t < task.vocab_size; ++t) {
      const double indicator = (t == tokens[pos]) ? 1.0 : 0.0;
      block.values[block.offset(pos, prev, t)] = (indicator - probs[t]) / temperature_;
    }
    prev = tokens[pos];
  }
  return g;
}

GradientVector Policy::zero_gradient() const {
  GradientVector g;
  g.blocks = blocks_;
  for (TaskBlock& b : g.blocks) std::fill(b.values.begin(), b.values.end(), 0.0);
  return g;
}

std::vector<std::vector<int>> Policy::sample(const Task& task, int n,
                                             std::uint64_t rng_seed) const {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  const TaskBlock& block = block_for(task);
  std::mt19937_64 rng(rng_seed);
  std::vector<std::vector<int>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> tokens(task.seq_len);
    int prev = block.bos();
    for (int pos = 0; pos < task.seq_len; ++pos) {
      const std::vector<double> probs = softmax_slice(block, pos, prev, temperature_);
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      double acc = 0.0;
      int chosen = task.vocab_size - 1;
      for (int t = 0; t < task.vocab_size; ++t) {
        acc += probs[t];
        if (u < acc) {
          chosen = t;
          break;
        }
      }
      tokens[pos] = chosen;
      prev = chosen;
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

Policy Policy::apply_update(const GradientVector& direction, double eta) const {
  if (eta <= 0.0) throw std::invalid_argument("eta must be positive");
  if (direction.blocks.size() != blocks_.size())
    throw std::invalid_argument("update direction shape mismatch");
  Policy updated = *this;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    check_shapes(blocks_[i], direction.blocks[i]);
    for (std::size_t j = 0; j < blocks_[i].values.size(); ++j)
      updated.blocks_[i].values[j] += eta * direction.blocks[i].values[j];
  }
  return updated;
}

bool Policy::same_params(const Policy& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].task_id != other.blocks_[i].task_id) return false;
    if (blocks_[i].values != other.blocks_[i].values) return false;
  }
  return temperature_ == other.temperature_;
}

void Policy::save(const std::string& path) const {
  json tasks = json::array();
  for (const TaskBlock& b : blocks_) {
    tasks.push_back({{"id", b.task_id},
                     {"seq_len", b.seq_len},
                     {"vocab_size", b.vocab_size},
                     {"logits", b.values}});
  }
  json j = {{"format", kFormatTag},
            {"version", kFormatVersion},
            {"temperature", temperature_},
            {"tasks", tasks}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open policy file for writing: " + path);
  out << j.dump() << "\n";
  if (!out) throw std::runtime_error("failed writing policy file: " + path);
}

Policy Policy::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open policy file: " + path);
  json j = json::parse(in);
  if (j.at("format").get<std::string>() != kFormatTag)
    throw std::runtime_error("not a policy snapshot: " + path);
  if (j.at("version").get<int>() != kFormatVersion)
    throw std::runtime_error("unsupported policy snapshot version in " + path);
  Policy p;
  p.temperature_ = j.at("temperature").get<double>();
  for (const json& t : j.at("tasks")) {
    TaskBlock block;
    block.task_id = t.at("id").get<std::string>();
    block.seq_len = t.at("seq_len").get<int>();
    block.vocab_size = t.at("vocab_size").get<int>();
    block.values = t.at("logits").get<std::vector<double>>();
    const std::size_t expect = static_cast<std::size_t>(block.seq_len) *
                               (block.vocab_size + 1) * block.vocab_size;
    if (block.values.size() != expect)
      throw std::runtime_error("policy snapshot payload size mismatch in " + path);
    for (double v : block.values) {
      if (!std::isfinite(v))
        throw std::runtime_error("policy snapshot contains non-finite logits");
    }
    p.blocks_.push_back(std::move(block));
  }
  p.rebuild_index();
  return p;
}

}  // namespace passlab
