#include "passlab/estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace passlab {

const char* method_name(Method m) {
  return m == Method::Grpo ? "grpo" : "rloo";
}

Method method_from_name(const std::string& s) {
  if (s == "grpo") return Method::Grpo;
  if (s == "rloo") return Method::Rloo;
  throw std::invalid_argument("unknown advantage method: " + s);
}

namespace {

double group_mean(const std::vector<double>& rewards) {
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum / static_cast<double>(rewards.size());
}

// All-equal groups must yield exactly zero advantages; the summed mean can
// round away from the common value, so detect them up front.
bool all_equal(const std::vector<double>& rewards) {
  for (double r : rewards)
    if (r != rewards.front()) return false;
  return true;
}

}  // namespace

AdvantageGroup grpo_advantages(const std::vector<double>& rewards, double epsilon) {
  if (rewards.size() < 2) throw std::invalid_argument("group size must be >= 2");
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  AdvantageGroup g;
  g.method = Method::Grpo;
  g.epsilon = epsilon;
  g.rewards = rewards;
  if (all_equal(rewards)) {
    g.mean = rewards.front();
    g.stddev = 0.0;
    g.advantages.assign(rewards.size(), 0.0);
    return g;
  }
  g.mean = group_mean(rewards);
  double var = 0.0;
  for (double r : rewards) var += (r - g.mean) * (r - g.mean);
  var /= static_cast<double>(rewards.size());  // population variance
  g.stddev = std::sqrt(var);
  g.advantages.reserve(rewards.size());
  for (double r : rewards) g.advantages.push_back((r - g.mean) / (g.stddev + epsilon));
  return g;
}

AdvantageGroup rloo_advantages(const std::vector<double>& rewards) {
  const std::size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("group size must be >= 2");
  AdvantageGroup g;
  g.method = Method::Rloo;
  g.rewards = rewards;
  if (all_equal(rewards)) {
    g.mean = rewards.front();
    g.stddev = 0.0;
    g.advantages.assign(n, 0.0);
    return g;
  }
  g.mean = group_mean(rewards);
  double var = 0.0;
  for (double r : rewards) var += (r - g.mean) * (r - g.mean);
  g.stddev = std::sqrt(var / static_cast<double>(n));
  const double total = g.mean * static_cast<double>(n);
  g.advantages.reserve(n);
  for (double r : rewards) {
    const double baseline = (total - r) / static_cast<double>(n - 1);
    g.advantages.push_back(r - baseline);
  }
  return g;
}

AdvantageGroup compute_advantages(Method method, const std::vector<double>& rewards,
                                  double grpo_epsilon) {
  return method == Method::Grpo ? grpo_advantages(rewards, grpo_epsilon)
                                : rloo_advantages(rewards);
}

}  // namespace passlab
