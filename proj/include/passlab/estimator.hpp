#pragma once

#include <string>
#include <vector>

namespace passlab {

enum class Method { Grpo, Rloo };

const char* method_name(Method m);
Method method_from_name(const std::string& s);

struct AdvantageGroup {
  std::vector<double> rewards;
  std::vector<double> advantages;
  double mean = 0.0;
  double stddev = 0.0;  // population (biased)
  Method method = Method::Grpo;
  double epsilon = 0.0;
};

/// A_i = (r_i - mean) / (population std + epsilon).
AdvantageGroup grpo_advantages(const std::vector<double>& rewards,
                               double epsilon = 1e-4);

/// A_i = r_i - mean of the other N-1 rewards = (N/(N-1)) * (r_i - mean).
AdvantageGroup rloo_advantages(const std::vector<double>& rewards);

AdvantageGroup compute_advantages(Method method, const std::vector<double>& rewards,
                                  double grpo_epsilon = 1e-4);

}  // namespace passlab
