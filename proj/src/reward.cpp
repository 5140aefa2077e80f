#include "passlab/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace passlab {

const char* reward_kind_name(RewardKind k) {
  switch (k) {
    case RewardKind::Binary: return "binary";
    case RewardKind::PassRate: return "pass_rate";
    case RewardKind::Reweighted: return "reweighted";
    case RewardKind::TwoStage: return "two_stage";
  }
  return "binary";
}

RewardKind reward_kind_from_name(const std::string& s) {
  if (s == "binary") return RewardKind::Binary;
  if (s == "pass_rate") return RewardKind::PassRate;
  if (s == "reweighted") return RewardKind::Reweighted;
  if (s == "two_stage") return RewardKind::TwoStage;
  throw std::invalid_argument("unknown reward kind: " + s);
}

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "EASY";
    case Difficulty::Medium: return "MEDIUM";
    case Difficulty::Hard: return "HARD";
  }
  return "MEDIUM";
}

double binary_reward(const PassVector& pv) {
  if (pv.empty()) throw std::invalid_argument("pass vector is empty");
  return std::all_of(pv.begin(), pv.end(), [](std::uint8_t b) { return b != 0; }) ? 1.0
                                                                                  : 0.0;
}

double pass_rate_reward(const PassVector& pv) { return pass_rate(pv); }

double reweighted_reward(const PassVector& pv, const std::vector<double>& weights) {
  if (pv.empty()) throw std::invalid_argument("pass vector is empty");
  if (weights.size() != pv.size())
    throw std::invalid_argument("weights length does not match pass vector");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < pv.size(); ++k) {
    if (weights[k] <= 0.0) throw std::invalid_argument("weights must be positive");
    den += weights[k];
    if (pv[k]) num += weights[k];
  }
  return num / den;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  if (pct < 0.0 || pct > 100.0)
    throw std::invalid_argument("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

std::vector<Difficulty> label_difficulty(const DifficultyInput& input) {
  if (input.tier_rates.size() != 3 || input.tier_weights.size() != 3)
    throw std::invalid_argument("difficulty input requires exactly three model tiers");
  if (input.epsilon <= 0.0 || input.epsilon >= 0.5)
    throw std::invalid_argument("epsilon must lie in (0, 0.5)");
  const std::size_t tests = input.tier_rates[0].size();
  if (tests == 0) throw std::invalid_argument("difficulty input has no test cases");

  double weight_sum = 0.0;
  for (double w : input.tier_weights) {
    if (w <= 0.0) throw std::invalid_argument("tier weights must be positive");
    weight_sum += w;
  }
  for (const auto& rates : input.tier_rates) {
    if (rates.size() != tests)
      throw std::invalid_argument("tier pass-rate rows have unequal lengths");
    for (double r : rates) {
      if (r < 0.0 || r > 1.0)
        throw std::invalid_argument("pass rates must lie in [0, 1]");
    }
  }

  std::vector<double> signal(tests, 0.0);
  for (std::size_t j = 0; j < tests; ++j) {
    for (std::size_t i = 0; i < 3; ++i)
      signal[j] += input.tier_weights[i] * input.tier_rates[i][j];
    signal[j] /= weight_sum;
  }

  const bool all_easy = std::all_of(signal.begin(), signal.end(), [&](double p) {
    return p >= 1.0 - input.epsilon;
  });
  if (all_easy) return std::vector<Difficulty>(tests, Difficulty::Easy);
  const bool all_hard = std::all_of(signal.begin(), signal.end(), [&](double p) {
    return p <= input.epsilon;
  });
  if (all_hard) return std::vector<Difficulty>(tests, Difficulty::Hard);

  const double q33 = percentile(signal, 33.0);
  const double q67 = percentile(signal, 67.0);
  std::vector<Difficulty> labels(tests, Difficulty::Medium);
  for (std::size_t j = 0; j < tests; ++j) {
    if (signal[j] >= q67)
      labels[j] = Difficulty::Easy;
    else if (signal[j] < q33)
      labels[j] = Difficulty::Hard;
  }
  return labels;
}

std::vector<double> difficulty_weights(const std::vector<Difficulty>& labels,
                                       const RewardSpec& spec) {
  std::vector<double> weights;
  weights.reserve(labels.size());
  for (Difficulty d : labels) weights.push_back(spec.weight_map.at(d));
  return weights;
}

double reward_for_step(const RewardSpec& spec, int step, const PassVector& pv,
                       const std::optional<std::vector<double>>& weights) {
  if (step < 0) throw std::invalid_argument("step must be >= 0");
  switch (spec.kind) {
    case RewardKind::Binary:
      return binary_reward(pv);
    case RewardKind::PassRate:
      return pass_rate_reward(pv);
    case RewardKind::Reweighted:
      if (!weights) throw std::invalid_argument("reweighted reward requires test weights");
      return reweighted_reward(pv, *weights);
    case RewardKind::TwoStage:
      return step < spec.switch_step ? pass_rate_reward(pv) : binary_reward(pv);
  }
  throw std::invalid_argument("unknown reward kind");
}

}  // namespace passlab
