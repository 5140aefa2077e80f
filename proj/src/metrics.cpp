#include "passlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace passlab {

namespace {

// C(n, k) for n <= 64; C(64, 32) fits in 64 bits, intermediates in 128.
std::uint64_t binomial_u64(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  }
  return static_cast<std::uint64_t>(result);
}

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double pass_at_k(int n, int c, int k) {
  if (k < 1 || k > n) throw std::invalid_argument("pass@k requires 1 <= k <= n");
  if (c < 0 || c > n) throw std::invalid_argument("pass@k requires 0 <= c <= n");
  if (n - c < k) return 1.0;  // every k-subset contains a passing program
  if (n <= 64) {
    const double num = static_cast<double>(binomial_u64(n - c, k));
    const double den = static_cast<double>(binomial_u64(n, k));
    return 1.0 - num / den;
  }
  return 1.0 - std::exp(log_binomial(n - c, k) - log_binomial(n, k));
}

DensityReport density_report(const std::vector<std::vector<double>>& groups) {
  if (groups.empty()) throw std::invalid_argument("density report needs at least one group");
  DensityReport report;
  report.total_groups = groups.size();
  std::size_t intermediate = 0;
  std::size_t samples = 0;
  for (const std::vector<double>& g : groups) {
    if (g.empty()) throw std::invalid_argument("density report groups must be nonempty");
    std::vector<double> distinct(g);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) continue;  // ineffective: zero gradient either way
    ++report.effective_groups;
    ++report.distinct_value_histogram[distinct.size()];
    for (double r : g) {
      ++samples;
      if (r > 0.0 && r < 1.0) ++intermediate;
    }
  }
  report.intermediate_fraction =
      samples == 0 ? 0.0 : static_cast<double>(intermediate) / static_cast<double>(samples);
  return report;
}

OverlapMatrix solvability_overlap(const std::set<std::string>& solved_a,
                                  const std::set<std::string>& solved_b,
                                  const std::set<std::string>& universe) {
  if (universe.empty()) throw std::invalid_argument("task universe is empty");
  for (const std::string& id : solved_a) {
    if (!universe.count(id))
      throw std::invalid_argument("solved set A contains unknown task id: " + id);
  }
  for (const std::string& id : solved_b) {
    if (!universe.count(id))
      throw std::invalid_argument("solved set B contains unknown task id: " + id);
  }
  OverlapMatrix m;
  for (const std::string& id : universe) {
    const bool a = solved_a.count(id) != 0;
    const bool b = solved_b.count(id) != 0;
    if (a && b)
      ++m.both_solved;
    else if (a)
      ++m.a_only;
    else if (b)
      ++m.b_only;
    else
      ++m.both_failed;
  }
  m.agreement = universe.empty()
                    ? 1.0
                    : static_cast<double>(m.both_solved + m.both_failed) /
                          static_cast<double>(universe.size());
  return m;
}

}  // namespace passlab
