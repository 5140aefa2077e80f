#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace passlab {

struct DensityReport {
  std::size_t total_groups = 0;
  std::size_t effective_groups = 0;  // >= 2 distinct reward values
  std::map<std::size_t, std::size_t> distinct_value_histogram;  // over effective
  double intermediate_fraction = 0.0;  // sample rewards strictly in (0,1)
};

struct OverlapMatrix {
  std::size_t both_solved = 0;
  std::size_t a_only = 0;
  std::size_t b_only = 0;
  std::size_t both_failed = 0;
  double agreement = 0.0;
};

/// Unbiased pass@k: 1 - C(n-c, k) / C(n, k). Exact integer binomials for
/// n <= 64, log-space beyond.
double pass_at_k(int n, int c, int k);

DensityReport density_report(const std::vector<std::vector<double>>& groups);

OverlapMatrix solvability_overlap(const std::set<std::string>& solved_a,
                                  const std::set<std::string>& solved_b,
                                  const std::set<std::string>& universe);

}  // namespace passlab
