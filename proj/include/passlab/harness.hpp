#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "passlab/corpus.hpp"

namespace passlab {

struct TimeoutPolicy {
  double multiplier = 3.0;  // S
  double t_min = 10.0;      // seconds
  double t_max = 30.0;
  std::optional<double> canonical_runtime;  // t_canon, seconds

  void validate() const;
};

/// clamp(S * t_canon, t_min, t_max); t_min when no canonical runtime.
double adaptive_timeout(const TimeoutPolicy& policy);

enum class TestOutcome { Pass, WrongOutput, Timeout, RuntimeError };

const char* outcome_name(TestOutcome o);

struct TestCase {
  std::string input;
  std::string expected_output;
};

struct ExecResult {
  std::vector<TestOutcome> outcomes;
  std::vector<double> wall_seconds;

  PassVector pass_vector() const;
};

/// Command line for one candidate, e.g. {"python3", "prog.py"}; test data is
/// never shell-interpolated.
struct ProgramSpec {
  std::vector<std::string> argv;
};

/// Runs every test in a fresh subprocess under the computed timeout and the
/// given address-space ceiling. Output comparison right-trims each line and
/// drops trailing blank lines.
ExecResult run_program(const ProgramSpec& program,
                       const std::vector<TestCase>& tests,
                       const TimeoutPolicy& policy,
                       std::size_t memory_limit_bytes = 512ull << 20);

struct CandidateResult {
  std::string name;
  ExecResult exec;
  double binary = 0.0;
  double pass_rate = 0.0;
};

struct SuiteReport {
  std::vector<CandidateResult> candidates;  // sorted by name
  double timeout_seconds = 0.0;
  std::optional<double> canonical_runtime;
};

/// Evaluates problem_dir/candidates/* against problem_dir/tests/NN.{in,out}.
/// An optional problem_dir/canonical* program is timed (median of 3 runs of
/// the full suite, slowest test) to set the adaptive timeout.
SuiteReport eval_suite(const std::string& problem_dir, TimeoutPolicy policy,
                       int workers = 1,
                       std::size_t memory_limit_bytes = 512ull << 20);

/// True if the expected and actual text match after per-line right-trim and
/// trailing blank line removal.
bool outputs_match(const std::string& expected, const std::string& actual);

}  // namespace passlab
