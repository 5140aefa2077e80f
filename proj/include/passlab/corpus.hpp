#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace passlab {

/// Per-test boolean outcomes, index 0 = first test.
using PassVector = std::vector<std::uint8_t>;

enum class Mode { Full, Helpful, Harmful, Other };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct Candidate {
  std::vector<int> tokens;
  PassVector pass;
  Mode mode = Mode::Other;
};

/// One problem: a test suite of size test_count and an enumerable table of
/// candidate programs with precomputed pass vectors and mode labels.
struct Task {
  std::string id;
  int test_count = 0;
  int vocab_size = 0;
  int seq_len = 0;
  std::vector<Candidate> programs;
  std::vector<int> reference_ids;  // all-ones candidates; >= 2 entries

  /// Index of the candidate with these tokens, or -1 if not in the table.
  int find_candidate(const std::vector<int>& tokens) const;

  /// Throws std::invalid_argument if any structural invariant is violated.
  void validate() const;
};

struct Corpus {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<Task> tasks;

  void validate() const;
};

/// Pass vector of the candidate at candidate_index; pure table lookup.
PassVector evaluate(const Task& task, int candidate_index);

/// Fraction of passing tests; value on the grid {0, 1/K, ..., 1}.
double pass_rate(const PassVector& pv);

/// Benign corpus: vocab 2, seq_len 3, every task enumerates all 8 sequences
/// and keeps two full-pass references. `correlation` in [0,1] couples the
/// failure bits of partial candidates (0 = independent per test).
Corpus gen_easy_corpus(int n_tasks, int tests_per_task, std::uint64_t seed,
                       double correlation = 0.0);

/// Conflict corpus: each task holds two references, helpful near-misses that
/// score below the harmful candidate, one harmful candidate passing
/// ceil(harmful_pass_fraction * K) tests, and a zero-pass filler.
Corpus gen_conflict_corpus(int n_tasks, int tests_per_task,
                           double harmful_pass_fraction, std::uint64_t seed);

/// Line-delimited records, one task per line; see README for the schema.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);
void write_corpus(const Corpus& corpus, std::ostream& out);
Corpus read_corpus(std::istream& in);

/// splitmix64-style seed derivation used everywhere randomness is split.
std::uint64_t seed_combine(std::uint64_t seed, std::uint64_t stream);

}  // namespace passlab
