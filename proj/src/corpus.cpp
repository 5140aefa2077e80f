#include "passlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace passlab {

using nlohmann::json;

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Full: return "FULL";
    case Mode::Helpful: return "HELPFUL";
    case Mode::Harmful: return "HARMFUL";
    case Mode::Other: return "OTHER";
  }
  return "OTHER";
}

Mode mode_from_name(const std::string& s) {
  if (s == "FULL") return Mode::Full;
  if (s == "HELPFUL") return Mode::Helpful;
  if (s == "HARMFUL") return Mode::Harmful;
  if (s == "OTHER") return Mode::Other;
  throw std::invalid_argument("unknown mode label: " + s);
}

std::uint64_t seed_combine(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the xored pair.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

int Task::find_candidate(const std::vector<int>& tokens) const {
  for (std::size_t i = 0; i < programs.size(); ++i) {
    if (programs[i].tokens == tokens) return static_cast<int>(i);
  }
  return -1;
}

namespace {

bool all_ones(const PassVector& pv) {
  return std::all_of(pv.begin(), pv.end(), [](std::uint8_t b) { return b != 0; });
}

int common_prefix(const std::vector<int>& a, const std::vector<int>& b) {
  int n = static_cast<int>(std::min(a.size(), b.size()));
  int i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

}  // namespace

void Task::validate() const {
  if (test_count <= 0) throw std::invalid_argument("task " + id + ": test_count must be positive");
  if (vocab_size <= 0 || seq_len <= 0)
    throw std::invalid_argument("task " + id + ": vocab_size and seq_len must be positive");
  if (reference_ids.size() < 2)
    throw std::invalid_argument("task " + id + ": needs at least 2 reference candidates");

  std::set<std::vector<int>> seen;
  for (const Candidate& c : programs) {
    if (static_cast<int>(c.pass.size()) != test_count)
      throw std::invalid_argument("task " + id + ": pass vector length != test_count");
    if (static_cast<int>(c.tokens.size()) != seq_len)
      throw std::invalid_argument("task " + id + ": token sequence length != seq_len");
    for (int t : c.tokens) {
      if (t < 0 || t >= vocab_size)
        throw std::invalid_argument("task " + id + ": token out of vocab range");
    }
    if (!seen.insert(c.tokens).second)
      throw std::invalid_argument("task " + id + ": duplicate candidate token sequence");
    if ((c.mode == Mode::Full) != all_ones(c.pass))
      throw std::invalid_argument("task " + id + ": FULL mode must match all-ones pass vector");
  }

  std::set<std::vector<int>> ref_tokens;
  for (int r : reference_ids) {
    if (r < 0 || r >= static_cast<int>(programs.size()))
      throw std::invalid_argument("task " + id + ": reference index out of range");
    if (!all_ones(programs[r].pass))
      throw std::invalid_argument("task " + id + ": reference candidate is not full-pass");
    ref_tokens.insert(programs[r].tokens);
  }
  if (ref_tokens.size() < 2)
    throw std::invalid_argument("task " + id + ": references must have distinct token sequences");

  // Structural mode constraints against the reference set.
  const int half = (seq_len + 1) / 2;
  for (const Candidate& c : programs) {
    if (c.mode == Mode::Helpful) {
      int best = 0;
      for (int r : reference_ids)
        best = std::max(best, common_prefix(c.tokens, programs[r].tokens));
      if (best < half)
        throw std::invalid_argument("task " + id + ": HELPFUL candidate lacks a shared prefix");
    } else if (c.mode == Mode::Harmful) {
      for (int r : reference_ids) {
        if (common_prefix(c.tokens, programs[r].tokens) > 1)
          throw std::invalid_argument("task " + id + ": HARMFUL candidate shares a long prefix");
      }
    }
  }
}

void Corpus::validate() const {
  std::set<std::string> ids;
  for (const Task& t : tasks) {
    if (!ids.insert(t.id).second)
      throw std::invalid_argument("corpus " + name + ": duplicate task id " + t.id);
    t.validate();
  }
}

PassVector evaluate(const Task& task, int candidate_index) {
  if (candidate_index < 0 || candidate_index >= static_cast<int>(task.programs.size()))
    throw std::invalid_argument("candidate index out of range");
  return task.programs[candidate_index].pass;
}

double pass_rate(const PassVector& pv) {
  if (pv.empty()) throw std::invalid_argument("pass vector is empty");
  const auto set = std::count_if(pv.begin(), pv.end(), [](std::uint8_t b) { return b != 0; });
  return static_cast<double>(set) / static_cast<double>(pv.size());
}

namespace {

// Pass vector with `count` set bits at seeded positions; never all-ones
// unless count == K.
PassVector partial_pass(int tests, int count, std::mt19937_64& rng) {
  PassVector pv(tests, 0);
  std::vector<int> idx(tests);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int i = 0; i < count; ++i) pv[idx[i]] = 1;
  return pv;
}

}  // namespace

Corpus gen_easy_corpus(int n_tasks, int tests_per_task, std::uint64_t seed,
                       double correlation) {
  if (n_tasks < 1) throw std::invalid_argument("n_tasks must be >= 1");
  if (tests_per_task < 1) throw std::invalid_argument("tests_per_task must be >= 1");
  if (correlation < 0.0 || correlation > 1.0)
    throw std::invalid_argument("correlation must lie in [0, 1]");

  const int vocab = 2;
  const int seq_len = 3;
  Corpus corpus;
  corpus.name = "easy";
  corpus.seed = seed;

  for (int t = 0; t < n_tasks; ++t) {
    std::mt19937_64 rng(seed_combine(seed, static_cast<std::uint64_t>(t)));
    Task task;
    task.id = "easy-" + std::to_string(t);
    task.test_count = tests_per_task;
    task.vocab_size = vocab;
    task.seq_len = seq_len;

    const int first = static_cast<int>(rng() % 2);   // references start (first, second)
    const int second = static_cast<int>(rng() % 2);

    // Enumerate the whole sequence space; the two sequences with the chosen
    // two-token prefix are the full-pass references.
    for (int a = 0; a < vocab; ++a) {
      for (int b = 0; b < vocab; ++b) {
        for (int c = 0; c < vocab; ++c) {
          Candidate cand;
          cand.tokens = {a, b, c};
          if (a == first && b == second) {
            cand.pass.assign(tests_per_task, 1);
            cand.mode = Mode::Full;
            task.reference_ids.push_back(static_cast<int>(task.programs.size()));
          } else {
            int count;
            if (correlation > 0.0 &&
                std::generate_canonical<double, 53>(rng) < correlation) {
              // Correlated suite: all tests behave as one (all fail, or all
              // but one pass so the candidate stays non-full).
              count = rng() % 2 == 0 ? 0 : tests_per_task - 1;
            } else {
              count = static_cast<int>(rng() % static_cast<std::uint64_t>(tests_per_task));
            }
            cand.pass = partial_pass(tests_per_task, count, rng);
            cand.mode = count == 0 ? Mode::Other : Mode::Harmful;
          }
          task.programs.push_back(std::move(cand));
        }
      }
    }
    corpus.tasks.push_back(std::move(task));
  }
  corpus.validate();
  return corpus;
}

Corpus gen_conflict_corpus(int n_tasks, int tests_per_task,
                           double harmful_pass_fraction, std::uint64_t seed) {
  if (n_tasks < 1) throw std::invalid_argument("n_tasks must be >= 1");
  if (tests_per_task < 4) throw std::invalid_argument("tests_per_task must be >= 4");
  if (harmful_pass_fraction <= 0.0 || harmful_pass_fraction >= 1.0)
    throw std::invalid_argument("harmful_pass_fraction must lie in (0, 1)");

  const int harmful_count =
      static_cast<int>(std::ceil(harmful_pass_fraction * tests_per_task));
  if (harmful_count >= tests_per_task)
    throw std::invalid_argument(
        "harmful_pass_fraction rounds up to a full pass; choose a smaller value");
  if (harmful_count < 2)
    throw std::invalid_argument(
        "harmful_pass_fraction too small to out-pass a helpful candidate");

  const int vocab = 3;
  const int seq_len = 4;
  Corpus corpus;
  corpus.name = "conflict";
  corpus.seed = seed;

  for (int t = 0; t < n_tasks; ++t) {
    std::mt19937_64 rng(seed_combine(seed, static_cast<std::uint64_t>(t)));
    Task task;
    task.id = "conflict-" + std::to_string(t);
    task.test_count = tests_per_task;
    task.vocab_size = vocab;
    task.seq_len = seq_len;

    const int a = static_cast<int>(rng() % vocab);
    const int b = static_cast<int>(rng() % vocab);
    const int c = static_cast<int>(rng() % vocab);

    // Reference, its rewrite, and the near-miss all share the prefix (0,a,b);
    // the harmful and filler candidates branch at the first token.
    Candidate ref;
    ref.tokens = {0, a, b, c};
    ref.pass.assign(tests_per_task, 1);
    ref.mode = Mode::Full;

    Candidate rewrite = ref;
    rewrite.tokens[3] = (c + 1) % vocab;

    // Two helpful near-misses: one just below the harmful score, one much
    // weaker. Which prefix carries the strong score alternates by task so the
    // corpus as a whole is balanced rather than systematically tilted toward
    // or against the reference prefix.
    const bool near_is_strong = t % 2 == 0;

    Candidate helpful_near;
    helpful_near.tokens = {0, a, b, (c + 2) % vocab};
    helpful_near.pass =
        partial_pass(tests_per_task, near_is_strong ? harmful_count - 1 : 1, rng);
    helpful_near.mode = Mode::Helpful;

    Candidate helpful_low;
    helpful_low.tokens = {0, a, (b + 1) % vocab, static_cast<int>(rng() % vocab)};
    helpful_low.pass =
        partial_pass(tests_per_task, near_is_strong ? 1 : harmful_count - 1, rng);
    helpful_low.mode = Mode::Helpful;

    Candidate harmful;  // different first token: no shared prefix with refs
    harmful.tokens = {1, static_cast<int>(rng() % vocab),
                      static_cast<int>(rng() % vocab), static_cast<int>(rng() % vocab)};
    harmful.pass = partial_pass(tests_per_task, harmful_count, rng);
    harmful.mode = Mode::Harmful;

    Candidate filler;
    filler.tokens = {2, static_cast<int>(rng() % vocab),
                     static_cast<int>(rng() % vocab), static_cast<int>(rng() % vocab)};
    filler.pass.assign(tests_per_task, 0);
    filler.mode = Mode::Other;

    task.programs = {ref, rewrite, helpful_near, helpful_low, harmful, filler};
    task.reference_ids = {0, 1};
    corpus.tasks.push_back(std::move(task));
  }
  corpus.validate();
  return corpus;
}

namespace {

json task_to_json(const Task& task) {
  json programs = json::array();
  for (const Candidate& c : task.programs) {
    std::string bits;
    bits.reserve(c.pass.size());
    for (std::uint8_t b : c.pass) bits.push_back(b ? '1' : '0');
    programs.push_back({{"tokens", c.tokens}, {"pass_bits", bits}, {"mode", mode_name(c.mode)}});
  }
  return {{"id", task.id},
          {"K", task.test_count},
          {"vocab_size", task.vocab_size},
          {"seq_len", task.seq_len},
          {"programs", programs},
          {"reference_ids", task.reference_ids}};
}

Task task_from_json(const json& j) {
  Task task;
  task.id = j.at("id").get<std::string>();
  task.test_count = j.at("K").get<int>();
  task.vocab_size = j.at("vocab_size").get<int>();
  task.seq_len = j.at("seq_len").get<int>();
  task.reference_ids = j.at("reference_ids").get<std::vector<int>>();
  for (const json& p : j.at("programs")) {
    Candidate c;
    c.tokens = p.at("tokens").get<std::vector<int>>();
    const std::string bits = p.at("pass_bits").get<std::string>();
    c.pass.reserve(bits.size());
    for (char ch : bits) {
      if (ch != '0' && ch != '1')
        throw std::invalid_argument("task " + task.id + ": bad pass_bits character");
      c.pass.push_back(ch == '1' ? 1 : 0);
    }
    c.mode = mode_from_name(p.at("mode").get<std::string>());
    task.programs.push_back(std::move(c));
  }
  return task;
}

}  // namespace

void write_corpus(const Corpus& corpus, std::ostream& out) {
  out << json{{"corpus", corpus.name}, {"seed", corpus.seed}}.dump() << "\n";
  for (const Task& task : corpus.tasks) out << task_to_json(task).dump() << "\n";
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (!have_header) {
      corpus.name = j.at("corpus").get<std::string>();
      corpus.seed = j.at("seed").get<std::uint64_t>();
      have_header = true;
    } else {
      corpus.tasks.push_back(task_from_json(j));
    }
  }
  if (!have_header) throw std::invalid_argument("corpus stream is empty");
  corpus.validate();
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open corpus file for writing: " + path);
  write_corpus(corpus, out);
  if (!out) throw std::runtime_error("failed writing corpus file: " + path);
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return read_corpus(in);
}

}  // namespace passlab
