#include <stdexcept>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "passlab/corpus.hpp"

using namespace passlab;

TEST_CASE("evaluate is a pure table lookup") {
  const Corpus corpus = gen_conflict_corpus(1, 4, 0.6, 7);
  const Task& task = corpus.tasks[0];

  const PassVector ref = evaluate(task, task.reference_ids[0]);
  CHECK(pass_rate(ref) == 1.0);

  for (std::size_t i = 0; i < task.programs.size(); ++i) {
    CHECK(evaluate(task, static_cast<int>(i)) == task.programs[i].pass);
    CHECK(evaluate(task, static_cast<int>(i)) == evaluate(task, static_cast<int>(i)));
  }
  CHECK_THROWS_AS(evaluate(task, -1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(task, static_cast<int>(task.programs.size())),
                  std::invalid_argument);
}

TEST_CASE("pass_rate") {
  CHECK(pass_rate({1, 1, 0, 1}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(pass_rate(PassVector(7, 1)) == 1.0);
  CHECK(pass_rate(PassVector(7, 0)) == 0.0);
  CHECK_THROWS_AS(pass_rate({}), std::invalid_argument);
}

TEST_CASE("pass rates of generated corpora stay on the 1/K grid") {
  for (const Corpus& corpus :
       {gen_easy_corpus(4, 6, 11), gen_conflict_corpus(4, 25, 0.84, 11)}) {
    for (const Task& task : corpus.tasks) {
      for (std::size_t i = 0; i < task.programs.size(); ++i) {
        const double r = pass_rate(evaluate(task, static_cast<int>(i)));
        const double scaled = r * task.test_count;
        CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
        CHECK((task.programs[i].mode == Mode::Full) == (r == 1.0));
      }
    }
  }
}

TEST_CASE("conflict corpus construction") {
  const Corpus corpus = gen_conflict_corpus(8, 25, 0.84, 123);
  CHECK(corpus.tasks.size() == 8);
  for (const Task& task : corpus.tasks) {
    double best_harmful = -1.0, best_helpful = -1.0;
    bool any_full = false;
    for (const Candidate& c : task.programs) {
      const double r = pass_rate(c.pass);
      if (c.mode == Mode::Harmful) best_harmful = std::max(best_harmful, r);
      if (c.mode == Mode::Helpful) best_helpful = std::max(best_helpful, r);
      if (c.mode == Mode::Full) any_full = true;
    }
    CHECK(any_full);
    CHECK(best_harmful == doctest::Approx(21.0 / 25.0).epsilon(1e-15));
    CHECK(best_harmful > best_helpful);
    CHECK(task.reference_ids.size() >= 2);
  }
}

TEST_CASE("conflict corpus rejects parameters that force a full pass") {
  // ceil(0.9 * 4) = 4 would be a full-pass "harmful" candidate.
  CHECK_THROWS_AS(gen_conflict_corpus(1, 4, 0.9, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_conflict_corpus(1, 4, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_conflict_corpus(1, 3, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_conflict_corpus(0, 4, 0.5, 1), std::invalid_argument);
}

TEST_CASE("generators are deterministic in the seed") {
  for (int variant = 0; variant < 2; ++variant) {
    const auto gen = [&](std::uint64_t seed) {
      return variant == 0 ? gen_easy_corpus(3, 5, seed)
                          : gen_conflict_corpus(3, 10, 0.7, seed);
    };
    std::ostringstream a, b, c;
    write_corpus(gen(99), a);
    write_corpus(gen(99), b);
    write_corpus(gen(100), c);
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
  }
}

TEST_CASE("easy corpus shape") {
  const Corpus corpus = gen_easy_corpus(1, 6, 5);
  CHECK(corpus.tasks.size() == 1);
  const Task& task = corpus.tasks[0];
  CHECK(task.programs.size() == 8);  // whole vocab^seq_len space
  CHECK(task.reference_ids.size() >= 2);
}

TEST_CASE("corpus serialization round-trips") {
  for (const Corpus& corpus :
       {gen_easy_corpus(5, 7, 42), gen_conflict_corpus(5, 25, 0.84, 42)}) {
    std::ostringstream out;
    write_corpus(corpus, out);
    std::istringstream in(out.str());
    const Corpus loaded = read_corpus(in);
    std::ostringstream again;
    write_corpus(loaded, again);
    CHECK(out.str() == again.str());
    CHECK(loaded.name == corpus.name);
    CHECK(loaded.seed == corpus.seed);
    CHECK(loaded.tasks.size() == corpus.tasks.size());
  }
}

TEST_CASE("task validation catches broken invariants") {
  Corpus corpus = gen_conflict_corpus(1, 6, 0.7, 3);
  Task task = corpus.tasks[0];

  Task bad = task;
  bad.programs[task.reference_ids[0]].pass[0] = 0;  // FULL no longer all-ones
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = task;
  bad.programs[2].tokens = bad.programs[3].tokens;  // duplicate sequences
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = task;
  bad.reference_ids = {task.reference_ids[0]};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
