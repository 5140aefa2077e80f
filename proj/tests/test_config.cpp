#include <stdexcept>
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "passlab/config.hpp"

using namespace passlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const TempDir& dir, const std::string& text,
                      const std::string& name = "exp.toml") {
  const fs::path p = dir.path / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PASSLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("defaults survive an empty config") {
  TempDir dir("passlab_config_empty");
  const ExperimentConfig cfg = load_config(write_config(dir, "").string());
  CHECK(cfg.seed == 0);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.corpus.kind == "easy");
  CHECK(cfg.corpus.n_tasks == 8);
  CHECK(cfg.train.steps == 768);
  CHECK(cfg.train.batch_tasks == 64);
  CHECK(cfg.train.group_size == 16);
  CHECK(cfg.train.reward.kind == RewardKind::Binary);
  CHECK(cfg.train.method == Method::Grpo);
  CHECK(cfg.probe.eta == 1e-4);
  CHECK(cfg.probe.condition == "all");
  CHECK(cfg.report.samples == 16);
  CHECK(cfg.exec.multiplier == 3.0);
  CHECK(cfg.exec.t_min == 10.0);
  CHECK(cfg.exec.t_max == 30.0);
}

TEST_CASE("a full config parses into every section") {
  TempDir dir("passlab_config_full");
  const std::string text =
      "seed = 99\n"
      "out_dir = \"results\"\n"
      "\n"
      "[corpus]\n"
      "kind = conflict          # comments are ignored\n"
      "n_tasks = 12\n"
      "tests = 25\n"
      "harmful_pass_fraction = 0.84\n"
      "\n"
      "[reward]\n"
      "kind = two_stage\n"
      "switch_step = 256\n"
      "weight_easy = 1.5\n"
      "\n"
      "[train]\n"
      "steps = 768\n"
      "batch_tasks = 64\n"
      "group_size = 16\n"
      "learning_rate = 0.1\n"
      "method = rloo\n"
      "snapshot_interval = 128\n"
      "\n"
      "[probe]\n"
      "eta = 0.001\n"
      "condition = pass_rate_without_full\n"
      "length_normalize = false\n"
      "boost = 4.0\n"
      "\n"
      "[report]\n"
      "snapshot_a = \"a.json\"\n"
      "snapshot_b = \"b.json\"\n"
      "samples = 32\n"
      "\n"
      "[exec]\n"
      "problem_dir = \"problems/p1\"\n"
      "t_min = 5\n"
      "t_max = 20\n"
      "memory_mb = 256\n";
  const ExperimentConfig cfg = load_config(write_config(dir, text).string());
  CHECK(cfg.seed == 99);
  CHECK(cfg.out_dir == "results");
  CHECK(cfg.corpus.kind == "conflict");
  CHECK(cfg.corpus.n_tasks == 12);
  CHECK(cfg.corpus.tests == 25);
  CHECK(cfg.train.reward.kind == RewardKind::TwoStage);
  CHECK(cfg.train.reward.switch_step == 256);
  CHECK(cfg.train.reward.weight_map.at(Difficulty::Easy) == 1.5);
  CHECK(cfg.train.reward.weight_map.at(Difficulty::Medium) == 2.0);
  CHECK(cfg.train.method == Method::Rloo);
  CHECK(cfg.train.snapshot_interval == 128);
  CHECK(cfg.train.seed == 99);  // top-level seed flows into training
  CHECK(cfg.probe.eta == 0.001);
  CHECK(cfg.probe.condition == "pass_rate_without_full");
  CHECK(cfg.probe.length_normalize == false);
  CHECK(cfg.probe.boost == 4.0);
  CHECK(cfg.report.snapshot_a == "a.json");
  CHECK(cfg.report.samples == 32);
  CHECK(cfg.exec.problem_dir == "problems/p1");
  CHECK(cfg.exec.t_min == 5.0);
  CHECK(cfg.exec.memory_mb == 256);
}

namespace {

void expect_error(const fs::path& path, const std::string& needle) {
  try {
    load_config(path.string());
    FAIL("expected a config error for: " << needle);
  } catch (const std::exception& e) {
    const std::string what = e.what();
    CHECK_MESSAGE(what.find(needle) != std::string::npos,
                  "missing '" << needle << "' in: " << what);
  }
}

}  // namespace

TEST_CASE("unknown keys are rejected with their location") {
  TempDir dir("passlab_config_unknown");
  expect_error(write_config(dir, "[train]\nsteps = 1\nlr = 0.1\n"),
               "unknown key 'lr' in section [train]");
  expect_error(write_config(dir, "sed = 1\n", "b.toml"), "unknown key 'sed'");
  expect_error(write_config(dir, "[trian]\nsteps = 1\n", "c.toml"),
               "unknown section [trian]");
}

TEST_CASE("parse errors carry the line number") {
  TempDir dir("passlab_config_parse");
  expect_error(write_config(dir, "[corpus]\nn_tasks = 4\nbroken line\n"), ":3");
  expect_error(write_config(dir, "seed = 1\nseed = 2\n", "b.toml"), "duplicate key 'seed'");
  expect_error(write_config(dir, "[corpus\nkind = easy\n", "c.toml"),
               "malformed section header");
  expect_error(write_config(dir, "[train]\nsteps = lots\n", "d.toml"),
               "must be an integer");
  expect_error(write_config(dir, "[probe]\nlength_normalize = yes\n", "e.toml"),
               "must be true or false");
}

TEST_CASE("semantic validation") {
  TempDir dir("passlab_config_semantic");
  expect_error(write_config(dir, "[corpus]\nkind = weird\n"), "kind must be");
  expect_error(write_config(dir, "[corpus]\nkind = file\n", "b.toml"), "requires a path");
  expect_error(write_config(dir, "[reward]\nkind = fancy\n", "c.toml"), "fancy");
  expect_error(write_config(dir, "[reward]\nweight_easy = 0\n", "d.toml"),
               "weights must be positive");
  expect_error(write_config(dir, "[probe]\neta = 0\n", "e.toml"), "eta must be positive");
  expect_error(write_config(dir, "[probe]\ncondition = sometimes\n", "f.toml"),
               "sometimes");
  expect_error(write_config(dir, "[report]\nsamples = 0\n", "g.toml"), "samples");
  expect_error(write_config(dir, "[train]\nmethod = ppo\n", "h.toml"), "ppo");
  CHECK_THROWS_AS(load_config((dir.path / "missing.toml").string()), std::runtime_error);
}

TEST_CASE("cli rejects bad invocations") {
  TempDir dir("passlab_config_cli_bad");
  const fs::path cfg = write_config(dir, "[corpus]\nkind = weird\n");
  CHECK(run_cli("--config " + cfg.string() + " gen") == 1);
  CHECK(run_cli("--config " + (dir.path / "missing.toml").string() + " gen") == 1);
  CHECK(run_cli("gen") != 0);  // --config is required
  CHECK(run_cli("--config " + cfg.string()) != 0);  // a subcommand is required
}

TEST_CASE("cli gen is deterministic and honours overrides") {
  TempDir dir("passlab_config_cli_gen");
  const fs::path cfg = write_config(dir,
                                    "seed = 5\n[corpus]\nkind = easy\nn_tasks = 3\n"
                                    "tests = 4\n");
  const fs::path out1 = dir.path / "out1";
  const fs::path out2 = dir.path / "out2";
  const fs::path out3 = dir.path / "out3";
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + out1.string() + " gen") == 0);
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + out2.string() + " gen") == 0);
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + out3.string() +
                  " --seed 6 gen") == 0);

  const std::string a = read_file(out1 / "corpus.jsonl");
  const std::string b = read_file(out2 / "corpus.jsonl");
  const std::string c = read_file(out3 / "corpus.jsonl");
  CHECK(!a.empty());
  CHECK(a == b);
  CHECK(a != c);
  CHECK(!fs::exists(out1 / "corpus.jsonl.tmp"));
}
