#include "passlab/harness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "passlab/reward.hpp"

namespace passlab {

namespace fs = std::filesystem;

void TimeoutPolicy::validate() const {
  if (multiplier <= 0.0) throw std::invalid_argument("timeout multiplier must be positive");
  if (t_min <= 0.0 || t_min > t_max)
    throw std::invalid_argument("timeout bounds require 0 < t_min <= t_max");
  if (canonical_runtime && *canonical_runtime < 0.0)
    throw std::invalid_argument("canonical runtime must be >= 0");
}

double adaptive_timeout(const TimeoutPolicy& policy) {
  policy.validate();
  if (!policy.canonical_runtime) return policy.t_min;
  return std::clamp(policy.multiplier * *policy.canonical_runtime, policy.t_min,
                    policy.t_max);
}

const char* outcome_name(TestOutcome o) {
  switch (o) {
    case TestOutcome::Pass: return "PASS";
    case TestOutcome::WrongOutput: return "WRONG_OUTPUT";
    case TestOutcome::Timeout: return "TIMEOUT";
    case TestOutcome::RuntimeError: return "RUNTIME_ERROR";
  }
  return "RUNTIME_ERROR";
}

PassVector ExecResult::pass_vector() const {
  PassVector pv;
  pv.reserve(outcomes.size());
  for (TestOutcome o : outcomes) pv.push_back(o == TestOutcome::Pass ? 1 : 0);
  return pv;
}

bool outputs_match(const std::string& expected, const std::string& actual) {
  auto normalize = [](const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
      while (!line.empty() &&
             (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
        line.pop_back();
      lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
  };
  return normalize(expected) == normalize(actual);
}

namespace {

struct RunOutcome {
  bool timed_out = false;
  bool spawn_failed = false;
  int exit_status = 0;  // waitpid status
  std::string output;
  double wall_seconds = 0.0;
};

RunOutcome run_one(const std::vector<std::string>& argv, const std::string& input,
                   double timeout_seconds, std::size_t memory_limit_bytes) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw std::runtime_error("pipe() failed: " + std::string(std::strerror(errno)));

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork() failed: " + std::string(std::strerror(errno)));

  if (pid == 0) {
    // Child: stdin/stdout from pipes, stderr discarded, memory capped.
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    const int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, STDERR_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    if (memory_limit_bytes > 0) {
      rlimit lim{memory_limit_bytes, memory_limit_bytes};
      setrlimit(RLIMIT_AS, &lim);
    }
    std::vector<char*> args;
    for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }

  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
  fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
  signal(SIGPIPE, SIG_IGN);

  RunOutcome result;
  std::size_t written = 0;
  bool stdin_open = true, stdout_open = true;
  bool exited = false;
  const auto deadline = start + std::chrono::duration<double>(timeout_seconds);
  char buf[8192];

  while (true) {
    if (!exited) {
      int status = 0;
      const pid_t r = waitpid(pid, &status, WNOHANG);
      if (r == pid) {
        exited = true;
        result.exit_status = status;
      }
    }
    // Drain output and feed input without blocking on either pipe.
    pollfd fds[2];
    nfds_t nfds = 0;
    int out_slot = -1, in_slot = -1;
    if (stdout_open) {
      out_slot = nfds;
      fds[nfds++] = {out_pipe[0], POLLIN, 0};
    }
    if (stdin_open && written < input.size()) {
      in_slot = nfds;
      fds[nfds++] = {in_pipe[1], POLLOUT, 0};
    } else if (stdin_open) {
      close(in_pipe[1]);
      stdin_open = false;
    }
    if (nfds > 0) poll(fds, nfds, 20);

    if (out_slot >= 0 && (fds[out_slot].revents & (POLLIN | POLLHUP))) {
      while (true) {
        const ssize_t n = read(out_pipe[0], buf, sizeof(buf));
        if (n > 0) {
          result.output.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
          close(out_pipe[0]);
          stdout_open = false;
          break;
        } else {
          break;  // EAGAIN or transient error
        }
      }
    }
    if (in_slot >= 0 && (fds[in_slot].revents & (POLLOUT | POLLERR))) {
      const ssize_t n =
          write(in_pipe[1], input.data() + written, input.size() - written);
      if (n > 0) {
        written += static_cast<std::size_t>(n);
      } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
        close(in_pipe[1]);  // child closed its stdin
        stdin_open = false;
      }
    }

    if (exited && !stdout_open) break;
    if (exited && stdout_open) continue;  // finish draining the pipe

    if (std::chrono::steady_clock::now() >= deadline) {
      kill(pid, SIGKILL);
      int status = 0;
      waitpid(pid, &status, 0);
      result.timed_out = true;
      result.exit_status = status;
      break;
    }
  }

  if (stdin_open) close(in_pipe[1]);
  if (stdout_open) close(out_pipe[0]);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!result.timed_out && WIFEXITED(result.exit_status) &&
      WEXITSTATUS(result.exit_status) == 127)
    result.spawn_failed = true;
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ProgramSpec spec_for_file(const fs::path& program) {
  if (program.extension() == ".py")
    return ProgramSpec{{"python3", program.string()}};
  return ProgramSpec{{program.string()}};
}

}  // namespace

ExecResult run_program(const ProgramSpec& program, const std::vector<TestCase>& tests,
                       const TimeoutPolicy& policy, std::size_t memory_limit_bytes) {
  if (tests.empty()) throw std::invalid_argument("test list is empty");
  if (program.argv.empty()) throw std::invalid_argument("program command is empty");
  const double timeout = adaptive_timeout(policy);

  ExecResult result;
  for (const TestCase& test : tests) {
    const RunOutcome run = run_one(program.argv, test.input, timeout, memory_limit_bytes);
    result.wall_seconds.push_back(run.wall_seconds);
    if (run.spawn_failed)
      throw std::runtime_error("cannot execute program: " + program.argv[0]);
    if (run.timed_out) {
      result.outcomes.push_back(TestOutcome::Timeout);
    } else if (!WIFEXITED(run.exit_status) || WEXITSTATUS(run.exit_status) != 0) {
      result.outcomes.push_back(TestOutcome::RuntimeError);
    } else if (outputs_match(test.expected_output, run.output)) {
      result.outcomes.push_back(TestOutcome::Pass);
    } else {
      result.outcomes.push_back(TestOutcome::WrongOutput);
    }
  }
  return result;
}

SuiteReport eval_suite(const std::string& problem_dir, TimeoutPolicy policy,
                       int workers, std::size_t memory_limit_bytes) {
  if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
  const fs::path root(problem_dir);
  const fs::path tests_dir = root / "tests";
  const fs::path candidates_dir = root / "candidates";
  if (!fs::is_directory(tests_dir))
    throw std::runtime_error("problem layout error: missing directory " +
                             tests_dir.string());
  if (!fs::is_directory(candidates_dir))
    throw std::runtime_error("problem layout error: missing directory " +
                             candidates_dir.string());

  // Sorted NN.in defines the test order; each needs a matching NN.out.
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(tests_dir)) {
    if (entry.path().extension() == ".in") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty())
    throw std::runtime_error("problem layout error: no *.in files under " +
                             tests_dir.string());
  std::vector<TestCase> tests;
  for (const fs::path& in_path : inputs) {
    fs::path out_path = in_path;
    out_path.replace_extension(".out");
    if (!fs::exists(out_path))
      throw std::runtime_error("problem layout error: missing expected output " +
                               out_path.string());
    tests.push_back({read_file(in_path), read_file(out_path)});
  }

  std::vector<fs::path> candidates;
  for (const auto& entry : fs::directory_iterator(candidates_dir))
    if (entry.is_regular_file()) candidates.push_back(entry.path());
  std::sort(candidates.begin(), candidates.end());
  if (candidates.empty())
    throw std::runtime_error("problem layout error: no candidates under " +
                             candidates_dir.string());

  // Optional canonical program sets the adaptive timeout: median of 3 full
  // runs, each scored by its slowest test.
  SuiteReport report;
  fs::path canonical;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() &&
        entry.path().filename().string().rfind("canonical", 0) == 0)
      canonical = entry.path();
  }
  if (!canonical.empty()) {
    TimeoutPolicy timing = policy;
    timing.canonical_runtime.reset();
    timing.t_min = policy.t_max;  // generous cap while timing
    std::vector<double> reps;
    for (int rep = 0; rep < 3; ++rep) {
      const ExecResult r =
          run_program(spec_for_file(canonical), tests, timing, memory_limit_bytes);
      reps.push_back(*std::max_element(r.wall_seconds.begin(), r.wall_seconds.end()));
    }
    std::sort(reps.begin(), reps.end());
    policy.canonical_runtime = reps[1];
    report.canonical_runtime = reps[1];
  }
  report.timeout_seconds = adaptive_timeout(policy);

  report.candidates.resize(candidates.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= candidates.size()) return;
      try {
        CandidateResult cand;
        cand.name = candidates[i].filename().string();
        cand.exec =
            run_program(spec_for_file(candidates[i]), tests, policy, memory_limit_bytes);
        const PassVector pv = cand.exec.pass_vector();
        cand.binary = binary_reward(pv);
        cand.pass_rate = pass_rate_reward(pv);
        report.candidates[i] = std::move(cand);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min<std::size_t>(workers, candidates.size());
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return report;
}

}  // namespace passlab
