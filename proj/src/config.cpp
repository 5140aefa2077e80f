#include "passlab/config.hpp"

#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace passlab {

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RawValue {
  std::string text;
  int line = 0;
};

// section -> key -> value, from the TOML-style subset: [section] headers,
// key = value pairs, # comments. Values: integers, floats, booleans,
// double-quoted strings.
using RawConfig = std::map<std::string, std::map<std::string, RawValue>>;

RawConfig parse_raw(std::istream& in, const std::string& path) {
  RawConfig raw;
  std::string section;  // "" = top level
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      raw[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key or value");
    if (raw[section].count(key))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    raw[section][key] = {value, lineno};
  }
  return raw;
}

std::string unquote(const RawValue& v, const std::string& path, const std::string& key) {
  const std::string& s = v.text;
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  // Bare words are accepted for enum-like values.
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
          c == '.' || c == '/'))
      throw ConfigError(path + ":" + std::to_string(v.line) + ": bad string for key '" +
                        key + "'");
  }
  return s;
}

// Pulls keys out of one section, failing closed on anything unknown.
class Section {
 public:
  Section(RawConfig& raw, std::string name, std::string path)
      : name_(std::move(name)), path_(std::move(path)) {
    auto it = raw.find(name_);
    if (it != raw.end()) {
      entries_ = it->second;
      raw.erase(it);
    }
  }

  ~Section() = default;

  void finish() const {
    for (const auto& [key, value] : entries_) {
      if (!used_.count(key))
        throw ConfigError(path_ + ":" + std::to_string(value.line) + ": unknown key '" +
                          key + "' in section [" + name_ + "]");
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    used_.insert(key);
    parse_into(it->second, key, out);
  }

 private:
  void parse_into(const RawValue& v, const std::string& key, std::string& out) {
    out = unquote(v, path_, key);
  }
  void parse_into(const RawValue& v, const std::string& key, bool& out) {
    if (v.text == "true")
      out = true;
    else if (v.text == "false")
      out = false;
    else
      throw ConfigError(path_ + ":" + std::to_string(v.line) + ": key '" + key +
                        "' must be true or false");
  }
  void parse_into(const RawValue& v, const std::string& key, double& out) {
    try {
      std::size_t used = 0;
      out = std::stod(v.text, &used);
      if (used != v.text.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError(path_ + ":" + std::to_string(v.line) + ": key '" + key +
                        "' must be a number");
    }
  }
  void parse_into(const RawValue& v, const std::string& key, int& out) {
    try {
      std::size_t used = 0;
      out = std::stoi(v.text, &used);
      if (used != v.text.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError(path_ + ":" + std::to_string(v.line) + ": key '" + key +
                        "' must be an integer");
    }
  }
  void parse_into(const RawValue& v, const std::string& key, std::uint64_t& out) {
    try {
      std::size_t used = 0;
      out = std::stoull(v.text, &used);
      if (used != v.text.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError(path_ + ":" + std::to_string(v.line) + ": key '" + key +
                        "' must be a nonnegative integer");
    }
  }

  std::string name_;
  std::string path_;
  std::map<std::string, RawValue> entries_;
  std::set<std::string> used_;
};

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RawConfig raw = parse_raw(in, path);

  ExperimentConfig cfg;

  Section top(raw, "", path);
  top.get("seed", cfg.seed);
  top.get("out_dir", cfg.out_dir);
  top.finish();

  Section corpus(raw, "corpus", path);
  corpus.get("kind", cfg.corpus.kind);
  corpus.get("path", cfg.corpus.path);
  corpus.get("n_tasks", cfg.corpus.n_tasks);
  corpus.get("tests", cfg.corpus.tests);
  corpus.get("harmful_pass_fraction", cfg.corpus.harmful_pass_fraction);
  corpus.get("correlation", cfg.corpus.correlation);
  corpus.finish();
  if (cfg.corpus.kind != "easy" && cfg.corpus.kind != "conflict" &&
      cfg.corpus.kind != "file")
    throw std::runtime_error(path + ": [corpus] kind must be easy, conflict, or file");
  if (cfg.corpus.kind == "file" && cfg.corpus.path.empty())
    throw std::runtime_error(path + ": [corpus] kind = file requires a path");

  std::string reward_kind = "binary";
  double weight_easy = 1.0, weight_medium = 2.0, weight_hard = 3.0;
  Section reward(raw, "reward", path);
  reward.get("kind", reward_kind);
  reward.get("switch_step", cfg.train.reward.switch_step);
  reward.get("weight_easy", weight_easy);
  reward.get("weight_medium", weight_medium);
  reward.get("weight_hard", weight_hard);
  reward.finish();
  cfg.train.reward.kind = reward_kind_from_name(reward_kind);
  if (cfg.train.reward.switch_step < 0)
    throw std::runtime_error(path + ": [reward] switch_step must be >= 0");
  if (weight_easy <= 0.0 || weight_medium <= 0.0 || weight_hard <= 0.0)
    throw std::runtime_error(path + ": [reward] weights must be positive");
  cfg.train.reward.weight_map = {{Difficulty::Easy, weight_easy},
                                 {Difficulty::Medium, weight_medium},
                                 {Difficulty::Hard, weight_hard}};

  std::string method = "grpo";
  Section train(raw, "train", path);
  train.get("steps", cfg.train.steps);
  train.get("batch_tasks", cfg.train.batch_tasks);
  train.get("group_size", cfg.train.group_size);
  train.get("learning_rate", cfg.train.learning_rate);
  train.get("method", method);
  train.get("snapshot_interval", cfg.train.snapshot_interval);
  train.finish();
  cfg.train.method = method_from_name(method);

  Section probe(raw, "probe", path);
  probe.get("eta", cfg.probe.eta);
  probe.get("condition", cfg.probe.condition);
  probe.get("length_normalize", cfg.probe.length_normalize);
  probe.get("group_size", cfg.probe.group_size);
  probe.get("boost", cfg.probe.boost);
  probe.get("method", cfg.probe.method);
  probe.finish();
  method_from_name(cfg.probe.method);
  if (cfg.probe.condition != "all") probe_condition_from_name(cfg.probe.condition);
  if (cfg.probe.eta <= 0.0)
    throw std::runtime_error(path + ": [probe] eta must be positive");

  Section report(raw, "report", path);
  report.get("snapshot_a", cfg.report.snapshot_a);
  report.get("snapshot_b", cfg.report.snapshot_b);
  report.get("samples", cfg.report.samples);
  report.finish();
  if (cfg.report.samples < 1)
    throw std::runtime_error(path + ": [report] samples must be >= 1");

  Section exec(raw, "exec", path);
  exec.get("problem_dir", cfg.exec.problem_dir);
  exec.get("multiplier", cfg.exec.multiplier);
  exec.get("t_min", cfg.exec.t_min);
  exec.get("t_max", cfg.exec.t_max);
  exec.get("memory_mb", cfg.exec.memory_mb);
  exec.finish();

  for (const auto& [section, entries] : raw) {
    if (entries.empty()) {
      throw std::runtime_error(path + ": unknown section [" + section + "]");
    }
    const auto& [key, value] = *entries.begin();
    throw std::runtime_error(path + ":" + std::to_string(value.line) +
                             ": unknown section [" + section + "]");
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

}  // namespace passlab
