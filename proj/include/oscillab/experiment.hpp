#pragma once

// Config-driven experiment runner. A config is either key=value lines (# starts a
// comment, lists are comma separated) or a JSON object with the same keys.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oscillab {

enum class ExperimentKind {
  identity_k1,
  orthogonality,
  bilinear,
  bilinear_derivative,
  bernstein,
  energy_increment,
  norm_growth,
  conservation,
};

struct ExperimentInfo {
  ExperimentKind kind;
  const char* name;
  const char* summary;
  const char* columns;
};

const std::vector<ExperimentInfo>& experiment_catalog();
const ExperimentInfo& experiment_info(ExperimentKind kind);

/// Raised by parse_config; `key` names the offending key ("" for syntax errors).
struct ConfigError : std::runtime_error {
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key(std::move(key)) {}
  std::string key;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::identity_k1;
  std::uint64_t seed = 0;
  int d = 1;
  int K = 16;
  double s = 1.5;
  std::vector<long long> N_list;
  std::vector<long long> M_list;
  double dt = 1e-3;
  double T = 1.0;
  int trials = 1;
  std::string output_dir = "out";

  // experiment-specific
  double N = 4.0;  // I-operator cutoff (conservation)
  double amplitude = 1.0;
  double decay = 4.0;
  int max_level = 8;
  double nonlinearity = 1.0;
  int record_every = 1;
  std::string scheme = "strang";
  double taint_threshold = 1e-8;
  double C0 = 4.0;
  std::vector<long long> partners;  // mu^2 of e2..e4
  std::string word_a;
  std::string word_b;
  std::vector<std::string> words;
  double prune_tol = 1e-16;

  /// Input text exactly as read.
  std::string source_text;
  /// Keys given explicitly in the input.
  std::vector<std::string> given_keys;
};

ExperimentConfig parse_config(std::string_view text);

struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

/// Runs the experiment, writes results.csv and manifest.json, and returns the exit
/// code: 0 ok, 2 tainted. Errors propagate as exceptions (exit code 1 for callers).
int run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace oscillab
