#pragma once

#include "lvar/estimators.hpp"
#include "lvar/forecast.hpp"
#include "lvar/simulation.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lvar {

/// Flat `key = value` run configuration. Lists are comma separated, `#`
/// starts a comment, and segments are written as `a+b, c` (members joined
/// by `+`, segments separated by commas).
struct RunConfig {
  // Data
  std::string input;
  std::vector<std::string> variables;   // columns to use (all when empty)
  std::vector<std::string> transforms;  // one code per variable, or one for all
  std::vector<std::string> targets;     // variables fitted/scored (all when empty)
  std::vector<std::string> segments;

  // Estimator
  std::string mode = "no_grouping";
  std::vector<int> lags{1};
  std::string decay = "power";
  std::vector<double> lambda{0.1};
  std::vector<double> gamma{0.0};
  std::vector<double> eta{0.0};
  std::vector<double> alpha{1.0};
  bool refit = true;
  int max_sweeps = 10000;
  double tolerance = 1e-7;

  // Evaluation
  std::vector<int> horizons{1};
  std::int64_t t0 = 0;
  std::int64_t t1 = 0;
  std::int64_t window = 0;
  int refit_every = 1;
  int refine_rounds = 1;
  int refine_factor = 3;
  std::string objective = "per_variable";

  // Simulation
  std::string experiment = "recovery";
  int sim_variables = 10;
  int sim_lags = 2;
  int p0 = 2;
  int q0 = 1;
  double min_magnitude = 0.3;
  double max_magnitude = 0.5;
  double sigma = 1.0;
  std::int64_t rows = 500;
  int trials = 100;
  std::vector<std::int64_t> sample_sizes{200, 2000};
  std::string schedule = "oracle";
  double epsilon = 0.25;
  double on_scale = 1.0;
  double off_scale = 2.0;
  double adaptive_scale = 3.0;
  double adaptive_power = 0.75;
  std::vector<int> ma_orders{0, 2, 8};
  std::vector<double> ar_phi;
  int dep_lags = 50;
  int sparsity = 3;
  double magnitude = 2.0;
  double delta = 0.5;
  double tail_q = 0.05;
  int pilot_trials = 100;
  int kappa_budget = 100000;

  // Run
  std::string output = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  bool operator==(const RunConfig&) const = default;

  // Checks ranges and enumerations. Throws ConfigError.
  void validate() const;
};

/// Parses config text; `source` prefixes error messages (`source:line: ...`).
RunConfig parse_config(std::string_view text, std::string_view source = "config");
RunConfig load_config(const std::string& path);
/// Writes every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Resolves variable names against a panel's header. Throws DataError naming
/// the missing variable.
std::vector<Index> resolve_variables(const std::vector<std::string>& names, const Panel& panel,
                                     std::string_view source);
/// Segments as index lists; empty config gives one segment per variable.
std::vector<std::vector<Index>> resolve_segments(const RunConfig& config, const Panel& panel);

/// Recovery and dependence parameters from the simulation keys.
RecoveryParams recovery_params(const RunConfig& config);
DependenceParams dependence_params(const RunConfig& config);
SolverConfig solver_config(const RunConfig& config);

}  // namespace lvar
