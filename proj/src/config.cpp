#include "lvar/config.hpp"

#include "lvar/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>
#include <variant>

namespace lvar {

namespace {

using Field = std::variant<std::string RunConfig::*, std::vector<std::string> RunConfig::*, int RunConfig::*,
                           std::int64_t RunConfig::*, std::uint64_t RunConfig::*, double RunConfig::*,
                           bool RunConfig::*, std::vector<int> RunConfig::*,
                           std::vector<std::int64_t> RunConfig::*, std::vector<double> RunConfig::*>;

struct Key {
  std::string_view name;
  Field field;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table{
      {"input", &RunConfig::input},
      {"variables", &RunConfig::variables},
      {"transforms", &RunConfig::transforms},
      {"targets", &RunConfig::targets},
      {"segments", &RunConfig::segments},
      {"mode", &RunConfig::mode},
      {"lags", &RunConfig::lags},
      {"decay", &RunConfig::decay},
      {"lambda", &RunConfig::lambda},
      {"gamma", &RunConfig::gamma},
      {"eta", &RunConfig::eta},
      {"alpha", &RunConfig::alpha},
      {"refit", &RunConfig::refit},
      {"max_sweeps", &RunConfig::max_sweeps},
      {"tolerance", &RunConfig::tolerance},
      {"horizons", &RunConfig::horizons},
      {"t0", &RunConfig::t0},
      {"t1", &RunConfig::t1},
      {"window", &RunConfig::window},
      {"refit_every", &RunConfig::refit_every},
      {"refine_rounds", &RunConfig::refine_rounds},
      {"refine_factor", &RunConfig::refine_factor},
      {"objective", &RunConfig::objective},
      {"experiment", &RunConfig::experiment},
      {"sim_variables", &RunConfig::sim_variables},
      {"sim_lags", &RunConfig::sim_lags},
      {"p0", &RunConfig::p0},
      {"q0", &RunConfig::q0},
      {"min_magnitude", &RunConfig::min_magnitude},
      {"max_magnitude", &RunConfig::max_magnitude},
      {"sigma", &RunConfig::sigma},
      {"rows", &RunConfig::rows},
      {"trials", &RunConfig::trials},
      {"sample_sizes", &RunConfig::sample_sizes},
      {"schedule", &RunConfig::schedule},
      {"epsilon", &RunConfig::epsilon},
      {"on_scale", &RunConfig::on_scale},
      {"off_scale", &RunConfig::off_scale},
      {"adaptive_scale", &RunConfig::adaptive_scale},
      {"adaptive_power", &RunConfig::adaptive_power},
      {"ma_orders", &RunConfig::ma_orders},
      {"ar_phi", &RunConfig::ar_phi},
      {"dep_lags", &RunConfig::dep_lags},
      {"sparsity", &RunConfig::sparsity},
      {"magnitude", &RunConfig::magnitude},
      {"delta", &RunConfig::delta},
      {"tail_q", &RunConfig::tail_q},
      {"pilot_trials", &RunConfig::pilot_trials},
      {"kappa_budget", &RunConfig::kappa_budget},
      {"output", &RunConfig::output},
      {"seed", &RunConfig::seed},
      {"threads", &RunConfig::threads},
  };
  return table;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  if (trim(s).empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <typename T>
T parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("expected a number, got '" + std::string(text) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("non-finite number '" + std::string(text) + "'");
  }
  return value;
}

template <typename T>
T parse_scalar(std::string_view text) {
  if constexpr (std::is_same_v<T, std::string>) {
    return std::string(text);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("expected true or false, got '" + std::string(text) + "'");
  } else {
    return parse_number<T>(text);
  }
}

template <typename T>
std::string format_scalar(const T& value) {
  if constexpr (std::is_same_v<T, std::string>) {
    return value;
  } else if constexpr (std::is_same_v<T, bool>) {
    return value ? "true" : "false";
  } else {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
  }
}

template <typename T>
struct IsVector : std::false_type {};
template <typename T>
struct IsVector<std::vector<T>> : std::true_type {};

void assign(RunConfig& config, const Field& field, std::string_view value) {
  std::visit(
      [&](auto member) {
        using T = std::remove_cvref_t<decltype(config.*member)>;
        if constexpr (IsVector<T>::value) {
          T out;
          for (auto part : split(value, ',')) {
            if (part.empty()) throw ConfigError("empty list element");
            out.push_back(parse_scalar<typename T::value_type>(part));
          }
          config.*member = std::move(out);
        } else {
          config.*member = parse_scalar<T>(value);
        }
      },
      field);
}

std::string render(const RunConfig& config, const Field& field) {
  return std::visit(
      [&](auto member) {
        using T = std::remove_cvref_t<decltype(config.*member)>;
        if constexpr (IsVector<T>::value) {
          std::string out;
          for (std::size_t i = 0; i < (config.*member).size(); ++i) {
            if (i > 0) out += ", ";
            out += format_scalar((config.*member)[i]);
          }
          return out;
        } else {
          return format_scalar(config.*member);
        }
      },
      field);
}

template <typename T>
void require_positive(const std::vector<T>& values, std::string_view key) {
  if (values.empty()) throw ConfigError(std::string(key) + " must not be empty");
  for (T v : values) {
    if (!(v >= T{1})) throw ConfigError(std::string(key) + " entries must be >= 1");
  }
}

}  // namespace

void RunConfig::validate() const {
  parse_grouping_mode(mode);
  parse_decay_kind(decay);
  parse_grid_objective(objective);
  parse_schedule_kind(schedule);
  for (const auto& code : transforms) parse_transform_code(code);
  if (experiment != "recovery" && experiment != "dependence" && experiment != "panel") {
    throw ConfigError("experiment must be recovery, dependence or panel, got '" + experiment + "'");
  }
  require_positive(lags, "lags");
  require_positive(horizons, "horizons");
  require_positive(sample_sizes, "sample_sizes");
  HyperGrid grid{lambda, gamma, eta, alpha, refine_rounds, refine_factor};
  grid.validate();
  if (max_sweeps < 1 || !(tolerance > 0.0)) throw ConfigError("max_sweeps and tolerance must be positive");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (refit_every < 1) throw ConfigError("refit_every must be >= 1");
  if (t0 < 0 || t1 < 0 || window < 0) throw ConfigError("t0, t1 and window must be >= 0");
  if (trials < 1 || rows < 1) throw ConfigError("trials and rows must be >= 1");
  if (sim_variables < 1 || sim_lags < 1 || p0 < 0 || q0 < 0) {
    throw ConfigError("sim_variables, sim_lags must be >= 1 and p0, q0 >= 0");
  }
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  for (int k : ma_orders) {
    if (k < 0) throw ConfigError("ma_orders must be >= 0");
  }
  PenaltySchedule{parse_schedule_kind(schedule), epsilon, on_scale, off_scale, adaptive_scale, adaptive_power}
      .validate();
  if (output.empty()) throw ConfigError("output directory must not be empty");
}

RunConfig parse_config(std::string_view text, std::string_view source) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) { return k.name == key; });
    if (it == keys().end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    try {
      assign(config, it->field, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& key : keys()) {
    out += key.name;
    out += " = ";
    out += render(config, key.field);
    out += '\n';
  }
  return out;
}

std::vector<Index> resolve_variables(const std::vector<std::string>& names, const Panel& panel,
                                     std::string_view source) {
  std::vector<Index> out;
  for (const auto& name : names) {
    const auto idx = panel.find(name);
    if (!idx) throw DataError("variable '" + name + "' not found in the header of " + std::string(source));
    out.push_back(*idx);
  }
  return out;
}

std::vector<std::vector<Index>> resolve_segments(const RunConfig& config, const Panel& panel) {
  std::vector<std::vector<Index>> out;
  if (config.segments.empty()) {
    for (Index j = 0; j < panel.cols(); ++j) out.push_back({j});
    return out;
  }
  for (const auto& segment : config.segments) {
    std::vector<std::string> members;
    for (auto part : split(segment, '+')) members.emplace_back(part);
    out.push_back(resolve_variables(members, panel, config.input));
  }
  return out;
}

SolverConfig solver_config(const RunConfig& config) {
  SolverConfig solver;
  solver.max_sweeps = config.max_sweeps;
  solver.tolerance = config.tolerance;
  return solver;
}

RecoveryParams recovery_params(const RunConfig& config) {
  RecoveryParams params;
  params.var.num_variables = config.sim_variables;
  params.var.lags = config.sim_lags;
  params.var.p0 = static_cast<std::size_t>(config.p0);
  params.var.q0 = static_cast<std::size_t>(config.q0);
  params.var.min_magnitude = config.min_magnitude;
  params.var.max_magnitude = config.max_magnitude;
  params.var.sigma = config.sigma;
  // sigma scales the studied equation; the other equations keep unit noise.
  params.var.innovation_scale.assign(static_cast<std::size_t>(config.sim_variables), 1.0);
  params.var.innovation_scale[0] = config.sigma;
  params.var.seed = config.seed;
  params.sample_sizes.assign(config.sample_sizes.begin(), config.sample_sizes.end());
  params.trials = config.trials;
  params.schedule = {parse_schedule_kind(config.schedule), config.epsilon, config.on_scale, config.off_scale,
                     config.adaptive_scale, config.adaptive_power};
  params.threads = config.threads;
  params.solver = solver_config(config);
  return params;
}

DependenceParams dependence_params(const RunConfig& config) {
  DependenceParams params;
  for (int k : config.ma_orders) params.designs.push_back({DependenceKind::kMovingAverage, k, 0.5});
  for (double phi : config.ar_phi) params.designs.push_back({DependenceKind::kAutoregressive, 0, phi});
  params.rows = config.rows;
  params.lags = config.dep_lags;
  params.sparsity = config.sparsity;
  params.magnitude = config.magnitude;
  params.sigma = config.sigma;
  params.delta = config.delta;
  params.tail_q = config.tail_q;
  params.trials = config.trials;
  params.pilot_trials = config.pilot_trials;
  params.kappa_budget = config.kappa_budget;
  params.seed = config.seed;
  params.threads = config.threads;
  params.solver = solver_config(config);
  return params;
}

}  // namespace lvar
