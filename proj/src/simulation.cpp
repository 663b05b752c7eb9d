#include "lvar/simulation.hpp"

#include "lvar/errors.hpp"
#include "lvar/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace lvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

// Linear interpolation between order statistics.
double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::size_t> choose(std::size_t population, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, population - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

double companion_spectral_radius(const CoefTensor& coef) {
  const Index num_vars = coef.num_variables();
  const Index dim = num_vars * coef.lags();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(dim, dim);
  for (int p = 1; p <= coef.lags(); ++p) {
    companion.block(0, (p - 1) * num_vars, num_vars, num_vars) = coef.lag_matrix(p).transpose();
  }
  if (coef.lags() > 1) companion.block(num_vars, 0, dim - num_vars, dim - num_vars).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd simulate_var(const CoefTensor& coef, const Eigen::VectorXd& scale, Index rows, Index burn_in,
                             std::mt19937_64& rng) {
  const Index num_vars = coef.num_variables();
  const int lags = coef.lags();
  if (scale.size() != num_vars) throw DataError("innovation scale needs one entry per variable");
  if (rows < 1 || burn_in < 0) throw ConfigError("simulation needs rows >= 1 and burn_in >= 0");
  std::normal_distribution<double> normal;
  const Index total = rows + burn_in + lags;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(total, num_vars);
  Eigen::RowVectorXd x(num_vars * lags);
  for (Index t = lags; t < total; ++t) {
    for (int p = 1; p <= lags; ++p) x.segment((p - 1) * num_vars, num_vars) = y.row(t - p);
    y.row(t) = x * coef.matrix();
    for (Index j = 0; j < num_vars; ++j) y(t, j) += scale(j) * normal(rng);
  }
  return y.bottomRows(rows);
}

void SparseVarParams::validate() const {
  if (num_variables < 1 || lags < 1) throw ConfigError("simulation needs J >= 1 and P >= 1");
  const auto others = static_cast<std::size_t>(lags) * static_cast<std::size_t>(num_variables - 1);
  if (p0 > others) {
    throw ConfigError("p0 = " + std::to_string(p0) + " exceeds the " + std::to_string(others) +
                      " off-diagonal coefficients per column");
  }
  if (q0 > static_cast<std::size_t>(lags)) {
    throw ConfigError("q0 = " + std::to_string(q0) + " exceeds the " + std::to_string(lags) +
                      " own-lag coefficients per column");
  }
  if (!(min_magnitude > 0.0) || !(max_magnitude >= min_magnitude) || !std::isfinite(max_magnitude)) {
    throw ConfigError("coefficient magnitudes need 0 < min <= max");
  }
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (!innovation_scale.empty()) {
    if (static_cast<Index>(innovation_scale.size()) != num_variables) {
      throw ConfigError("innovation_scale needs one entry per variable");
    }
    for (double s : innovation_scale) {
      if (!(s >= 0.0)) throw ConfigError("innovation scales must be >= 0");
    }
  }
  if (rows < 1) throw ConfigError("simulation needs rows >= 1");
  if (!(max_radius > 0.0 && max_radius < 1.0)) throw ConfigError("max_radius must lie in (0, 1)");
  if (max_tries < 1) throw ConfigError("max_tries must be >= 1");
}

SparseVarTruth draw_sparse_truth(const SparseVarParams& params, std::mt19937_64& rng) {
  params.validate();
  const Index num_vars = params.num_variables;
  const int lags = params.lags;
  std::uniform_real_distribution<double> magnitude(params.min_magnitude, params.max_magnitude);
  std::bernoulli_distribution negative(0.5);
  double last_radius = 0.0;
  for (int attempt = 0; attempt < params.max_tries; ++attempt) {
    CoefTensor coef(lags, num_vars);
    for (Index to = 0; to < num_vars; ++to) {
      // Off-diagonal slots enumerate (lag, from != to).
      const auto others = choose(static_cast<std::size_t>(lags * (num_vars - 1)), params.p0, rng);
      for (std::size_t slot : others) {
        const int lag = static_cast<int>(slot / static_cast<std::size_t>(num_vars - 1)) + 1;
        auto from = static_cast<Index>(slot % static_cast<std::size_t>(num_vars - 1));
        if (from >= to) ++from;
        coef(lag, from, to) = (negative(rng) ? -1.0 : 1.0) * magnitude(rng);
      }
      const auto own = choose(static_cast<std::size_t>(lags), params.q0, rng);
      for (std::size_t slot : own) {
        coef(static_cast<int>(slot) + 1, to, to) = (negative(rng) ? -1.0 : 1.0) * magnitude(rng);
      }
    }
    last_radius = companion_spectral_radius(coef);
    if (last_radius < params.max_radius) {
      SparseVarTruth truth;
      std::vector<Index> cols(static_cast<std::size_t>(num_vars));
      std::iota(cols.begin(), cols.end(), Index{0});
      truth.support = support_of(coef, cols);
      truth.coef = std::move(coef);
      truth.sigma = params.sigma;
      truth.p0 = params.p0;
      truth.q0 = params.q0;
      truth.spectral_radius = last_radius;
      return truth;
    }
  }
  throw DataError("no stationary draw in " + std::to_string(params.max_tries) +
                  " attempts (last spectral radius " + std::to_string(last_radius) +
                  "); try smaller coefficient magnitudes or fewer nonzeros");
}

SimulatedVar generate_sparse_var(const SparseVarParams& params) {
  auto rng = make_rng(params.seed, 0);
  SimulatedVar out;
  out.truth = draw_sparse_truth(params, rng);
  Eigen::VectorXd scale = Eigen::VectorXd::Constant(params.num_variables, params.sigma);
  if (!params.innovation_scale.empty()) {
    scale = Eigen::Map<const Eigen::VectorXd>(params.innovation_scale.data(), params.num_variables);
  }
  const Index burn_in = 5 * params.lags * params.num_variables;
  std::vector<std::string> names;
  for (Index j = 0; j < params.num_variables; ++j) names.push_back("y" + std::to_string(j + 1));
  out.panel = make_panel(simulate_var(out.truth.coef, scale, params.rows, burn_in, rng), std::move(names));
  return out;
}

ScheduleKind parse_schedule_kind(std::string_view text) {
  if (text == "oracle") return ScheduleKind::kOracle;
  if (text == "adaptive") return ScheduleKind::kAdaptive;
  throw ConfigError("unknown penalty schedule '" + std::string(text) + "' (expected oracle or adaptive)");
}

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kOracle ? "oracle" : "adaptive";
}

double PenaltySchedule::on_support(double rows) const { return on_scale * std::pow(rows, -0.5 - epsilon); }

double PenaltySchedule::off_support(double rows) const { return off_scale * std::pow(rows, -0.5 + epsilon); }

void PenaltySchedule::validate() const {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("schedule epsilon must lie in (0, 1/2)");
  if (!(on_scale > 0.0) || !(off_scale > 0.0) || !(adaptive_scale > 0.0)) {
    throw ConfigError("schedule scales must be positive");
  }
  if (!(adaptive_power > 0.5)) throw ConfigError("adaptive power must exceed 1/2");
}

void RecoveryParams::validate() const {
  SparseVarParams check = var;
  check.validate();
  schedule.validate();
  solver.validate();
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (sample_sizes.empty()) throw ConfigError("at least one sample size is required");
  for (Index rows : sample_sizes) {
    if (rows <= var.lags + 1) throw ConfigError("sample sizes must exceed the lag order + 1");
  }
  if (target < 0 || target >= var.num_variables) throw ConfigError("target column out of range");
}

namespace {

struct TrialOutcome {
  bool ok = false;
  bool converged = true;
  bool s1 = false;
  bool s2 = false;
  double false_positives = 0.0;
  double false_negatives = 0.0;
  double zeros = 0.0;
  double l2_error = kNaN;
  double oracle_ratio = kNaN;
  double refit_ratio = kNaN;
};

Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<Index>& cols) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.cols());
  if (cols.empty()) return out;
  Eigen::MatrixXd sub(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Index>(k)) = x.col(cols[k]);
  const Eigen::VectorXd coef = sub.colPivHouseholderQr().solve(y);
  for (std::size_t k = 0; k < cols.size(); ++k) out(cols[k]) = coef(static_cast<Index>(k));
  return out;
}

TrialOutcome recovery_trial(const RecoveryParams& params, const SparseVarTruth& truth, Index rows,
                            std::mt19937_64& rng) {
  TrialOutcome out;
  const auto& var = params.var;
  Eigen::VectorXd scale = Eigen::VectorXd::Constant(var.num_variables, var.sigma);
  if (!var.innovation_scale.empty()) {
    scale = Eigen::Map<const Eigen::VectorXd>(var.innovation_scale.data(), var.num_variables);
  }
  const Index burn_in = 5 * var.lags * var.num_variables;
  const LagDesign design = build_lag_design(simulate_var(truth.coef, scale, rows, burn_in, rng), var.lags);
  const Index target = params.target;
  const Eigen::VectorXd y = design.Y.col(target);
  const Eigen::VectorXd beta_true = truth.coef.matrix().col(target);
  const Index m = design.X.cols();
  const double n = static_cast<double>(design.rows());

  std::vector<Index> true_support;
  for (Index r = 0; r < m; ++r) {
    if (beta_true(r) != 0.0) true_support.push_back(r);
  }
  Eigen::VectorXd levels(m);
  if (params.schedule.kind == ScheduleKind::kOracle) {
    for (Index r = 0; r < m; ++r) {
      levels(r) = beta_true(r) != 0.0 ? params.schedule.on_support(n) : params.schedule.off_support(n);
    }
  } else {
    std::vector<Index> all(static_cast<std::size_t>(m));
    std::iota(all.begin(), all.end(), Index{0});
    const Eigen::VectorXd ols = least_squares(design.X, y, all);
    const double base = params.schedule.adaptive_scale * std::pow(n, -params.schedule.adaptive_power);
    for (Index r = 0; r < m; ++r) {
      levels(r) = ols(r) != 0.0 ? base / std::abs(ols(r)) : std::numeric_limits<double>::max() / 4;
    }
  }
  for (Index r = 0; r < m; ++r) levels(r) = canonical_level(levels(r), LossForm::kSumSquareScaledLevel);
  const SolveResult solved = solve_lasso(make_lasso_problem(design.X, y, levels), params.solver);
  out.converged = solved.converged;
  const Eigen::VectorXd& beta = solved.beta;

  bool s1 = true;
  bool s2 = true;
  std::vector<Index> selected;
  for (Index r = 0; r < m; ++r) {
    const bool own = design.column_map[static_cast<std::size_t>(r)].variable == target;
    const bool truly = beta_true(r) != 0.0;
    const bool chosen = beta(r) != 0.0;
    if (chosen) selected.push_back(r);
    if (!truly) out.zeros += 1.0;
    if (truly != chosen) {
      (own ? s2 : s1) = false;
      (chosen ? out.false_positives : out.false_negatives) += 1.0;
    }
  }
  out.s1 = s1;
  out.s2 = s2;

  const Eigen::VectorXd oracle = least_squares(design.X, y, true_support);
  double err = 0.0;
  double oracle_err = 0.0;
  double refit_err = 0.0;
  const Eigen::VectorXd refit =
      static_cast<Index>(selected.size()) <= design.rows() ? least_squares(design.X, y, selected)
                                                           : Eigen::VectorXd::Constant(m, kNaN);
  for (Index r : true_support) {
    err += (beta(r) - beta_true(r)) * (beta(r) - beta_true(r));
    oracle_err += (oracle(r) - beta_true(r)) * (oracle(r) - beta_true(r));
    refit_err += (refit(r) - beta_true(r)) * (refit(r) - beta_true(r));
  }
  out.l2_error = std::sqrt(err);
  if (oracle_err > 0.0) {
    out.oracle_ratio = std::sqrt(err / oracle_err);
    out.refit_ratio = std::sqrt(refit_err / oracle_err);
  }
  out.ok = true;
  return out;
}

}  // namespace

RecoveryReport recovery_experiment(const RecoveryParams& params) {
  params.validate();
  RecoveryReport report;
  const auto trials = static_cast<std::size_t>(params.trials);
  for (std::size_t size_index = 0; size_index < params.sample_sizes.size(); ++size_index) {
    const Index rows = params.sample_sizes[size_index];
    std::vector<TrialOutcome> outcomes(trials);
    parallel_for(trials, params.threads, [&](std::size_t trial) {
      try {
        // The same truth is used at every sample size of a trial.
        auto truth_rng = make_rng(params.var.seed, trial, 0);
        const SparseVarTruth truth = draw_sparse_truth(params.var, truth_rng);
        auto data_rng = make_rng(params.var.seed, trial, static_cast<std::uint64_t>(rows));
        outcomes[trial] = recovery_trial(params, truth, rows, data_rng);
      } catch (const std::exception&) {
        outcomes[trial] = TrialOutcome{};
      }
    });
    RecoveryRow row;
    row.rows = rows;
    row.trials = params.trials;
    double ok = 0.0;
    double zeros = 0.0;
    std::vector<double> ratios;
    std::vector<double> refit_ratios;
    for (const auto& o : outcomes) {
      if (!o.ok) {
        ++row.failures;
        continue;
      }
      ok += 1.0;
      if (!o.converged) ++row.non_converged;
      row.exact_rate += (o.s1 && o.s2) ? 1.0 : 0.0;
      row.s1_rate += o.s1 ? 1.0 : 0.0;
      row.s2_rate += o.s2 ? 1.0 : 0.0;
      row.mean_false_positives += o.false_positives;
      row.mean_false_negatives += o.false_negatives;
      row.mean_l2_error += o.l2_error;
      zeros += o.zeros;
      ratios.push_back(o.oracle_ratio);
      refit_ratios.push_back(o.refit_ratio);
    }
    // Failed trials count as misses in the rates.
    const double total = static_cast<double>(params.trials);
    row.exact_rate /= total;
    row.s1_rate /= total;
    row.s2_rate /= total;
    row.false_positive_rate = zeros > 0.0 ? row.mean_false_positives / zeros : 0.0;
    row.mean_false_positives = ok > 0.0 ? row.mean_false_positives / ok : kNaN;
    row.mean_false_negatives = ok > 0.0 ? row.mean_false_negatives / ok : kNaN;
    row.mean_l2_error = ok > 0.0 ? row.mean_l2_error / ok : kNaN;
    row.median_oracle_ratio = median(ratios);
    row.median_refit_ratio = median(refit_ratios);
    report.rows.push_back(row);
  }
  return report;
}

double DependenceDesign::dependence_measure(Index rows) const {
  if (kind == DependenceKind::kAutoregressive) return static_cast<double>(rows);
  return std::min<double>(order + 1, static_cast<double>(rows));
}

void DependenceParams::validate() const {
  if (designs.empty()) throw ConfigError("at least one dependence design is required");
  for (const auto& d : designs) {
    if (d.order < 0) throw ConfigError("MA order must be >= 0");
    if (d.kind == DependenceKind::kAutoregressive && !(std::abs(d.phi) < 1.0)) {
      throw ConfigError("AR coefficient must satisfy |phi| < 1");
    }
    if (d.kind == DependenceKind::kMovingAverage && d.order + 1 > rows) {
      throw ConfigError("MA order must be below the sample size");
    }
  }
  if (lags < 3) throw ConfigError("the risk bound needs P >= 3");
  if (rows <= lags) throw ConfigError("sample size must exceed the number of regressors");
  if (sparsity < 0 || sparsity > lags) throw ConfigError("sparsity must lie in [0, P]");
  if (!(magnitude > 0.0) || !(sigma > 0.0)) throw ConfigError("magnitude and sigma must be positive");
  if (!(delta > 0.0)) throw ConfigError("delta' must be positive");
  if (!(tail_q > 0.0 && tail_q < 1.0)) throw ConfigError("tail probability q must lie in (0, 1)");
  if (trials < 1 || pilot_trials < 2) throw ConfigError("need trials >= 1 and pilot_trials >= 2");
  if (kappa_budget < 1) throw ConfigError("kappa budget must be >= 1");
  solver.validate();
}

namespace {

struct DependenceDraw {
  Eigen::MatrixXd x;
  Eigen::VectorXd noise;
};

DependenceDraw draw_dependence(const DependenceDesign& design, const DependenceParams& params,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const Index rows = params.rows;
  const int lags = params.lags;
  const int k = design.kind == DependenceKind::kMovingAverage ? design.order : 0;
  const Index burn = design.kind == DependenceKind::kAutoregressive ? 200 : 0;
  const Index length = rows + lags + k + burn;
  Eigen::VectorXd innov(length);
  for (Index i = 0; i < length; ++i) innov(i) = normal(rng);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(length);
  for (Index i = 0; i < length; ++i) {
    if (design.kind == DependenceKind::kMovingAverage) {
      for (int l = 0; l <= k && l <= i; ++l) u(i) += innov(i - l);
    } else {
      u(i) = innov(i) + (i > 0 ? design.phi * u(i - 1) : 0.0);
    }
  }
  // Row t uses u at positions offset + t - p, offset leaving room for every lag.
  const Index offset = k + burn + lags;
  DependenceDraw out;
  out.x.resize(rows, lags);
  for (Index t = 0; t < rows; ++t)
    for (int p = 1; p <= lags; ++p) out.x(t, p - 1) = u(offset + t - p);
  for (int p = 0; p < lags; ++p) {
    const double norm = std::sqrt(out.x.col(p).squaredNorm() / static_cast<double>(rows));
    out.x.col(p) /= norm;
  }
  out.noise.resize(rows);
  for (Index t = 0; t < rows; ++t) out.noise(t) = params.sigma * normal(rng);
  return out;
}

struct DependenceOutcome {
  double prediction_error = 0.0;
  double l1_error = 0.0;
  double support = 0.0;
  double kappa = 0.0;
  bool flagged = false;
  bool bound_holds = false;
  bool zero = false;
};

}  // namespace

DependenceReport dependence_risk_experiment(const DependenceParams& params) {
  params.validate();
  DependenceReport report;
  const double rows = static_cast<double>(params.rows);
  const double log_term = std::pow(std::log(static_cast<double>(params.lags)), 1.0 + params.delta);
  for (std::size_t d = 0; d < params.designs.size(); ++d) {
    const auto& design = params.designs[d];
    const double measure = design.dependence_measure(params.rows);

    // C': (1 - q)-quantile over independent pilot draws of T^-1 sum_t max_p (e_t x_tp)^2.
    std::vector<double> pilot(static_cast<std::size_t>(params.pilot_trials));
    parallel_for(pilot.size(), params.threads, [&](std::size_t i) {
      auto rng = make_rng(params.seed, 1000 + d, i);
      const auto draw = draw_dependence(design, params, rng);
      double sum = 0.0;
      for (Index t = 0; t < params.rows; ++t) {
        const double b = (draw.noise(t) * draw.x.row(t).array()).abs().maxCoeff();
        sum += b * b;
      }
      pilot[i] = sum / rows;
    });
    const double c_prime = quantile(pilot, 1.0 - params.tail_q);
    const double lambda = std::sqrt(measure * log_term * c_prime / rows);
    const double bound_scale = 16.0 * params.sparsity * measure * log_term * c_prime / rows;

    std::vector<DependenceOutcome> outcomes(static_cast<std::size_t>(params.trials));
    parallel_for(outcomes.size(), params.threads, [&](std::size_t trial) {
      auto rng = make_rng(params.seed, d, trial);
      const auto draw = draw_dependence(design, params, rng);
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(params.lags);
      std::bernoulli_distribution negative(0.5);
      for (std::size_t p : choose(static_cast<std::size_t>(params.lags), static_cast<std::size_t>(params.sparsity), rng)) {
        theta(static_cast<Index>(p)) = negative(rng) ? -params.magnitude : params.magnitude;
      }
      const Eigen::VectorXd e = draw.x * theta + draw.noise;
      const Eigen::VectorXd levels =
          Eigen::VectorXd::Constant(params.lags, canonical_level(lambda, LossForm::kMeanSquareTwiceLevel));
      const SolveResult solved = solve_lasso(make_lasso_problem(draw.x, e, levels), params.solver);
      const Eigen::VectorXd diff = solved.beta - theta;
      DependenceOutcome& o = outcomes[trial];
      o.prediction_error = (draw.x * diff).squaredNorm() / rows;
      o.l1_error = diff.lpNorm<1>();
      o.support = static_cast<double>((solved.beta.array() != 0.0).count());
      o.zero = o.support == 0.0;
      const Eigen::MatrixXd gram = draw.x.transpose() * draw.x / rows;
      o.kappa = restricted_eigenvalue(gram, std::max(params.sparsity, 1), params.kappa_budget,
                                      params.seed ^ (0x9e3779b97f4a7c15ULL * (trial + 1) + d));
      o.flagged = o.kappa < 1e-6;
      o.bound_holds = !o.flagged && o.prediction_error <= bound_scale / (o.kappa * o.kappa);
    });

    DependenceRow row;
    row.order = design.kind == DependenceKind::kMovingAverage ? design.order : -1;
    row.measure = measure;
    row.rows = params.rows;
    row.lags = params.lags;
    row.sparsity = params.sparsity;
    row.trials = params.trials;
    row.lambda = lambda;
    row.c_prime = c_prime;
    double checked = 0.0;
    for (const auto& o : outcomes) {
      row.mean_prediction_error += o.prediction_error;
      row.mean_l1_error += o.l1_error;
      row.mean_support += o.support;
      row.mean_kappa += o.kappa;
      row.zero_fraction += o.zero ? 1.0 : 0.0;
      if (o.flagged) {
        ++row.flagged;
      } else {
        checked += 1.0;
        row.bound_fraction += o.bound_holds ? 1.0 : 0.0;
      }
    }
    const double total = static_cast<double>(params.trials);
    row.mean_prediction_error /= total;
    row.mean_l1_error /= total;
    row.mean_support /= total;
    row.mean_kappa /= total;
    row.zero_fraction /= total;
    row.bound_fraction = checked > 0.0 ? row.bound_fraction / checked : kNaN;
    report.rows.push_back(row);
  }
  return report;
}

double restricted_eigenvalue(const Eigen::MatrixXd& gram, int sparsity, int budget, std::uint64_t seed) {
  const Index m = gram.rows();
  if (gram.cols() != m || m < 1) throw DataError("restricted eigenvalue needs a square Gram matrix");
  if (sparsity < 1) throw ConfigError("restricted eigenvalue needs sparsity >= 1");
  const Index s = std::min<Index>(sparsity, m);
  std::vector<Index> order(static_cast<std::size_t>(m));

  // Projects onto the cone of its own top-s set and returns the ratio.
  auto evaluate = [&](Eigen::VectorXd& d) {
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + s, order.end(),
                      [&](Index a, Index b) { return std::abs(d(a)) > std::abs(d(b)); });
    double head_l1 = 0.0;
    double head_l2 = 0.0;
    for (Index k = 0; k < s; ++k) {
      const double v = d(order[static_cast<std::size_t>(k)]);
      head_l1 += std::abs(v);
      head_l2 += v * v;
    }
    if (head_l2 == 0.0) return std::numeric_limits<double>::infinity();
    const double tail_l1 = d.lpNorm<1>() - head_l1;
    if (tail_l1 > 3.0 * head_l1) {
      const double shrink = 3.0 * head_l1 / tail_l1;
      for (Index k = s; k < m; ++k) d(order[static_cast<std::size_t>(k)]) *= shrink;
    }
    const double quad = std::max(0.0, d.dot(gram * d));
    return std::sqrt(quad / head_l2);
  };

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_dir = Eigen::VectorXd::Zero(m);
  int used = 0;
  auto consider = [&](Eigen::VectorXd d) {
    ++used;
    const double v = evaluate(d);
    if (v < best) {
      best = v;
      best_dir = d;
    }
    return v;
  };

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  for (Index k = 0; k < m && used < budget; ++k) {
    consider(eig.eigenvectors().col(k));
    if (used < budget) {
      // Keep only the top-s coordinates of the eigenvector.
      Eigen::VectorXd head = eig.eigenvectors().col(k);
      std::iota(order.begin(), order.end(), Index{0});
      std::partial_sort(order.begin(), order.begin() + s, order.end(),
                        [&](Index a, Index b) { return std::abs(head(a)) > std::abs(head(b)); });
      for (Index j = s; j < m; ++j) head(order[static_cast<std::size_t>(j)]) = 0.0;
      consider(head);
    }
  }

  auto rng = make_rng(seed, 0x7265);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int random_budget = (budget - used) / 2;
  for (int i = 0; i < random_budget; ++i) {
    const auto support = choose(static_cast<std::size_t>(m), static_cast<std::size_t>(s), rng);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
    for (std::size_t j : support) d(static_cast<Index>(j)) = normal(rng);
    if (unif(rng) > 0.2) {
      Eigen::VectorXd tail(m);
      for (Index j = 0; j < m; ++j) tail(j) = normal(rng);
      for (std::size_t j : support) tail(static_cast<Index>(j)) = 0.0;
      const double t1 = tail.lpNorm<1>();
      if (t1 > 0.0) d += tail * (unif(rng) * 3.0 * d.lpNorm<1>() / t1);
    }
    consider(d);
  }

  // Local refinement around the incumbent with an adaptive step.
  double step = 0.3;
  while (used < budget) {
    Eigen::VectorXd d = best_dir / best_dir.norm();
    for (Index j = 0; j < m; ++j) d(j) += step * normal(rng) / std::sqrt(static_cast<double>(m));
    const double before = best;
    consider(d);
    step = best < before ? std::min(1.0, step * 1.5) : std::max(1e-4, step * 0.97);
  }
  return best;
}

void write_recovery_csv(std::ostream& out, const RecoveryReport& report) {
  const auto precision = out.precision(10);
  out << "T,trials,exact_rate,s1_rate,s2_rate,mean_false_positives,mean_false_negatives,"
         "false_positive_rate,mean_l2_error,median_oracle_ratio,median_refit_ratio,failures,non_converged\n";
  for (const auto& r : report.rows) {
    out << r.rows << ',' << r.trials << ',' << r.exact_rate << ',' << r.s1_rate << ',' << r.s2_rate << ','
        << r.mean_false_positives << ',' << r.mean_false_negatives << ',' << r.false_positive_rate << ','
        << r.mean_l2_error << ',' << r.median_oracle_ratio << ',' << r.median_refit_ratio << ',' << r.failures
        << ',' << r.non_converged << '\n';
  }
  out.precision(precision);
}

void write_dependence_csv(std::ostream& out, const DependenceReport& report) {
  const auto precision = out.precision(10);
  out << "k,measure,T,P,s,trials,lambda,c_prime,mean_prediction_error,mean_l1_error,mean_support,"
         "mean_kappa,bound_fraction,flagged,zero_fraction\n";
  for (const auto& r : report.rows) {
    out << r.order << ',' << r.measure << ',' << r.rows << ',' << r.lags << ',' << r.sparsity << ',' << r.trials
        << ',' << r.lambda << ',' << r.c_prime << ',' << r.mean_prediction_error << ',' << r.mean_l1_error << ','
        << r.mean_support << ',' << r.mean_kappa << ',' << r.bound_fraction << ',' << r.flagged << ','
        << r.zero_fraction << '\n';
  }
  out.precision(precision);
}

}  // namespace lvar
