#include "lvar/forecast.hpp"

#include "lvar/errors.hpp"
#include "lvar/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

namespace lvar {

Eigen::MatrixXd forecast_path(const CoefTensor& coef, const Eigen::MatrixXd& history, int horizon) {
  if (horizon < 1) throw ConfigError("forecast horizon must be >= 1");
  const int lags = coef.lags();
  const Index num_vars = coef.num_variables();
  if (history.cols() != num_vars) throw DataError("history has the wrong number of variables");
  if (history.rows() < lags) {
    throw DataError("forecast needs " + std::to_string(lags) + " rows of history, got " +
                    std::to_string(history.rows()));
  }
  // Rolling buffer: row 0 is the most recent observation.
  Eigen::MatrixXd recent(lags, num_vars);
  for (int p = 0; p < lags; ++p) recent.row(p) = history.row(history.rows() - 1 - p);
  Eigen::MatrixXd path(horizon, num_vars);
  Eigen::RowVectorXd x(num_vars * lags);
  for (int h = 0; h < horizon; ++h) {
    for (int p = 0; p < lags; ++p) x.segment(p * num_vars, num_vars) = recent.row(p);
    const Eigen::RowVectorXd next = x * coef.matrix();
    path.row(h) = next;
    for (int p = lags - 1; p > 0; --p) recent.row(p) = recent.row(p - 1);
    recent.row(0) = next;
  }
  return path;
}

Eigen::VectorXd forecast_h(const CoefTensor& coef, const StandardizationWeights& weights,
                           const Eigen::MatrixXd& history, int horizon) {
  Eigen::MatrixXd z = history.rowwise() - weights.mean.transpose();
  z = z.array().rowwise() / weights.scale.transpose().array();
  const Eigen::VectorXd last = forecast_path(coef, z, horizon).row(horizon - 1).transpose();
  return last.cwiseProduct(weights.scale) + weights.mean;
}

double benchmark_rw_drift(const Eigen::Ref<const Eigen::VectorXd>& window, int horizon) {
  if (window.size() < 2) throw DataError("random walk benchmark needs at least 2 observations");
  const double last = window(window.size() - 1);
  const double drift = (last - window(0)) / static_cast<double>(window.size() - 1);
  return last + horizon * drift;
}

int RollingConfig::max_horizon() const {
  return horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
}

void RollingConfig::validate(Index panel_rows, Index num_variables, int lags) const {
  if (horizons.empty()) throw ConfigError("at least one forecast horizon is required");
  for (int h : horizons) {
    if (h < 1) throw ConfigError("forecast horizons must be positive");
  }
  if (refit_every < 1) throw ConfigError("refit_every must be >= 1");
  if (window_len < lags + 2) {
    throw ConfigError("training window of " + std::to_string(window_len) + " rows is too short for " +
                      std::to_string(lags) + " lags (needs >= lags + 2)");
  }
  if (t0 >= t1) throw ConfigError("evaluation window needs t0 < t1");
  if (t1 - t0 + 1 < max_horizon()) {
    throw ConfigError("evaluation window is shorter than the largest horizon");
  }
  for (Index j : variables) {
    if (j < 0 || j >= num_variables) throw ConfigError("scored variable index out of range");
  }
  if (t0 - window_len + 1 < 0 || t1 >= panel_rows) {
    throw DataError("panel of " + std::to_string(panel_rows) + " rows does not cover the evaluation window [" +
                    std::to_string(t0 - window_len + 1) + ", " + std::to_string(t1) + "]");
  }
}

PenalizedVarModel::PenalizedVarModel(PenaltySpec spec, PenalizedVarOptions options)
    : spec_(std::move(spec)), options_(std::move(options)) {}

void PenalizedVarModel::fit(const Panel& history, RowRange window) {
  auto [standardized, weights] = standardize(history, window);
  const LagDesign design =
      build_lag_design(standardized.data.middleRows(window.begin, window.size()), options_.lags);
  FitOptions fit_options;
  fit_options.refit = options_.use_refit;
  if (options_.warm_start && fit_) fit_options.warm_start = &*fit_;
  FitResult result = fit_var(design, spec_, options_.solver, fit_options, options_.columns, options_.threads);
  fit_ = std::move(result);
  weights_ = std::move(weights);
}

Eigen::MatrixXd PenalizedVarModel::forecast(const Panel& history, int max_horizon) const {
  if (!fit_) throw SolverError("forecast requested before a successful fit");
  const Index rows = std::min<Index>(history.rows(), options_.lags);
  const Eigen::MatrixXd tail = history.data.bottomRows(rows);
  Eigen::MatrixXd z = tail.rowwise() - weights_.mean.transpose();
  z = z.array().rowwise() / weights_.scale.transpose().array();
  Eigen::MatrixXd path = forecast_path(fit_->coefficients(), z, max_horizon);
  path = path.array().rowwise() * weights_.scale.transpose().array();
  return path.rowwise() + weights_.mean.transpose();
}

double PenalizedVarModel::converged_fraction() const { return fit_ ? fit_->converged_fraction() : 0.0; }

const ForecastCell* ForecastReport::find(Index variable, int horizon) const {
  for (const auto& c : cells) {
    if (c.variable == variable && c.horizon == horizon) return &c;
  }
  return nullptr;
}

Index ForecastReport::coverage_gaps() const {
  Index gaps = 0;
  for (const auto& c : cells) gaps = std::max(gaps, c.expected_terms - c.n_terms);
  return gaps;
}

ForecastReport rolling_evaluate(const Panel& panel, ForecastModel& model, const RollingConfig& config) {
  config.validate(panel.rows(), panel.cols(), 0);
  std::vector<Index> variables = config.variables;
  if (variables.empty()) {
    variables.resize(static_cast<std::size_t>(panel.cols()));
    std::iota(variables.begin(), variables.end(), Index{0});
  }
  const int max_h = config.max_horizon();
  ForecastReport report;
  report.refit_every = config.refit_every;
  for (int h : config.horizons) {
    for (Index j : variables) {
      ForecastCell cell;
      cell.variable = j;
      cell.horizon = h;
      cell.expected_terms = config.t1 - config.t0 - h + 1;
      report.cells.push_back(std::move(cell));
    }
  }

  bool have_fit = false;
  double converged_sum = 0.0;
  Index since_fit = 0;
  const int min_h = *std::min_element(config.horizons.begin(), config.horizons.end());
  for (Index t = config.t0; t <= config.t1 - min_h; ++t) {
    // The model only ever receives rows up to and including the origin.
    const Index cut = t + 1;
    Panel history{panel.data.topRows(cut), panel.names, panel.codes};
    const RowRange window{cut - config.window_len, cut};
    if (!have_fit || since_fit >= config.refit_every) {
      try {
        model.fit(history, window);
        have_fit = true;
        ++report.fits;
        converged_sum += model.converged_fraction();
      } catch (const std::exception& err) {
        have_fit = false;
        ++report.failed_fits;
        report.failures.push_back("origin " + std::to_string(t) + ": " + err.what());
      }
      since_fit = 0;
    }
    ++since_fit;
    if (!have_fit) continue;
    Eigen::MatrixXd path;
    try {
      path = model.forecast(history, max_h);
    } catch (const std::exception& err) {
      report.failures.push_back("origin " + std::to_string(t) + ": " + err.what());
      continue;
    }
    for (auto& cell : report.cells) {
      const Index target = t + cell.horizon;
      if (target > config.t1) continue;
      const Index j = cell.variable;
      const double actual = panel.data(target, j);
      const double bench = benchmark_rw_drift(history.data.col(j).segment(window.begin, window.size()), cell.horizon);
      cell.origins.push_back(t);
      cell.forecasts.push_back(path(cell.horizon - 1, j));
      cell.benchmarks.push_back(bench);
      cell.actuals.push_back(actual);
    }
  }
  for (auto& cell : report.cells) {
    cell.n_terms = static_cast<Index>(cell.origins.size());
    double se = 0.0;
    double be = 0.0;
    for (std::size_t k = 0; k < cell.origins.size(); ++k) {
      se += (cell.forecasts[k] - cell.actuals[k]) * (cell.forecasts[k] - cell.actuals[k]);
      be += (cell.benchmarks[k] - cell.actuals[k]) * (cell.benchmarks[k] - cell.actuals[k]);
    }
    const double count = static_cast<double>(cell.n_terms);
    cell.msfe = cell.n_terms > 0 ? se / count : std::numeric_limits<double>::quiet_NaN();
    cell.benchmark_msfe = cell.n_terms > 0 ? be / count : std::numeric_limits<double>::quiet_NaN();
    if (cell.benchmark_msfe > 0.0) {
      cell.rmsfe = cell.msfe / cell.benchmark_msfe;
    } else {
      // A perfect benchmark: equal when the model is perfect too.
      cell.rmsfe = cell.msfe == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
  }
  report.converged_fraction = report.fits > 0 ? converged_sum / static_cast<double>(report.fits) : 0.0;
  return report;
}

ForecastReport rolling_evaluate(const Panel& panel, const PenaltySpec& spec, const RollingConfig& config,
                                const PenalizedVarOptions& options) {
  config.validate(panel.rows(), panel.cols(), options.lags);
  spec.validate(panel.cols());
  PenalizedVarModel model(spec, options);
  return rolling_evaluate(panel, model, config);
}

std::vector<GridPoint> HyperGrid::points() const {
  validate();
  std::vector<GridPoint> out;
  for (double l : lambda)
    for (double g : gamma)
      for (double e : eta)
        for (double a : alpha) out.push_back({l, g, e, a});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void HyperGrid::validate() const {
  auto check = [](const std::vector<double>& values, const char* what) {
    if (values.empty()) throw ConfigError(std::string("grid for ") + what + " is empty");
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string("grid values for ") + what + " must be finite and >= 0");
      }
    }
  };
  check(lambda, "lambda");
  check(gamma, "gamma");
  check(eta, "eta");
  check(alpha, "alpha");
  if (refine_rounds < 0) throw ConfigError("refine_rounds must be >= 0");
  if (refine_factor < 2) throw ConfigError("refine_factor must be >= 2");
}

GridObjective parse_grid_objective(std::string_view text) {
  if (text == "per_variable") return GridObjective::kPerVariable;
  if (text == "mean") return GridObjective::kMeanAll;
  if (text == "segment_mean") return GridObjective::kMeanSegment;
  throw ConfigError("unknown grid objective '" + std::string(text) +
                    "' (expected per_variable, mean or segment_mean)");
}

std::string_view to_string(GridObjective objective) {
  switch (objective) {
    case GridObjective::kPerVariable:
      return "per_variable";
    case GridObjective::kMeanAll:
      return "mean";
    case GridObjective::kMeanSegment:
      return "segment_mean";
  }
  return "per_variable";
}

PenaltySpec spec_at(const GridPoint& point, GroupingMode mode, Index num_variables,
                    const std::vector<std::vector<Index>>& segments, DecayKind decay) {
  PenaltySpec spec;
  switch (mode) {
    case GroupingMode::kUniversal:
      spec = PenaltySpec::universal(point.lambda, point.gamma, point.alpha);
      break;
    case GroupingMode::kNoGrouping:
      spec = PenaltySpec::no_grouping(num_variables, point.lambda, point.gamma, point.alpha);
      break;
    case GroupingMode::kSegmentized:
      spec = PenaltySpec::segmentized(segments, point.lambda, point.gamma, point.eta, point.alpha);
      break;
  }
  spec.decay = decay;
  return spec;
}

namespace {

// Values strictly between neighbours of `center` in `values` (sorted, unique),
// `factor` - 1 per adjacent interval, plus the center itself.
std::vector<double> refine_axis(const std::vector<double>& values, double center, int factor) {
  std::vector<double> out{center};
  const auto it = std::find(values.begin(), values.end(), center);
  const auto k = static_cast<std::size_t>(it - values.begin());
  auto split = [&](double a, double b) {
    for (int s = 1; s < factor; ++s) out.push_back(a + (b - a) * s / factor);
  };
  if (k > 0) split(values[k - 1], center);
  if (k + 1 < values.size()) split(center, values[k + 1]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> axis_values(const std::vector<GridRow>& table, double GridPoint::*field) {
  std::vector<double> out;
  for (const auto& row : table) out.push_back(row.point.*field);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

const GridSelection* GridSearchResult::find(Index variable, int horizon) const {
  for (const auto& b : best) {
    if (b.variable == variable && b.segment == -1 && b.horizon == horizon) return &b;
  }
  return nullptr;
}

const GridSelection* GridSearchResult::find_segment(Index segment, int horizon) const {
  for (const auto& b : best) {
    if (b.segment == segment && b.horizon == horizon) return &b;
  }
  return nullptr;
}

double GridSearchResult::objective_at(const GridSelection& key, const GridPoint& point) const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (const auto& row : table) {
    if (row.point != point) continue;
    if (!row.report) return kInf;
    auto rmsfe = [&](Index j) {
      const ForecastCell* cell = row.report->find(j, key.horizon);
      if (cell == nullptr || cell->n_terms == 0 || !std::isfinite(cell->rmsfe)) return kInf;
      return cell->rmsfe;
    };
    const std::vector<Index>* members = &scored;
    if (key.variable >= 0) return rmsfe(key.variable);
    if (key.segment >= 0) members = &config.segments[static_cast<std::size_t>(key.segment)];
    double sum = 0.0;
    for (Index j : *members) sum += rmsfe(j);
    return sum / static_cast<double>(members->size());
  }
  return kInf;
}

PenaltySpec GridSearchResult::best_spec(int horizon, Index num_variables) const {
  const GridSelection* first = nullptr;
  for (const auto& b : best) {
    if (b.horizon == horizon) {
      first = &b;
      break;
    }
  }
  if (first == nullptr) throw ConfigError("no grid winner for horizon " + std::to_string(horizon));
  PenaltySpec spec = spec_at(first->point, config.mode, num_variables, config.segments, config.decay);
  if (config.objective == GridObjective::kPerVariable && config.mode == GroupingMode::kNoGrouping) {
    spec.column_alpha.assign(static_cast<std::size_t>(num_variables), first->point.alpha);
    for (const auto& b : best) {
      if (b.horizon != horizon || b.variable < 0) continue;
      const auto j = static_cast<std::size_t>(b.variable);
      spec.column_lambda[j] = b.point.lambda;
      spec.column_gamma[j] = b.point.gamma;
      spec.column_alpha[j] = b.point.alpha;
    }
  }
  if (config.objective == GridObjective::kMeanSegment && config.mode == GroupingMode::kSegmentized) {
    spec.segment_alpha.assign(config.segments.size(), first->point.alpha);
    for (const auto& b : best) {
      if (b.horizon != horizon || b.segment < 0) continue;
      const auto s = static_cast<std::size_t>(b.segment);
      spec.segment_lambda[s] = b.point.lambda;
      spec.segment_gamma[s] = b.point.gamma;
      spec.segment_eta[s] = b.point.eta;
      spec.segment_alpha[s] = b.point.alpha;
    }
  }
  return spec;
}

GridSearchResult grid_search(const Panel& panel, const HyperGrid& grid, const RollingConfig& rolling,
                             const GridSearchConfig& config) {
  grid.validate();
  rolling.validate(panel.rows(), panel.cols(), config.model.lags);
  GridSearchResult result;
  result.config = config;
  result.scored = rolling.variables;
  if (result.scored.empty()) {
    result.scored.resize(static_cast<std::size_t>(panel.cols()));
    std::iota(result.scored.begin(), result.scored.end(), Index{0});
  }
  if (config.objective == GridObjective::kMeanSegment) {
    if (config.segments.empty()) throw ConfigError("segment objective needs segments");
    for (const auto& seg : config.segments) {
      if (seg.empty()) throw ConfigError("segments must not be empty");
      for (Index j : seg) {
        if (std::find(result.scored.begin(), result.scored.end(), j) == result.scored.end()) {
          throw ConfigError("segment member " + std::to_string(j) + " is not a scored variable");
        }
      }
    }
  }
  spec_at(GridPoint{}, config.mode, panel.cols(), config.segments, config.decay).validate(panel.cols());

  auto evaluate = [&](const std::vector<GridPoint>& points, bool refined) {
    std::vector<GridRow> rows(points.size());
    parallel_for(rows.size(), config.threads, [&](std::size_t k) {
      GridRow& row = rows[k];
      row.point = points[k];
      row.refined = refined;
      try {
        const PenaltySpec spec = spec_at(row.point, config.mode, panel.cols(), config.segments, config.decay);
        row.report = rolling_evaluate(panel, spec, rolling, config.model);
        if (row.report->fits == 0) {
          row.error = row.report->failures.empty() ? "no successful fit" : row.report->failures.front();
          row.report.reset();
        }
      } catch (const std::exception& err) {
        row.error = err.what();
      }
    });
    for (auto& row : rows) result.table.push_back(std::move(row));
  };

  evaluate(grid.points(), false);
  if (std::none_of(result.table.begin(), result.table.end(), [](const GridRow& r) { return r.report.has_value(); })) {
    std::string message = "every grid point failed:";
    for (const auto& row : result.table) {
      message += "\n  lambda=" + std::to_string(row.point.lambda) + " gamma=" + std::to_string(row.point.gamma) +
                 " eta=" + std::to_string(row.point.eta) + " alpha=" + std::to_string(row.point.alpha) + ": " +
                 row.error;
    }
    throw SolverError(message);
  }

  // Objective keys.
  std::vector<GridSelection> keys;
  for (int h : rolling.horizons) {
    switch (config.objective) {
      case GridObjective::kPerVariable:
        for (Index j : result.scored) keys.push_back({j, -1, h, {}, 0.0, 0.0});
        break;
      case GridObjective::kMeanAll:
        keys.push_back({-1, -1, h, {}, 0.0, 0.0});
        break;
      case GridObjective::kMeanSegment:
        for (std::size_t s = 0; s < config.segments.size(); ++s) {
          keys.push_back({-1, static_cast<Index>(s), h, {}, 0.0, 0.0});
        }
        break;
    }
  }

  auto select = [&](GridSelection& key, bool coarse_only) {
    std::set<GridPoint> candidates;
    for (const auto& row : result.table) {
      if (!coarse_only || !row.refined) candidates.insert(row.point);
    }
    double best = std::numeric_limits<double>::infinity();
    GridPoint arg = *candidates.begin();
    for (const auto& point : candidates) {  // ascending order, so ties keep the smallest
      const double value = result.objective_at(key, point);
      if (value < best) {
        best = value;
        arg = point;
      }
    }
    return std::pair{arg, best};
  };

  for (auto& key : keys) {
    auto [point, value] = select(key, true);
    key.point = point;
    key.objective = value;
    key.coarse_objective = value;
  }

  for (int round = 0; round < grid.refine_rounds; ++round) {
    const auto lambdas = axis_values(result.table, &GridPoint::lambda);
    const auto gammas = axis_values(result.table, &GridPoint::gamma);
    const auto etas = axis_values(result.table, &GridPoint::eta);
    const auto alphas = axis_values(result.table, &GridPoint::alpha);
    std::set<GridPoint> seen;
    for (const auto& row : result.table) seen.insert(row.point);
    std::set<GridPoint> fresh;
    for (const auto& key : keys) {
      if (!std::isfinite(key.objective)) continue;
      const GridPoint& c = key.point;
      for (double l : refine_axis(lambdas, c.lambda, grid.refine_factor))
        for (double g : refine_axis(gammas, c.gamma, grid.refine_factor))
          for (double e : refine_axis(etas, c.eta, grid.refine_factor))
            for (double a : refine_axis(alphas, c.alpha, grid.refine_factor)) {
              const GridPoint p{l, g, e, a};
              if (!seen.count(p)) fresh.insert(p);
            }
    }
    if (fresh.empty()) break;
    evaluate(std::vector<GridPoint>(fresh.begin(), fresh.end()), true);
    for (auto& key : keys) {
      auto [point, value] = select(key, false);
      key.point = point;
      key.objective = value;
    }
  }
  result.best = std::move(keys);
  return result;
}

void write_report_header(std::ostream& out) {
  out << "mode,j,h,P,lambda,gamma,eta,alpha,msfe,benchmark_msfe,rmsfe,n_terms,converged_fraction\n";
}

void write_report_row(std::ostream& out, const ForecastCell& cell, const Panel& panel, GroupingMode mode,
                      int lags, const GridPoint& point, double converged_fraction) {
  const auto precision = out.precision(10);
  out << to_string(mode) << ',' << panel.names[static_cast<std::size_t>(cell.variable)] << ',' << cell.horizon
      << ',' << lags << ',' << point.lambda << ',' << point.gamma << ',' << point.eta << ',' << point.alpha
      << ',' << cell.msfe << ',' << cell.benchmark_msfe << ',' << cell.rmsfe << ',' << cell.n_terms << ','
      << converged_fraction << '\n';
  out.precision(precision);
}

void write_report_rows(std::ostream& out, const ForecastReport& report, const Panel& panel, GroupingMode mode,
                       int lags, const GridPoint& point) {
  for (const auto& cell : report.cells) {
    write_report_row(out, cell, panel, mode, lags, point, report.converged_fraction);
  }
}

}  // namespace lvar
