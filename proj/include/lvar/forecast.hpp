#pragma once

#include "lvar/estimators.hpp"
#include "lvar/panel.hpp"
#include "lvar/solvers.hpp"

#include <Eigen/Dense>

#include <compare>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lvar {

/// Iterates Y_t = sum_p B_p' Y_{t-p} forward `horizon` steps from the last
/// `lags` rows of `history` (standardized units). Row h-1 of the result is
/// the h-step forecast. Throws DataError when history is too short.
Eigen::MatrixXd forecast_path(const CoefTensor& coef, const Eigen::MatrixXd& history, int horizon);

/// h-step forecast in original units: history is standardized with `weights`,
/// iterated forward and mapped back.
Eigen::VectorXd forecast_h(const CoefTensor& coef, const StandardizationWeights& weights,
                           const Eigen::MatrixXd& history, int horizon);

/// Random walk with drift: y_last + h * (y_last - y_first) / (n - 1).
double benchmark_rw_drift(const Eigen::Ref<const Eigen::VectorXd>& window, int horizon);

/// Rolling evaluation over forecast origins t in [t0, t1 - h], 0-based panel
/// rows. Each fit uses the trailing window of `window_len` rows ending at t.
struct RollingConfig {
  Index t0 = 0;
  Index t1 = 0;
  Index window_len = 0;
  std::vector<int> horizons{1};
  int refit_every = 1;
  // Variables to score (all when empty).
  std::vector<Index> variables;

  int max_horizon() const;
  // Throws ConfigError on violated invariants, DataError when the panel is too short.
  void validate(Index panel_rows, Index num_variables, int lags) const;
};

/// A forecaster driven by rolling_evaluate. `history` always ends at the
/// forecast origin, so a model never sees later observations.
class ForecastModel {
 public:
  virtual ~ForecastModel() = default;
  // Trains on rows `window` of `history` (window.end == history.rows()).
  virtual void fit(const Panel& history, RowRange window) = 0;
  // max_horizon x J forecasts in original units made at the end of `history`.
  virtual Eigen::MatrixXd forecast(const Panel& history, int max_horizon) const = 0;
  virtual double converged_fraction() const { return 1.0; }
};

struct PenalizedVarOptions {
  int lags = 1;
  SolverConfig solver;
  bool use_refit = true;
  bool warm_start = true;
  int threads = 1;
  // Response columns to fit (all when empty; no_grouping only).
  std::vector<Index> columns;
};

/// Standardizes on the training window, fits the penalized VAR and forecasts
/// by iterated plug-in in original units.
class PenalizedVarModel : public ForecastModel {
 public:
  PenalizedVarModel(PenaltySpec spec, PenalizedVarOptions options);

  void fit(const Panel& history, RowRange window) override;
  Eigen::MatrixXd forecast(const Panel& history, int max_horizon) const override;
  double converged_fraction() const override;

  const std::optional<FitResult>& last_fit() const { return fit_; }
  const StandardizationWeights& weights() const { return weights_; }

 private:
  PenaltySpec spec_;
  PenalizedVarOptions options_;
  std::optional<FitResult> fit_;
  StandardizationWeights weights_;
};

struct ForecastCell {
  Index variable = 0;
  int horizon = 1;
  double msfe = 0.0;
  double benchmark_msfe = 0.0;
  double rmsfe = 0.0;  // msfe / benchmark_msfe
  Index n_terms = 0;
  Index expected_terms = 0;  // t1 - t0 - h + 1
  std::vector<Index> origins;
  std::vector<double> forecasts;
  std::vector<double> benchmarks;
  std::vector<double> actuals;
};

struct ForecastReport {
  std::vector<ForecastCell> cells;
  Index fits = 0;
  Index failed_fits = 0;
  std::vector<std::string> failures;  // one message per failed origin
  double converged_fraction = 1.0;
  int refit_every = 1;

  const ForecastCell* find(Index variable, int horizon) const;
  // Largest number of missing terms in any cell (origins whose fit failed).
  Index coverage_gaps() const;
};

ForecastReport rolling_evaluate(const Panel& panel, ForecastModel& model, const RollingConfig& config);
ForecastReport rolling_evaluate(const Panel& panel, const PenaltySpec& spec,
                                const RollingConfig& config, const PenalizedVarOptions& options);

struct GridPoint {
  double lambda = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  double alpha = 1.0;
  auto operator<=>(const GridPoint&) const = default;
};

struct HyperGrid {
  std::vector<double> lambda;
  std::vector<double> gamma{0.0};
  std::vector<double> eta{0.0};
  std::vector<double> alpha{1.0};
  int refine_rounds = 1;
  // Each interval next to the optimum is split into this many parts.
  int refine_factor = 3;

  std::vector<GridPoint> points() const;
  void validate() const;
};

enum class GridObjective { kPerVariable, kMeanAll, kMeanSegment };

GridObjective parse_grid_objective(std::string_view text);
std::string_view to_string(GridObjective objective);

/// Penalty spec of one grid point in `mode` (every column/segment shares it).
PenaltySpec spec_at(const GridPoint& point, GroupingMode mode, Index num_variables,
                    const std::vector<std::vector<Index>>& segments, DecayKind decay);

struct GridSearchConfig {
  GroupingMode mode = GroupingMode::kNoGrouping;
  GridObjective objective = GridObjective::kPerVariable;
  DecayKind decay = DecayKind::kPower;
  // Segments of segmentized mode; with kMeanSegment every segment is tuned
  // on the mean RMSFE of its own variables.
  std::vector<std::vector<Index>> segments;
  PenalizedVarOptions model;
  int threads = 1;  // grid points evaluated concurrently
};

struct GridRow {
  GridPoint point;
  bool refined = false;
  std::optional<ForecastReport> report;
  std::string error;
};

/// Winner for one objective key at one horizon: a variable (per-variable
/// objective), a segment (segment means) or the whole panel (both -1).
struct GridSelection {
  Index variable = -1;
  Index segment = -1;
  int horizon = 1;
  GridPoint point;
  double objective = 0.0;
  double coarse_objective = 0.0;
};

struct GridSearchResult {
  std::vector<GridRow> table;
  std::vector<GridSelection> best;

  const GridSelection* find(Index variable, int horizon) const;
  const GridSelection* find_segment(Index segment, int horizon) const;
  // Objective of a key at a point, +inf when it was not evaluated or failed.
  double objective_at(const GridSelection& key, const GridPoint& point) const;
  // Spec assembled from the winners at `horizon`: per-variable winners give
  // column-specific levels (no_grouping), per-segment winners segment-specific
  // ones (segmentized); otherwise the single winner applies everywhere.
  PenaltySpec best_spec(int horizon, Index num_variables) const;

  GridSearchConfig config;
  std::vector<Index> scored;  // variables entering the objectives
};

/// Coarse pass over every grid point, then `refine_rounds` passes over denser
/// local grids around each key's optimum. Ties go to the lexicographically
/// smallest (lambda, gamma, eta, alpha). Throws SolverError when every point fails.
GridSearchResult grid_search(const Panel& panel, const HyperGrid& grid, const RollingConfig& rolling,
                             const GridSearchConfig& config);

/// One CSV row per (variable, horizon):
/// mode,j,h,P,lambda,gamma,eta,alpha,msfe,benchmark_msfe,rmsfe,n_terms,converged_fraction
void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const ForecastCell& cell, const Panel& panel,
                      GroupingMode mode, int lags, const GridPoint& point, double converged_fraction);
void write_report_rows(std::ostream& out, const ForecastReport& report, const Panel& panel,
                       GroupingMode mode, int lags, const GridPoint& point);

}  // namespace lvar
