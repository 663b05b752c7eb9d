#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lvar {

using Index = Eigen::Index;

enum class TransformCode { kLevel, kLog, kDiff, kLogDiff, kDiff2, kLogDiff2 };

TransformCode parse_transform_code(std::string_view text);
std::string_view to_string(TransformCode code);
// Number of leading rows consumed by the differencing part of a code.
int differencing_depth(TransformCode code);
bool uses_log(TransformCode code);

/// Half-open row range [begin, end).
struct RowRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};

/// A T x J multivariate time series, rows chronological (oldest first).
struct Panel {
  Eigen::MatrixXd data;
  std::vector<std::string> names;
  std::vector<TransformCode> codes;

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }
  std::optional<Index> find(std::string_view name) const;
};

/// Builds a panel and checks its invariants (T, J >= 1, finite entries,
/// one name and code per column). Throws DataError.
Panel make_panel(Eigen::MatrixXd data, std::vector<std::string> names,
                 std::vector<TransformCode> codes = {});

/// Per-variable scale (w) and mean used to standardize a panel.
struct StandardizationWeights {
  Eigen::VectorXd scale;
  Eigen::VectorXd mean;

  static StandardizationWeights identity(Index num_variables);
};

/// Applies one transform code per column, then drops the leading rows lost to
/// the deepest differencing so every column shares one time index.
Panel apply_transforms(const Eigen::MatrixXd& raw, std::vector<std::string> names,
                       const std::vector<TransformCode>& codes);

/// Column means and sample standard deviations (n - 1) are taken over `window`
/// only and then applied to every row of the panel.
std::pair<Panel, StandardizationWeights> standardize(const Panel& panel, RowRange window);
std::pair<Panel, StandardizationWeights> standardize(const Panel& panel);

Panel destandardize(const Panel& panel, const StandardizationWeights& weights);

struct LagColumn {
  int lag = 1;       // 1-based lag p
  Index variable = 0;  // 0-based variable j
};

/// Regressor/response pair for a VAR(P) fit.
///
/// Rows are stored oldest first: row r is the response at panel time
/// `response_time[r]` (= P + r). Column `(p - 1) * J + j` holds variable j at
/// lag p, i.e. row r of X is (Y_{t-1}', ..., Y_{t-P}').
struct LagDesign {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  int lags = 1;
  Index num_variables = 0;
  std::vector<LagColumn> column_map;
  std::vector<Index> response_time;

  Index rows() const { return X.rows(); }
  Index column_of(int lag, Index variable) const { return (lag - 1) * num_variables + variable; }

  // Newest-first presentation of X and Y.
  Eigen::MatrixXd newest_first_X() const { return X.colwise().reverse(); }
  Eigen::MatrixXd newest_first_Y() const { return Y.colwise().reverse(); }
};

LagDesign build_lag_design(const Eigen::Ref<const Eigen::MatrixXd>& data, int lags);
LagDesign build_lag_design(const Panel& panel, int lags);

}  // namespace lvar
