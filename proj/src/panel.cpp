#include "lvar/panel.hpp"

#include "lvar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lvar {

namespace {

struct CodeName {
  TransformCode code;
  std::string_view name;
};

constexpr CodeName kCodeNames[] = {
    {TransformCode::kLevel, "level"},       {TransformCode::kLog, "log"},
    {TransformCode::kDiff, "diff"},         {TransformCode::kLogDiff, "log-diff"},
    {TransformCode::kDiff2, "diff2"},       {TransformCode::kLogDiff2, "log-diff2"},
};

Eigen::VectorXd difference(const Eigen::VectorXd& x) {
  if (x.size() < 2) return Eigen::VectorXd(0);
  return x.tail(x.size() - 1) - x.head(x.size() - 1);
}

}  // namespace

TransformCode parse_transform_code(std::string_view text) {
  for (const auto& entry : kCodeNames) {
    if (entry.name == text) return entry.code;
  }
  throw ConfigError("unknown transform code '" + std::string(text) +
                    "' (expected level, log, diff, log-diff, diff2 or log-diff2)");
}

std::string_view to_string(TransformCode code) {
  for (const auto& entry : kCodeNames) {
    if (entry.code == code) return entry.name;
  }
  return "level";
}

int differencing_depth(TransformCode code) {
  switch (code) {
    case TransformCode::kLevel:
    case TransformCode::kLog:
      return 0;
    case TransformCode::kDiff:
    case TransformCode::kLogDiff:
      return 1;
    case TransformCode::kDiff2:
    case TransformCode::kLogDiff2:
      return 2;
  }
  return 0;
}

bool uses_log(TransformCode code) {
  return code == TransformCode::kLog || code == TransformCode::kLogDiff ||
         code == TransformCode::kLogDiff2;
}

std::optional<Index> Panel::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Index>(i);
  }
  return std::nullopt;
}

Panel make_panel(Eigen::MatrixXd data, std::vector<std::string> names,
                 std::vector<TransformCode> codes) {
  if (data.rows() < 1 || data.cols() < 1) {
    throw DataError("panel must have at least one row and one column");
  }
  if (names.empty()) {
    for (Index j = 0; j < data.cols(); ++j) names.push_back("y" + std::to_string(j + 1));
  }
  if (codes.empty()) codes.assign(static_cast<std::size_t>(data.cols()), TransformCode::kLevel);
  if (static_cast<Index>(names.size()) != data.cols() ||
      static_cast<Index>(codes.size()) != data.cols()) {
    throw DataError("panel has " + std::to_string(data.cols()) + " columns but " +
                    std::to_string(names.size()) + " names and " + std::to_string(codes.size()) +
                    " transform codes");
  }
  for (Index j = 0; j < data.cols(); ++j) {
    for (Index t = 0; t < data.rows(); ++t) {
      if (!std::isfinite(data(t, j))) {
        throw DataError("non-finite value in variable '" + names[static_cast<std::size_t>(j)] +
                        "' at row " + std::to_string(t));
      }
    }
  }
  return Panel{std::move(data), std::move(names), std::move(codes)};
}

StandardizationWeights StandardizationWeights::identity(Index num_variables) {
  return {Eigen::VectorXd::Ones(num_variables), Eigen::VectorXd::Zero(num_variables)};
}

Panel apply_transforms(const Eigen::MatrixXd& raw, std::vector<std::string> names,
                       const std::vector<TransformCode>& codes) {
  const Index num_vars = raw.cols();
  if (static_cast<Index>(codes.size()) != num_vars) {
    throw ConfigError("expected " + std::to_string(num_vars) + " transform codes, got " +
                      std::to_string(codes.size()));
  }
  if (names.empty()) {
    for (Index j = 0; j < num_vars; ++j) names.push_back("y" + std::to_string(j + 1));
  }
  int depth = 0;
  for (auto code : codes) depth = std::max(depth, differencing_depth(code));
  if (raw.rows() - depth < 1) {
    throw DataError("panel has " + std::to_string(raw.rows()) + " rows; transforms need at least " +
                    std::to_string(depth + 1));
  }

  const Index out_rows = raw.rows() - depth;
  Eigen::MatrixXd out(out_rows, num_vars);
  for (Index j = 0; j < num_vars; ++j) {
    const auto code = codes[static_cast<std::size_t>(j)];
    Eigen::VectorXd series = raw.col(j);
    if (uses_log(code)) {
      for (Index t = 0; t < series.size(); ++t) {
        if (!(series(t) > 0.0)) {
          std::ostringstream msg;
          msg << "variable '" << names[static_cast<std::size_t>(j)] << "' has non-positive value "
              << series(t) << " at row " << t << " under transform '" << to_string(code) << "'";
          throw DataError(msg.str());
        }
        series(t) = std::log(series(t));
      }
    }
    for (int d = 0; d < differencing_depth(code); ++d) series = difference(series);
    // Align on the common index: drop extra leading rows of shallower codes.
    out.col(j) = series.tail(out_rows);
  }
  return make_panel(std::move(out), std::move(names), codes);
}

std::pair<Panel, StandardizationWeights> standardize(const Panel& panel, RowRange window) {
  if (window.begin < 0 || window.end > panel.rows() || window.size() < 2) {
    throw DataError("standardization window [" + std::to_string(window.begin) + ", " +
                    std::to_string(window.end) + ") must lie in the panel and hold >= 2 rows");
  }
  const auto block = panel.data.middleRows(window.begin, window.size());
  StandardizationWeights weights;
  weights.mean = block.colwise().mean().transpose();
  weights.scale.resize(panel.cols());
  for (Index j = 0; j < panel.cols(); ++j) {
    const double ss = (block.col(j).array() - weights.mean(j)).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(window.size() - 1));
    if (!(sd > 0.0)) {
      throw DataError("variable '" + panel.names[static_cast<std::size_t>(j)] +
                      "' has zero variance on the standardization window");
    }
    weights.scale(j) = sd;
  }
  Panel out = panel;
  out.data = (panel.data.rowwise() - weights.mean.transpose()).array().rowwise() /
             weights.scale.transpose().array();
  return {std::move(out), std::move(weights)};
}

std::pair<Panel, StandardizationWeights> standardize(const Panel& panel) {
  return standardize(panel, RowRange{0, panel.rows()});
}

Panel destandardize(const Panel& panel, const StandardizationWeights& weights) {
  Panel out = panel;
  out.data = (panel.data.array().rowwise() * weights.scale.transpose().array()).matrix().rowwise() +
             weights.mean.transpose();
  return out;
}

LagDesign build_lag_design(const Eigen::Ref<const Eigen::MatrixXd>& data, int lags) {
  const Index total = data.rows();
  const Index num_vars = data.cols();
  if (lags < 1) throw DataError("lag order must be >= 1");
  if (lags >= total) {
    throw DataError("lag order " + std::to_string(lags) + " needs more than " +
                    std::to_string(total) + " rows");
  }
  LagDesign design;
  design.lags = lags;
  design.num_variables = num_vars;
  const Index n = total - lags;
  design.X.resize(n, num_vars * lags);
  design.Y = data.bottomRows(n);
  for (int p = 1; p <= lags; ++p) {
    design.X.middleCols((p - 1) * num_vars, num_vars) = data.middleRows(lags - p, n);
    for (Index j = 0; j < num_vars; ++j) design.column_map.push_back({p, j});
  }
  design.response_time.resize(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) design.response_time[static_cast<std::size_t>(r)] = lags + r;
  return design;
}

LagDesign build_lag_design(const Panel& panel, int lags) { return build_lag_design(panel.data, lags); }

}  // namespace lvar
