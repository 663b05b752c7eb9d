#pragma once

#include "lvar/panel.hpp"
#include "lvar/solvers.hpp"

#include <Eigen/Dense>

#include <compare>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lvar {

enum class GroupingMode { kUniversal, kNoGrouping, kSegmentized };

GroupingMode parse_grouping_mode(std::string_view text);
std::string_view to_string(GroupingMode mode);

/// Shape of the lag penalty multiplier m(p): p^a (power, default),
/// (1 + log p)^a, or exp(a p). All equal 1 everywhere when a = 0.
enum class DecayKind { kPower, kLog, kExp };

DecayKind parse_decay_kind(std::string_view text);
std::string_view to_string(DecayKind kind);

/// Diagonal lag-decay matrix diag[m(1), ..., m(P)] (x) I_J.
struct LagDecayMatrix {
  DecayKind kind = DecayKind::kPower;
  double alpha = 0.0;
  int lags = 1;
  Index num_variables = 1;

  double multiplier(int lag) const;
  Eigen::VectorXd diagonal() const;
};

/// Hyperparameters of one estimator. Only the fields of `mode` are read:
///   universal    lambda, gamma
///   no_grouping  column_lambda, column_gamma (one per variable), column_alpha
///                (optional)
///   segmentized  segments, segment_lambda, segment_gamma, segment_eta,
///                segment_alpha (optional)
struct PenaltySpec {
  GroupingMode mode = GroupingMode::kNoGrouping;
  double alpha = 1.0;
  DecayKind decay = DecayKind::kPower;

  double lambda = 0.0;
  double gamma = 0.0;

  std::vector<double> column_lambda;
  std::vector<double> column_gamma;
  // Optional per-column decay exponents overriding alpha (no_grouping only).
  std::vector<double> column_alpha;

  std::vector<std::vector<Index>> segments;
  std::vector<double> segment_lambda;
  std::vector<double> segment_gamma;
  std::vector<double> segment_eta;
  // Optional per-segment decay exponents overriding alpha.
  std::vector<double> segment_alpha;

  // Throws ConfigError when the active mode's fields are missing, negative or
  // (segmentized) the segments do not partition {0..J-1}.
  void validate(Index num_variables) const;

  static PenaltySpec universal(double lambda, double gamma, double alpha);
  static PenaltySpec no_grouping(Index num_variables, double lambda, double gamma, double alpha);
  static PenaltySpec segmentized(std::vector<std::vector<Index>> segments, double lambda,
                                 double gamma, double eta, double alpha);
};

struct OwnBoost {
  Index variable = 0;
  double mu = 1.0;
};

/// Diagonal of (W P)^-1, or (W' P)^-1 when `boost` scales the own-lag columns
/// of one variable by mu. Entry for (lag p, variable i) is
/// 1 / (m(p) * w_i * [i == boost.variable ? mu : 1]).
Eigen::VectorXd build_transform(std::span<const double> weights, const LagDecayMatrix& decay,
                                std::optional<OwnBoost> boost = std::nullopt);

/// P x J x J coefficient array; entry (p, i, j) is the effect of variable i at
/// lag p on variable j. Stored as the JP x J matrix B of the compact form.
class CoefTensor {
 public:
  CoefTensor() = default;
  CoefTensor(int lags, Index num_variables)
      : lags_(lags), num_variables_(num_variables),
        b_(Eigen::MatrixXd::Zero(num_variables * lags, num_variables)) {}

  int lags() const { return lags_; }
  Index num_variables() const { return num_variables_; }
  double& operator()(int lag, Index from, Index to) { return b_(row(lag, from), to); }
  double operator()(int lag, Index from, Index to) const { return b_(row(lag, from), to); }
  Index row(int lag, Index from) const { return (lag - 1) * num_variables_ + from; }

  Eigen::MatrixXd& matrix() { return b_; }
  const Eigen::MatrixXd& matrix() const { return b_; }
  // J x J block B_p.
  Eigen::MatrixXd lag_matrix(int lag) const { return b_.middleRows((lag - 1) * num_variables_, num_variables_); }

 private:
  int lags_ = 0;
  Index num_variables_ = 0;
  Eigen::MatrixXd b_;
};

struct CoefIndex {
  int lag = 1;
  Index from = 0;
  Index to = 0;
  auto operator<=>(const CoefIndex&) const = default;
};

/// Selected coefficients: `others` (S1, off-diagonal) and `own` (S2, diagonal).
struct Support {
  std::vector<CoefIndex> others;
  std::vector<CoefIndex> own;

  std::size_t size() const { return others.size() + own.size(); }
  std::size_t others_for(Index to) const;
  std::size_t own_for(Index to) const;
};

Support support_of(const CoefTensor& coef, std::span<const Index> columns);

struct SolveRecord {
  std::vector<Index> columns;  // response columns this solve covered
  SolveResult result;          // coefficients in transformed coordinates
};

struct FitResult {
  CoefTensor selected;
  CoefTensor refit;
  std::vector<Index> columns;
  Support support;
  std::vector<SolveRecord> solves;
  PenaltySpec spec;
  bool refit_ok = false;
  bool refit_rank_deficient = false;

  bool converged() const;
  double converged_fraction() const;
  // Refit coefficients when available, otherwise the penalized ones.
  const CoefTensor& coefficients() const { return refit_ok ? refit : selected; }
};

struct FitOptions {
  // Variable weights w_i; empty means all ones.
  std::vector<double> weights;
  bool refit = true;
  // Solutions of a previous fit with the same shape are reused as warm starts.
  const FitResult* warm_start = nullptr;
};

FitResult fit_no_grouping(const LagDesign& design, Index column, const PenaltySpec& spec,
                          const SolverConfig& config, const FitOptions& options = {});
FitResult fit_universal(const LagDesign& design, const PenaltySpec& spec,
                        const SolverConfig& config, const FitOptions& options = {});
FitResult fit_segment(const LagDesign& design, std::size_t segment, const PenaltySpec& spec,
                      const SolverConfig& config, const FitOptions& options = {});
FitResult fit_segmentized(const LagDesign& design, const PenaltySpec& spec,
                          const SolverConfig& config, const FitOptions& options = {},
                          int threads = 1);

/// Fits the response columns `columns` (all when empty) with the estimator
/// selected by spec.mode; independent column/segment fits run in parallel.
FitResult fit_var(const LagDesign& design, const PenaltySpec& spec, const SolverConfig& config,
                  const FitOptions& options = {}, std::span<const Index> columns = {},
                  int threads = 1);

/// Combines fits over disjoint response columns.
FitResult merge_fits(std::vector<FitResult> parts);

struct RefitResult {
  CoefTensor coef;
  bool rank_deficient = false;
};

/// Least squares on exactly the supported design columns of each response
/// column; everything else is 0. Throws DataError when a column's support is
/// larger than the number of observations. Rank-deficient supports fall back
/// to the minimum-norm solution and are flagged.
RefitResult ols_refit(const LagDesign& design, const Support& support,
                      std::span<const Index> columns);

}  // namespace lvar
