#pragma once

#include "lvar/design_matrix.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <vector>

namespace lvar {

/// Penalized least squares in one canonical form:
///
///   loss_scale / (2 n) * ||b - A beta||^2 + sum_j levels_j |beta_j|
///
/// (group penalties are added by solve_group_lasso). Every objective of the
/// estimators is mapped onto this form by rescaling its penalty levels, see
/// canonical_level().
struct LassoProblem {
  std::shared_ptr<const DesignMatrix> design;
  Eigen::VectorXd response;
  Eigen::VectorXd levels;
  double loss_scale = 1.0;

  Index rows() const { return design->rows(); }
  Index cols() const { return design->cols(); }
  // Throws DataError when shapes disagree, levels are negative or entries non-finite.
  void validate() const;
};

LassoProblem make_lasso_problem(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd levels,
                                double loss_scale = 1.0);

/// How a source objective normalizes its squared loss against the penalty.
enum class LossForm {
  kHalfMeanSquare,         // (1/2n)||r||^2 + l|b|   (canonical)
  kMeanSquare,             // (1/n)||r||^2 + l|b|
  kMeanSquareTwiceLevel,   // (1/n)||r||^2 + 2l|b|
  kSumSquareScaledLevel,   // ||r||^2 + n l|b|
};

double canonical_level(double level, LossForm form);

struct PenaltyGroup {
  std::vector<Index> columns;
  double level = 0.0;
};

/// Disjoint column groups carrying an l2 penalty. Columns outside every group
/// are l1 singletons whose levels come from LassoProblem::levels.
class GroupPartition {
 public:
  GroupPartition() = default;
  // Throws DataError on empty, overlapping or out-of-range groups and on negative levels.
  GroupPartition(Index num_columns, std::vector<PenaltyGroup> groups);

  const std::vector<PenaltyGroup>& groups() const { return groups_; }
  const std::vector<Index>& singletons() const { return singletons_; }
  Index num_columns() const { return num_columns_; }

 private:
  Index num_columns_ = 0;
  std::vector<PenaltyGroup> groups_;
  std::vector<Index> singletons_;
};

struct SolverConfig {
  int max_sweeps = 10000;
  // Converged when a full sweep moves no coefficient by more than
  // `tolerance` and the optimality conditions hold within `kkt_tolerance`.
  double tolerance = 1e-7;
  double kkt_tolerance = 1e-6;
  std::optional<Eigen::VectorXd> warm_start;

  void validate() const;
};

struct SolveResult {
  Eigen::VectorXd beta;
  std::vector<double> objective_trace;  // objective after each sweep
  bool converged = false;
  int sweeps = 0;
  double kkt_violation = 0.0;
};

inline double soft_threshold(double z, double tau) {
  if (z > tau) return z - tau;
  if (z < -tau) return z + tau;
  return 0.0;
}

// Gradient of the smooth part: -loss_scale / n * A'(b - A beta).
Eigen::VectorXd loss_gradient(const LassoProblem& problem, const Eigen::VectorXd& beta);
double lasso_objective(const LassoProblem& problem, const Eigen::VectorXd& beta);
double group_lasso_objective(const LassoProblem& problem, const GroupPartition& groups,
                             const Eigen::VectorXd& beta);

/// Largest violation of the (block) subgradient optimality conditions.
double lasso_kkt_violation(const LassoProblem& problem, const Eigen::VectorXd& beta);
double group_lasso_kkt_violation(const LassoProblem& problem, const GroupPartition& groups,
                                 const Eigen::VectorXd& beta);

/// Smallest uniform level at which beta = 0 is optimal: max_j |gradient_j(0)|.
double lambda_max(const LassoProblem& problem);

/// Cyclic coordinate descent with active-set sweeps. Non-convergence is
/// reported through SolveResult::converged, never thrown.
SolveResult solve_lasso(const LassoProblem& problem, const SolverConfig& config);

/// Block coordinate descent: each sweep updates every group exactly (secular
/// equation on the group's Gram eigenbasis), then every l1 singleton.
SolveResult solve_group_lasso(const LassoProblem& problem, const GroupPartition& groups,
                              const SolverConfig& config);

/// Process-wide counters over every solve since the last reset.
struct SolverDiagnostics {
  long long solves = 0;
  long long non_converged = 0;
  double max_kkt_violation = 0.0;  // over converged solves
};

SolverDiagnostics solver_diagnostics();
void reset_solver_diagnostics();

}  // namespace lvar
