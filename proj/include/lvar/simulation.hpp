#pragma once

#include "lvar/estimators.hpp"
#include "lvar/panel.hpp"
#include "lvar/solvers.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string_view>
#include <vector>

namespace lvar {

/// Independent stream for (seed, a, b): every trial owns one.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

/// Largest eigenvalue modulus of the VAR companion matrix.
double companion_spectral_radius(const CoefTensor& coef);

/// Simulates Y_t = sum_p B_p' Y_{t-p} + diag(scale) e_t with e_t ~ N(0, I),
/// starting from zeros and discarding `burn_in` leading draws.
Eigen::MatrixXd simulate_var(const CoefTensor& coef, const Eigen::VectorXd& scale, Index rows,
                             Index burn_in, std::mt19937_64& rng);

struct SparseVarTruth {
  CoefTensor coef;
  Support support;  // nonzero entries over every response column
  double sigma = 1.0;
  std::size_t p0 = 0;  // off-diagonal nonzeros per response column
  std::size_t q0 = 0;  // own-lag nonzeros per response column
  double spectral_radius = 0.0;
};

struct SparseVarParams {
  Index num_variables = 2;
  int lags = 1;
  std::size_t p0 = 0;
  std::size_t q0 = 1;
  double min_magnitude = 0.3;
  double max_magnitude = 0.5;
  double sigma = 1.0;
  // Innovation scale per variable; empty means sigma for all.
  std::vector<double> innovation_scale;
  Index rows = 100;
  std::uint64_t seed = 1;
  double max_radius = 0.95;
  int max_tries = 1000;

  // Throws ConfigError for infeasible counts or invalid magnitudes.
  void validate() const;
};

/// Rejection-samples supports and signed magnitudes until the companion
/// spectral radius is below max_radius. Throws DataError after max_tries.
SparseVarTruth draw_sparse_truth(const SparseVarParams& params, std::mt19937_64& rng);

struct SimulatedVar {
  SparseVarTruth truth;
  Panel panel;
};

/// Draws a truth and simulates `rows` observations after a burn-in of 5 P J.
SimulatedVar generate_sparse_var(const SparseVarParams& params);

enum class ScheduleKind { kOracle, kAdaptive };

ScheduleKind parse_schedule_kind(std::string_view text);
std::string_view to_string(ScheduleKind kind);

/// Penalty levels in the ||r||^2 + T sum level_i |beta_i| form, as functions
/// of the sample size T.
///   oracle:   on_scale T^(-1/2 - epsilon) on the true support,
///             off_scale T^(-1/2 + epsilon) elsewhere
///   adaptive: adaptive_scale T^(-adaptive_power) / |OLS estimate|
struct PenaltySchedule {
  ScheduleKind kind = ScheduleKind::kOracle;
  double epsilon = 0.25;
  double on_scale = 1.0;
  double off_scale = 2.0;
  double adaptive_scale = 3.0;
  double adaptive_power = 0.75;

  double on_support(double rows) const;
  double off_support(double rows) const;
  void validate() const;
};

struct RecoveryParams {
  SparseVarParams var;  // rows and seed are set per sample size and trial
  std::vector<Index> sample_sizes{200, 2000};
  int trials = 100;
  PenaltySchedule schedule;
  Index target = 0;  // response column studied
  int threads = 1;
  SolverConfig solver;

  void validate() const;
};

struct RecoveryRow {
  Index rows = 0;
  int trials = 0;
  double exact_rate = 0.0;  // both S1 and S2 recovered
  double s1_rate = 0.0;
  double s2_rate = 0.0;
  double mean_false_positives = 0.0;
  double mean_false_negatives = 0.0;
  double false_positive_rate = 0.0;  // false positives per truly-zero coefficient
  double mean_l2_error = 0.0;        // ||beta_1 - beta*_1||
  double median_oracle_ratio = 0.0;  // penalized vs OLS on the true support
  double median_refit_ratio = 0.0;   // refit on the selected support vs oracle
  int failures = 0;
  int non_converged = 0;
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;
};

/// For each sample size and trial: draw a truth, simulate, solve the target
/// equation with per-coefficient levels from the schedule, and compare the
/// selected supports with the truth. Fit failures are counted, not thrown.
RecoveryReport recovery_experiment(const RecoveryParams& params);

enum class DependenceKind { kMovingAverage, kAutoregressive };

/// Regressors x_tp = u_{t-p} for an MA(k) process u_t = sum_{l<=k} n_{t-l}
/// (dependence measure k + 1) or an AR(1) process u_t = phi u_{t-1} + n_t
/// (dependence measure T).
struct DependenceDesign {
  DependenceKind kind = DependenceKind::kMovingAverage;
  int order = 0;      // k
  double phi = 0.5;   // AR coefficient
  double dependence_measure(Index rows) const;
};

struct DependenceParams {
  std::vector<DependenceDesign> designs;
  Index rows = 500;
  int lags = 50;
  int sparsity = 3;
  double magnitude = 2.0;
  double sigma = 1.0;
  double delta = 0.5;      // delta'
  double tail_q = 0.05;  // C' is the (1 - q)-quantile of the pilot draws
  int trials = 100;
  int pilot_trials = 100;  // draws used to estimate C'
  int kappa_budget = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  SolverConfig solver;

  void validate() const;
};

struct DependenceRow {
  int order = 0;
  double measure = 0.0;
  Index rows = 0;
  int lags = 0;
  int sparsity = 0;
  int trials = 0;
  double lambda = 0.0;
  double c_prime = 0.0;
  double mean_prediction_error = 0.0;
  double mean_l1_error = 0.0;
  double mean_support = 0.0;
  double mean_kappa = 0.0;
  double bound_fraction = 0.0;  // prediction bound held, among unflagged trials
  int flagged = 0;              // kappa estimate ~ 0, bound not checked
  double zero_fraction = 0.0;   // trials with an all-zero estimate
};

struct DependenceReport {
  std::vector<DependenceRow> rows;
};

/// Lasso (1/n)||e - x theta||^2 + 2 lambda ||theta||_1 with
/// lambda = sqrt(m (log P)^(1 + delta') C' / T) on designs of growing dependence.
DependenceReport dependence_risk_experiment(const DependenceParams& params);

/// Heuristic restricted eigenvalue: smallest ||x D|| / (sqrt(T) ||D_R||) found
/// over cone directions ||D_Rc||_1 <= 3 ||D_R||_1, |R| <= s, with gram = x'x/T.
/// Candidates are eigenvectors, random cone directions and local refinements;
/// the result is an upper bound on the true constant.
double restricted_eigenvalue(const Eigen::MatrixXd& gram, int sparsity, int budget, std::uint64_t seed = 1);

void write_recovery_csv(std::ostream& out, const RecoveryReport& report);
void write_dependence_csv(std::ostream& out, const DependenceReport& report);

}  // namespace lvar
