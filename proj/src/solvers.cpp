#include "lvar/solvers.hpp"

#include "lvar/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

namespace lvar {

namespace {

std::atomic<long long> g_solves{0};
std::atomic<long long> g_non_converged{0};
std::atomic<double> g_max_kkt{0.0};

void record_solve(const SolveResult& result) {
  g_solves.fetch_add(1, std::memory_order_relaxed);
  if (!result.converged) g_non_converged.fetch_add(1, std::memory_order_relaxed);
  if (!result.converged) return;
  double seen = g_max_kkt.load(std::memory_order_relaxed);
  while (result.kkt_violation > seen &&
         !g_max_kkt.compare_exchange_weak(seen, result.kkt_violation, std::memory_order_relaxed)) {
  }
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Exact minimizer of 0.5 b'Hb - v'b + level ||b|| given H = Q diag(d) Q'.
Eigen::VectorXd group_minimizer(const Eigen::MatrixXd& q, const Eigen::VectorXd& d,
                                const Eigen::VectorXd& v, double level) {
  const double vnorm = v.norm();
  if (vnorm <= level) return Eigen::VectorXd::Zero(v.size());
  const Eigen::VectorXd vt = q.transpose() * v;
  const double dmax = std::max(d.maxCoeff(), 0.0);
  Eigen::VectorXd dd = d;
  for (Index i = 0; i < dd.size(); ++i) {
    if (dd(i) <= 1e-13 * dmax) dd(i) = 0.0;
  }
  if (level == 0.0) {
    Eigen::VectorXd coef(vt.size());
    for (Index i = 0; i < vt.size(); ++i) coef(i) = dd(i) > 0.0 ? vt(i) / dd(i) : 0.0;
    return q * coef;
  }
  // ||beta|| = t solves h(t) = sum vt_i^2 / (d_i t + level)^2 - 1 = 0, h decreasing.
  auto h = [&](double t) {
    double s = 0.0;
    for (Index i = 0; i < vt.size(); ++i) {
      const double den = dd(i) * t + level;
      s += vt(i) * vt(i) / (den * den);
    }
    return s - 1.0;
  };
  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (h(hi) > 0.0 && doublings < 400) {
    lo = hi;
    hi *= 2.0;
    ++doublings;
  }
  double t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double ht = h(t);
    if (ht > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double deriv = 0.0;
    for (Index i = 0; i < vt.size(); ++i) {
      const double den = dd(i) * t + level;
      deriv -= 2.0 * vt(i) * vt(i) * dd(i) / (den * den * den);
    }
    double next = deriv < 0.0 ? t - ht / deriv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * std::max(1.0, t) || hi - lo <= 1e-15 * std::max(1.0, hi)) {
      t = next;
      break;
    }
    t = next;
  }
  Eigen::VectorXd coef(vt.size());
  for (Index i = 0; i < vt.size(); ++i) coef(i) = t * vt(i) / (dd(i) * t + level);
  return q * coef;
}

struct GroupCache {
  Eigen::MatrixXd gram;  // loss_scale / n * A_g'A_g
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
};

class BlockCoordinateDescent {
 public:
  BlockCoordinateDescent(const LassoProblem& problem, const GroupPartition* groups,
                         const SolverConfig& config)
      : problem_(problem), groups_(groups), config_(config) {
    const Index m = problem.cols();
    const double n = static_cast<double>(problem.rows());
    scale_ = problem.loss_scale / n;
    diag_.resize(m);
    for (Index j = 0; j < m; ++j) diag_(j) = scale_ * problem.design->col_squared_norm(j);
    if (groups_ != nullptr) {
      for (const auto& g : groups_->groups()) {
        GroupCache cache;
        cache.gram = scale_ * problem.design->gram(g.columns);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cache.gram);
        cache.basis = eig.eigenvectors();
        cache.eigenvalues = eig.eigenvalues();
        caches_.push_back(std::move(cache));
      }
      singletons_ = groups_->singletons();
    } else {
      singletons_.resize(static_cast<std::size_t>(m));
      for (Index j = 0; j < m; ++j) singletons_[static_cast<std::size_t>(j)] = j;
    }
  }

  SolveResult run() {
    const Index m = problem_.cols();
    SolveResult result;
    result.beta = config_.warm_start ? *config_.warm_start : Eigen::VectorXd::Zero(m);
    beta_ = &result.beta;

    while (result.sweeps < config_.max_sweeps) {
      reset_residual();
      const double full_change = sweep(false);
      ++result.sweeps;
      result.objective_trace.push_back(objective());
      if (full_change < config_.tolerance) {
        // Small steps in badly scaled coordinates can hide a large gradient.
        if (kkt_violation() <= config_.kkt_tolerance) {
          result.converged = true;
          break;
        }
      }
      while (result.sweeps < config_.max_sweeps) {
        const double change = sweep(true);
        ++result.sweeps;
        result.objective_trace.push_back(objective());
        if (change < config_.tolerance) break;
      }
    }
    result.kkt_violation = kkt_violation();
    record_solve(result);
    return result;
  }

 private:
  double kkt_violation() const {
    return groups_ != nullptr ? group_lasso_kkt_violation(problem_, *groups_, *beta_)
                              : lasso_kkt_violation(problem_, *beta_);
  }

  void reset_residual() {
    residual_ = problem_.response - problem_.design->multiply(*beta_);
  }

  double objective() const {
    Eigen::VectorXd& beta = *beta_;
    double value = 0.5 * scale_ * residual_.squaredNorm();
    for (Index j : singletons_) value += problem_.levels(j) * std::abs(beta(j));
    if (groups_ != nullptr) {
      for (const auto& g : groups_->groups()) {
        double ss = 0.0;
        for (Index j : g.columns) ss += beta(j) * beta(j);
        value += g.level * std::sqrt(ss);
      }
    }
    return value;
  }

  // One pass over all blocks (groups first, then singletons). With
  // active_only, blocks that are currently zero are skipped.
  double sweep(bool active_only) {
    Eigen::VectorXd& beta = *beta_;
    double max_change = 0.0;
    if (groups_ != nullptr) {
      const auto& groups = groups_->groups();
      for (std::size_t k = 0; k < groups.size(); ++k) {
        const auto& g = groups[k];
        const auto size = static_cast<Index>(g.columns.size());
        Eigen::VectorXd current(size);
        bool nonzero = false;
        for (Index a = 0; a < size; ++a) {
          current(a) = beta(g.columns[static_cast<std::size_t>(a)]);
          nonzero = nonzero || current(a) != 0.0;
        }
        if (active_only && !nonzero) continue;
        Eigen::VectorXd v(size);
        for (Index a = 0; a < size; ++a) {
          v(a) = scale_ * problem_.design->col_dot(g.columns[static_cast<std::size_t>(a)], residual_);
        }
        v.noalias() += caches_[k].gram * current;
        const Eigen::VectorXd next =
            group_minimizer(caches_[k].basis, caches_[k].eigenvalues, v, g.level);
        for (Index a = 0; a < size; ++a) {
          const double delta = next(a) - current(a);
          if (delta == 0.0) continue;
          const Index j = g.columns[static_cast<std::size_t>(a)];
          problem_.design->col_axpy(j, -delta, residual_);
          beta(j) = next(a);
          max_change = std::max(max_change, std::abs(delta));
        }
      }
    }
    for (Index j : singletons_) {
      if (active_only && beta(j) == 0.0) continue;
      if (diag_(j) <= 0.0) {
        // Zero column: the loss does not depend on beta_j.
        if (beta(j) != 0.0) {
          max_change = std::max(max_change, std::abs(beta(j)));
          beta(j) = 0.0;
        }
        continue;
      }
      const double z = scale_ * problem_.design->col_dot(j, residual_) + diag_(j) * beta(j);
      const double next = soft_threshold(z, problem_.levels(j)) / diag_(j);
      const double delta = next - beta(j);
      if (delta != 0.0) {
        problem_.design->col_axpy(j, -delta, residual_);
        beta(j) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    return max_change;
  }

  const LassoProblem& problem_;
  const GroupPartition* groups_;
  const SolverConfig& config_;
  double scale_ = 1.0;
  Eigen::VectorXd diag_;
  std::vector<GroupCache> caches_;
  std::vector<Index> singletons_;
  Eigen::VectorXd residual_;
  Eigen::VectorXd* beta_ = nullptr;
};

}  // namespace

void LassoProblem::validate() const {
  if (!design) throw DataError("lasso problem has no design matrix");
  const Index n = design->rows();
  const Index m = design->cols();
  if (n < 1 || m < 1) throw DataError("lasso problem needs n >= 1 rows and m >= 1 columns");
  if (response.size() != n) {
    throw DataError("response has " + std::to_string(response.size()) + " entries, design has " +
                    std::to_string(n) + " rows");
  }
  if (levels.size() != m) {
    throw DataError("expected " + std::to_string(m) + " penalty levels, got " +
                    std::to_string(levels.size()));
  }
  if (!response.allFinite()) throw DataError("response has non-finite entries");
  for (Index j = 0; j < m; ++j) {
    if (!(levels(j) >= 0.0) || !std::isfinite(levels(j))) {
      throw DataError("penalty level " + std::to_string(j) + " must be finite and >= 0");
    }
  }
  if (!(loss_scale > 0.0) || !std::isfinite(loss_scale)) {
    throw DataError("loss scale must be finite and positive");
  }
}

LassoProblem make_lasso_problem(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd levels,
                                double loss_scale) {
  LassoProblem problem{std::make_shared<DenseDesign>(std::move(a)), std::move(b),
                       std::move(levels), loss_scale};
  problem.validate();
  return problem;
}

double canonical_level(double level, LossForm form) {
  switch (form) {
    case LossForm::kHalfMeanSquare:
      return level;
    case LossForm::kMeanSquare:
      return 0.5 * level;
    case LossForm::kMeanSquareTwiceLevel:
      return level;
    case LossForm::kSumSquareScaledLevel:
      return 0.5 * level;
  }
  return level;
}

GroupPartition::GroupPartition(Index num_columns, std::vector<PenaltyGroup> groups)
    : num_columns_(num_columns), groups_(std::move(groups)) {
  std::vector<char> used(static_cast<std::size_t>(num_columns), 0);
  for (const auto& g : groups_) {
    if (g.columns.empty()) throw DataError("penalty group must not be empty");
    if (!(g.level >= 0.0) || !std::isfinite(g.level)) {
      throw DataError("group penalty level must be finite and >= 0");
    }
    for (Index j : g.columns) {
      if (j < 0 || j >= num_columns) {
        throw DataError("group column " + std::to_string(j) + " out of range");
      }
      if (used[static_cast<std::size_t>(j)]) {
        throw DataError("column " + std::to_string(j) + " belongs to more than one group");
      }
      used[static_cast<std::size_t>(j)] = 1;
    }
  }
  for (Index j = 0; j < num_columns; ++j) {
    if (!used[static_cast<std::size_t>(j)]) singletons_.push_back(j);
  }
}

void SolverConfig::validate() const {
  if (max_sweeps < 1) throw ConfigError("max_sweeps must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (!(kkt_tolerance > 0.0)) throw ConfigError("solver KKT tolerance must be positive");
}

Eigen::VectorXd loss_gradient(const LassoProblem& problem, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd residual = problem.response - problem.design->multiply(beta);
  const double scale = problem.loss_scale / static_cast<double>(problem.rows());
  // Same per-column products as the coordinate updates, so thresholds agree exactly.
  Eigen::VectorXd gradient(problem.cols());
  for (Index j = 0; j < problem.cols(); ++j) gradient(j) = -(scale * problem.design->col_dot(j, residual));
  return gradient;
}

double lasso_objective(const LassoProblem& problem, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd residual = problem.response - problem.design->multiply(beta);
  return 0.5 * problem.loss_scale / static_cast<double>(problem.rows()) * residual.squaredNorm() +
         problem.levels.dot(beta.cwiseAbs());
}

double group_lasso_objective(const LassoProblem& problem, const GroupPartition& groups,
                             const Eigen::VectorXd& beta) {
  const Eigen::VectorXd residual = problem.response - problem.design->multiply(beta);
  double value =
      0.5 * problem.loss_scale / static_cast<double>(problem.rows()) * residual.squaredNorm();
  for (Index j : groups.singletons()) value += problem.levels(j) * std::abs(beta(j));
  for (const auto& g : groups.groups()) {
    double ss = 0.0;
    for (Index j : g.columns) ss += beta(j) * beta(j);
    value += g.level * std::sqrt(ss);
  }
  return value;
}

namespace {

double scalar_violation(double gradient, double level, double coef) {
  if (coef == 0.0) return std::max(0.0, std::abs(gradient) - level);
  return std::abs(gradient + level * sign(coef));
}

}  // namespace

double lasso_kkt_violation(const LassoProblem& problem, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd grad = loss_gradient(problem, beta);
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    worst = std::max(worst, scalar_violation(grad(j), problem.levels(j), beta(j)));
  }
  return worst;
}

double group_lasso_kkt_violation(const LassoProblem& problem, const GroupPartition& groups,
                                 const Eigen::VectorXd& beta) {
  const Eigen::VectorXd grad = loss_gradient(problem, beta);
  double worst = 0.0;
  for (Index j : groups.singletons()) {
    worst = std::max(worst, scalar_violation(grad(j), problem.levels(j), beta(j)));
  }
  for (const auto& g : groups.groups()) {
    double bnorm = 0.0;
    for (Index j : g.columns) bnorm += beta(j) * beta(j);
    bnorm = std::sqrt(bnorm);
    double ss = 0.0;
    for (Index j : g.columns) {
      const double term = bnorm == 0.0 ? grad(j) : grad(j) + g.level * beta(j) / bnorm;
      ss += term * term;
    }
    const double violation = bnorm == 0.0 ? std::max(0.0, std::sqrt(ss) - g.level) : std::sqrt(ss);
    worst = std::max(worst, violation);
  }
  return worst;
}

double lambda_max(const LassoProblem& problem) {
  return loss_gradient(problem, Eigen::VectorXd::Zero(problem.cols())).cwiseAbs().maxCoeff();
}

SolveResult solve_lasso(const LassoProblem& problem, const SolverConfig& config) {
  problem.validate();
  config.validate();
  if (config.warm_start && config.warm_start->size() != problem.cols()) {
    throw DataError("warm start has the wrong length");
  }
  return BlockCoordinateDescent(problem, nullptr, config).run();
}

SolveResult solve_group_lasso(const LassoProblem& problem, const GroupPartition& groups,
                              const SolverConfig& config) {
  problem.validate();
  config.validate();
  if (groups.num_columns() != problem.cols()) {
    throw DataError("group partition covers " + std::to_string(groups.num_columns()) +
                    " columns, problem has " + std::to_string(problem.cols()));
  }
  if (config.warm_start && config.warm_start->size() != problem.cols()) {
    throw DataError("warm start has the wrong length");
  }
  return BlockCoordinateDescent(problem, &groups, config).run();
}

SolverDiagnostics solver_diagnostics() {
  return {g_solves.load(), g_non_converged.load(), g_max_kkt.load()};
}

void reset_solver_diagnostics() {
  g_solves.store(0);
  g_non_converged.store(0);
  g_max_kkt.store(0.0);
}

}  // namespace lvar
