#pragma once

// Independent reference solvers used only by the tests. None of these call
// into the library's solvers or transforms.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Canonical objective: s/(2n)||b - A x||^2 + sum levels |x|.
inline double lasso_objective(const MatrixXd& a, const VectorXd& b, const VectorXd& levels,
                              const VectorXd& x, double loss_scale = 1.0) {
  const double n = static_cast<double>(a.rows());
  return 0.5 * loss_scale / n * (b - a * x).squaredNorm() + levels.dot(x.cwiseAbs());
}

// Enumerates all 3^m sign patterns; for each, solves the stationarity system
// on the active set and keeps the sign-consistent candidate of least objective.
inline VectorXd sign_pattern_lasso(const MatrixXd& a, const VectorXd& b, const VectorXd& levels,
                                   double loss_scale = 1.0) {
  const Index m = a.cols();
  const double n = static_cast<double>(a.rows());
  const MatrixXd h = loss_scale / n * a.transpose() * a;
  const VectorXd c = loss_scale / n * a.transpose() * b;
  long patterns = 1;
  for (Index j = 0; j < m; ++j) patterns *= 3;
  VectorXd best = VectorXd::Zero(m);
  double best_value = lasso_objective(a, b, levels, best, loss_scale);
  std::vector<int> sign(static_cast<std::size_t>(m));
  for (long code = 0; code < patterns; ++code) {
    long rest = code;
    std::vector<Index> active;
    for (Index j = 0; j < m; ++j) {
      sign[static_cast<std::size_t>(j)] = static_cast<int>(rest % 3) - 1;
      rest /= 3;
      if (sign[static_cast<std::size_t>(j)] != 0) active.push_back(j);
    }
    if (active.empty()) continue;
    const auto k = static_cast<Index>(active.size());
    MatrixXd hs(k, k);
    VectorXd rhs(k);
    for (Index u = 0; u < k; ++u) {
      const Index ju = active[static_cast<std::size_t>(u)];
      rhs(u) = c(ju) - levels(ju) * sign[static_cast<std::size_t>(ju)];
      for (Index v = 0; v < k; ++v) hs(u, v) = h(ju, active[static_cast<std::size_t>(v)]);
    }
    Eigen::FullPivLU<MatrixXd> lu(hs);
    if (!lu.isInvertible()) continue;
    const VectorXd sol = lu.solve(rhs);
    bool consistent = true;
    VectorXd x = VectorXd::Zero(m);
    for (Index u = 0; u < k; ++u) {
      const Index ju = active[static_cast<std::size_t>(u)];
      if (sol(u) * sign[static_cast<std::size_t>(ju)] <= 0.0) consistent = false;
      x(ju) = sol(u);
    }
    if (!consistent) continue;
    const double value = lasso_objective(a, b, levels, x, loss_scale);
    if (value < best_value) {
      best_value = value;
      best = x;
    }
  }
  return best;
}

// A weighted penalty term on a set of entries of a coefficient matrix B:
// weight * ||B(entries)||_2 (an l1 term is a one-entry group).
struct PenaltyTerm {
  std::vector<std::pair<Index, Index>> entries;  // (row, col) of B
  double weight = 0.0;
};

inline double direct_objective(const MatrixXd& x, const MatrixXd& y, const MatrixXd& bmat,
                               double loss_divisor, const std::vector<PenaltyTerm>& terms) {
  double value = (y - x * bmat).squaredNorm() / loss_divisor;
  for (const auto& t : terms) {
    double ss = 0.0;
    for (auto [r, c] : t.entries) ss += bmat(r, c) * bmat(r, c);
    value += t.weight * std::sqrt(ss);
  }
  return value;
}

// FISTA with adaptive restart on (1/D)||Y - X B||_F^2 + sum_terms w_t ||B_t||_2.
// Entries not covered by any term are unpenalized.
inline MatrixXd fista(const MatrixXd& x, const MatrixXd& y, double loss_divisor,
                      const std::vector<PenaltyTerm>& terms, int max_iter = 400000,
                      double tol = 1e-14) {
  const MatrixXd gram = x.transpose() * x;
  const MatrixXd xty = x.transpose() * y;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
  const double lipschitz = 2.0 * eig.eigenvalues().maxCoeff() / loss_divisor;
  const double step = 1.0 / lipschitz;
  MatrixXd b = MatrixXd::Zero(x.cols(), y.cols());
  MatrixXd z = b;
  double t = 1.0;
  auto objective = [&](const MatrixXd& m) { return direct_objective(x, y, m, loss_divisor, terms); };
  double prev_value = objective(b);
  for (int it = 0; it < max_iter; ++it) {
    const MatrixXd grad = 2.0 / loss_divisor * (gram * z - xty);
    MatrixXd next = z - step * grad;
    for (const auto& term : terms) {
      double ss = 0.0;
      for (auto [r, c] : term.entries) ss += next(r, c) * next(r, c);
      const double norm = std::sqrt(ss);
      const double shrink = norm > step * term.weight ? 1.0 - step * term.weight / norm : 0.0;
      for (auto [r, c] : term.entries) next(r, c) *= shrink;
    }
    const double value = objective(next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (value > prev_value) {
      // restart momentum
      z = b;
      t = 1.0;
      continue;
    }
    const double change = (next - b).cwiseAbs().maxCoeff();
    z = next + ((t - 1.0) / t_next) * (next - b);
    b = next;
    t = t_next;
    prev_value = value;
    if (change < tol) break;
  }
  return b;
}

}  // namespace oracle
