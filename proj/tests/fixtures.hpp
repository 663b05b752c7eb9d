#pragma once

// Shared fixtures for estimator checks: a small simulated VAR and the penalty
// terms of each estimator's objective written out entry by entry.

#include "lvar/estimators.hpp"
#include "oracles.hpp"

#include <random>
#include <vector>

namespace fixtures {

using namespace lvar;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Stable VAR(2) on 3 variables with own and cross effects at lag 1.
inline MatrixXd simulate_small_var(Index rows, unsigned seed, Index num_vars = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXd b1 = 0.5 * MatrixXd::Identity(num_vars, num_vars);
  MatrixXd b2 = MatrixXd::Zero(num_vars, num_vars);
  if (num_vars >= 2) {
    b1(0, 1) = 0.3;
    b2(1, 1) = -0.2;
  }
  if (num_vars >= 3) b1(2, 0) = -0.25;
  MatrixXd y = MatrixXd::Zero(rows + 50, num_vars);
  for (Index t = 2; t < y.rows(); ++t) {
    VectorXd e(num_vars);
    for (Index j = 0; j < num_vars; ++j) e(j) = normal(rng);
    y.row(t) = y.row(t - 1) * b1 + y.row(t - 2) * b2 + e.transpose();
  }
  return y.bottomRows(rows);
}

inline SolverConfig tight() {
  SolverConfig cfg;
  cfg.tolerance = 1e-12;
  cfg.max_sweeps = 200000;
  return cfg;
}

inline double lag_weight(const LagDecayMatrix& decay, int lag, double w) { return decay.multiplier(lag) * w; }

// Penalty terms of the per-column objective (1/n)||y_j - X b||^2 + sum c |b|
// laid out for the oracles (column 0 of a one-column B).
inline std::vector<oracle::PenaltyTerm> no_grouping_terms(const LagDesign& d, Index j, double lambda,
                                                   double gamma, const LagDecayMatrix& decay,
                                                   const std::vector<double>& w) {
  std::vector<oracle::PenaltyTerm> terms;
  for (Index r = 0; r < d.X.cols(); ++r) {
    const auto [p, i] = d.column_map[static_cast<std::size_t>(r)];
    const double level = (i == j ? gamma : lambda) * lag_weight(decay, p, w[static_cast<std::size_t>(i)]);
    terms.push_back({{{r, 0}}, level});
  }
  return terms;
}

// Terms for one segment of response columns `cols` in the local column order.
inline std::vector<oracle::PenaltyTerm> segment_terms(const LagDesign& d, const std::vector<Index>& cols,
                                               double outside, double own, double within,
                                               const LagDecayMatrix& decay,
                                               const std::vector<double>& w) {
  std::vector<oracle::PenaltyTerm> terms;
  for (Index r = 0; r < d.X.cols(); ++r) {
    const auto [p, i] = d.column_map[static_cast<std::size_t>(r)];
    const double scale = lag_weight(decay, p, w[static_cast<std::size_t>(i)]);
    Index local = -1;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == i) local = static_cast<Index>(k);
    }
    if (local < 0) {
      oracle::PenaltyTerm g{{}, outside * scale};
      for (std::size_t k = 0; k < cols.size(); ++k) g.entries.push_back({r, static_cast<Index>(k)});
      terms.push_back(g);
      continue;
    }
    terms.push_back({{{r, local}}, own * scale});
    if (cols.size() >= 2) {
      oracle::PenaltyTerm g{{}, within * scale};
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (static_cast<Index>(k) != local) g.entries.push_back({r, static_cast<Index>(k)});
      }
      terms.push_back(g);
    }
  }
  return terms;
}

inline MatrixXd columns_of(const MatrixXd& m, const std::vector<Index>& cols) {
  MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = m.col(cols[k]);
  return out;
}

}  // namespace fixtures
