#include <doctest.h>

#include "lvar/errors.hpp"
#include "lvar/solvers.hpp"
#include "oracles.hpp"

#include <random>

using namespace lvar;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

SolverConfig tight() {
  SolverConfig cfg;
  cfg.tolerance = 1e-12;
  return cfg;
}

void check_monotone(const SolveResult& r) {
  for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
    CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] + 1e-12 * (1.0 + std::abs(r.objective_trace[k - 1])));
  }
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(0.0, 0.0) == 0.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(1.0, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
}

TEST_CASE("loss forms map onto the canonical level") {
  CHECK(canonical_level(0.4, LossForm::kHalfMeanSquare) == 0.4);
  CHECK(canonical_level(0.4, LossForm::kMeanSquare) == doctest::Approx(0.2));
  CHECK(canonical_level(0.4, LossForm::kMeanSquareTwiceLevel) == doctest::Approx(0.4));
  CHECK(canonical_level(0.4, LossForm::kSumSquareScaledLevel) == doctest::Approx(0.2));

  // Each source form and its canonical image share the same minimizer.
  std::mt19937_64 rng(3);
  const MatrixXd a = gaussian(25, 3, rng);
  const VectorXd b = gaussian(25, 1, rng);
  const double n = 25.0;
  const double level = 0.3;
  const VectorXd beta = solve_lasso(make_lasso_problem(a, b, VectorXd::Constant(3, canonical_level(level, LossForm::kSumSquareScaledLevel))), tight()).beta;
  auto source = [&](const VectorXd& x) { return (b - a * x).squaredNorm() + n * level * x.lpNorm<1>(); };
  std::mt19937_64 prng(4);
  std::uniform_real_distribution<double> unif(-1e-3, 1e-3);
  for (int k = 0; k < 200; ++k) {
    VectorXd d(3);
    for (Index i = 0; i < 3; ++i) d(i) = unif(prng);
    CHECK(source(beta) <= source(beta + d) + 1e-12);
  }
}

TEST_CASE("problem validation") {
  CHECK_THROWS_AS(make_lasso_problem(MatrixXd::Ones(3, 2), VectorXd::Ones(4), VectorXd::Zero(2)), DataError);
  CHECK_THROWS_AS(make_lasso_problem(MatrixXd::Ones(3, 2), VectorXd::Ones(3), VectorXd::Constant(2, -1.0)),
                  DataError);
  MatrixXd bad = MatrixXd::Ones(3, 2);
  bad(1, 1) = NAN;
  CHECK_THROWS_AS(make_lasso_problem(bad, VectorXd::Ones(3), VectorXd::Zero(2)), DataError);
  SolverConfig cfg;
  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("group partition validation") {
  CHECK_THROWS_AS(GroupPartition(4, {{{}, 1.0}}), DataError);
  CHECK_THROWS_AS(GroupPartition(4, {{{0, 1}, 1.0}, {{1, 2}, 1.0}}), DataError);
  CHECK_THROWS_AS(GroupPartition(4, {{{0, 4}, 1.0}}), DataError);
  CHECK_THROWS_AS(GroupPartition(4, {{{0}, -1.0}}), DataError);
  GroupPartition part(5, {{{3, 1}, 1.0}});
  CHECK(part.singletons() == std::vector<Index>{0, 2, 4});
}

TEST_CASE("zero levels give least squares") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const MatrixXd a = gaussian(30, 4, rng);
    const VectorXd b = gaussian(30, 1, rng);
    const auto r = solve_lasso(make_lasso_problem(a, b, VectorXd::Zero(4)), tight());
    const VectorXd ols = a.colPivHouseholderQr().solve(b);
    CHECK(r.converged);
    CHECK((r.beta - ols).cwiseAbs().maxCoeff() < 1e-8);
    check_monotone(r);
  }
}

TEST_CASE("levels at lambda_max shrink everything") {
  std::mt19937_64 rng(12);
  const MatrixXd a = gaussian(20, 5, rng);
  const VectorXd b = gaussian(20, 1, rng);
  auto problem = make_lasso_problem(a, b, VectorXd::Zero(5));
  const double lmax = lambda_max(problem);
  CHECK(lmax == doctest::Approx((a.transpose() * b).cwiseAbs().maxCoeff() / 20.0));
  problem.levels.setConstant(lmax);
  CHECK(solve_lasso(problem, tight()).beta.isZero(0.0));
  problem.levels.setConstant(0.99 * lmax);
  CHECK(!solve_lasso(problem, tight()).beta.isZero(0.0));
}

TEST_CASE("lasso matches sign-pattern enumeration") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.01, 0.4);
  for (int rep = 0; rep < 30; ++rep) {
    const MatrixXd a = gaussian(20, 3, rng);
    const VectorXd b = a * VectorXd::LinSpaced(3, -1.0, 1.0) + gaussian(20, 1, rng);
    VectorXd levels(3);
    for (Index j = 0; j < 3; ++j) levels(j) = unif(rng);
    const auto r = solve_lasso(make_lasso_problem(a, b, levels), tight());
    const VectorXd expect = oracle::sign_pattern_lasso(a, b, levels);
    CHECK((r.beta - expect).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(r.kkt_violation < 1e-8);
    check_monotone(r);
  }
}

TEST_CASE("orthonormal group shrinkage has a closed form") {
  std::mt19937_64 rng(31);
  const Index n = 12;
  const MatrixXd q = gaussian(n, 3, rng).householderQr().householderQ() * MatrixXd::Identity(n, 3);
  const MatrixXd a = std::sqrt(static_cast<double>(n)) * q;  // A'A / n = I
  const VectorXd b = gaussian(n, 1, rng);
  const VectorXd bhat = a.transpose() * b / static_cast<double>(n);
  for (double level : {0.0, 0.2 * bhat.norm(), 0.7 * bhat.norm(), 1.5 * bhat.norm()}) {
    auto problem = make_lasso_problem(a, b, VectorXd::Zero(3));
    GroupPartition part(3, {{{0, 1, 2}, level}});
    const auto r = solve_group_lasso(problem, part, tight());
    const VectorXd expect = std::max(0.0, 1.0 - level / bhat.norm()) * bhat;
    CHECK((r.beta - expect).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("group levels above the gradient norm at zero shrink everything") {
  std::mt19937_64 rng(32);
  const MatrixXd a = gaussian(25, 5, rng);
  const VectorXd b = gaussian(25, 1, rng);
  auto problem = make_lasso_problem(a, b, VectorXd::Zero(5));
  const VectorXd g = loss_gradient(problem, VectorXd::Zero(5));
  problem.levels.setConstant(g.cwiseAbs().maxCoeff());
  GroupPartition part(5, {{{0, 1}, g.head(2).norm()}, {{2, 3}, g.segment(2, 2).norm()}});
  CHECK(solve_group_lasso(problem, part, tight()).beta.isZero(0.0));
}

TEST_CASE("two groups and a singleton pass subgradient and perturbation checks") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    const MatrixXd a = gaussian(30, 5, rng);
    VectorXd truth(5);
    truth << 1.0, -0.5, 0.05, 0.0, 0.8;
    const VectorXd b = a * truth + 0.5 * gaussian(30, 1, rng);
    VectorXd levels = VectorXd::Zero(5);
    levels(4) = 0.1;
    auto problem = make_lasso_problem(a, b, levels);
    GroupPartition part(5, {{{0, 1}, 0.15}, {{2, 3}, 0.25}});
    const auto r = solve_group_lasso(problem, part, tight());
    CHECK(r.converged);
    CHECK(r.kkt_violation < 1e-8);
    check_monotone(r);
    const double best = group_lasso_objective(problem, part, r.beta);
    std::mt19937_64 prng(100 + rep);
    int worse = 0;
    for (int k = 0; k < 10000; ++k) {
      VectorXd d(5);
      for (Index i = 0; i < 5; ++i) d(i) = unif(prng);
      d *= 1e-3 / d.norm();
      if (group_lasso_objective(problem, part, r.beta + d) < best - 1e-13) ++worse;
    }
    CHECK(worse == 0);
  }
}

TEST_CASE("group lasso matches an independent proximal-gradient solve") {
  std::mt19937_64 rng(34);
  for (int rep = 0; rep < 5; ++rep) {
    const MatrixXd a = gaussian(30, 5, rng);
    const VectorXd b = a * VectorXd::LinSpaced(5, 1.0, -1.0) + gaussian(30, 1, rng);
    VectorXd levels = VectorXd::Zero(5);
    levels(4) = 0.2;
    auto problem = make_lasso_problem(a, b, levels);
    GroupPartition part(5, {{{0, 1}, 0.3}, {{2, 3}, 0.1}});
    const auto r = solve_group_lasso(problem, part, tight());
    // (1/(2n))||.||^2 + l||.|| equals (1/(2n)) of (||.||^2 + 2 n l ||.||)
    const double n = 30.0;
    std::vector<oracle::PenaltyTerm> terms{{{{0, 0}, {1, 0}}, 0.3 * 2.0 * n},
                                           {{{2, 0}, {3, 0}}, 0.1 * 2.0 * n},
                                           {{{4, 0}}, 0.2 * 2.0 * n}};
    const VectorXd expect = oracle::fista(a, b, 1.0, terms);
    CHECK((r.beta - expect).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("warm and cold starts reach the same objective") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    const MatrixXd a = gaussian(40, 6, rng);
    const VectorXd b = gaussian(40, 1, rng);
    auto problem = make_lasso_problem(a, b, VectorXd::Constant(6, 0.05));
    GroupPartition part(6, {{{0, 1, 2}, 0.1}});
    SolverConfig cold;
    SolverConfig warm;
    warm.warm_start = 3.0 * gaussian(6, 1, rng);
    const double f_cold = lasso_objective(problem, solve_lasso(problem, cold).beta);
    const double f_warm = lasso_objective(problem, solve_lasso(problem, warm).beta);
    CHECK(std::abs(f_cold - f_warm) <= 10 * cold.tolerance);
    const double g_cold = group_lasso_objective(problem, part, solve_group_lasso(problem, part, cold).beta);
    const double g_warm = group_lasso_objective(problem, part, solve_group_lasso(problem, part, warm).beta);
    CHECK(std::abs(g_cold - g_warm) <= 10 * cold.tolerance);
  }
}

TEST_CASE("scaling loss and levels together leaves the minimizer unchanged") {
  std::mt19937_64 rng(42);
  const MatrixXd a = gaussian(30, 4, rng);
  const VectorXd b = gaussian(30, 1, rng);
  const VectorXd levels = VectorXd::Constant(4, 0.08);
  const VectorXd base = solve_lasso(make_lasso_problem(a, b, levels), tight()).beta;
  for (double c : {0.1, 3.0, 250.0}) {
    const VectorXd scaled = solve_lasso(make_lasso_problem(a, b, c * levels, c), tight()).beta;
    CHECK((scaled - base).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("zero response gives zero coefficients") {
  std::mt19937_64 rng(43);
  const MatrixXd a = gaussian(10, 3, rng);
  auto problem = make_lasso_problem(a, VectorXd::Zero(10), VectorXd::Constant(3, 0.01));
  CHECK(solve_lasso(problem, {}).beta.isZero(0.0));
  GroupPartition part(3, {{{0, 2}, 0.01}});
  CHECK(solve_group_lasso(problem, part, {}).beta.isZero(0.0));
}

TEST_CASE("non-convergence is flagged rather than thrown") {
  std::mt19937_64 rng(44);
  MatrixXd a = gaussian(30, 4, rng);
  a.col(1) = a.col(0) + 1e-3 * a.col(1);  // strongly correlated columns converge slowly
  const VectorXd b = gaussian(30, 1, rng);
  SolverConfig cfg;
  cfg.max_sweeps = 1;
  cfg.tolerance = 1e-14;
  const auto r = solve_lasso(make_lasso_problem(a, b, VectorXd::Zero(4)), cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.sweeps == 1);
  CHECK(r.beta.allFinite());
}

TEST_CASE("rank-deficient designs still satisfy the optimality conditions") {
  std::mt19937_64 rng(45);
  MatrixXd a = gaussian(15, 4, rng);
  a.col(3) = a.col(0);
  const VectorXd b = gaussian(15, 1, rng);
  auto problem = make_lasso_problem(a, b, VectorXd::Constant(4, 0.05));
  const auto r = solve_lasso(problem, tight());
  CHECK(r.converged);
  CHECK(lasso_kkt_violation(problem, r.beta) < 1e-8);
  GroupPartition part(4, {{{0, 3}, 0.05}});
  const auto g = solve_group_lasso(problem, part, tight());
  CHECK(g.converged);
  CHECK(group_lasso_kkt_violation(problem, part, g.beta) < 1e-8);
}
