#include <doctest.h>

#include "lvar/errors.hpp"
#include "lvar/simulation.hpp"

#include <cmath>
#include <sstream>

using namespace lvar;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double lag1_autocorrelation(const VectorXd& x) {
  const double mean = x.mean();
  const VectorXd c = x.array() - mean;
  const Index n = c.size();
  return c.head(n - 1).dot(c.tail(n - 1)) / c.squaredNorm();
}

// Stationary covariance of the stacked state by fixed-point iteration of
// S = A S A' + Q.
MatrixXd stationary_covariance(const CoefTensor& coef, const VectorXd& scale) {
  const Index j = coef.num_variables();
  const Index dim = j * coef.lags();
  MatrixXd a = MatrixXd::Zero(dim, dim);
  for (int p = 1; p <= coef.lags(); ++p) a.block(0, (p - 1) * j, j, j) = coef.lag_matrix(p).transpose();
  if (coef.lags() > 1) a.block(j, 0, dim - j, dim - j).setIdentity();
  MatrixXd q = MatrixXd::Zero(dim, dim);
  q.topLeftCorner(j, j) = scale.cwiseAbs2().asDiagonal();
  MatrixXd s = q;
  for (int it = 0; it < 5000; ++it) s = a * s * a.transpose() + q;
  return s.topLeftCorner(j, j);
}

RecoveryParams recovery_setup(int trials, std::vector<Index> sizes) {
  RecoveryParams params;
  params.var.num_variables = 10;
  params.var.lags = 2;
  params.var.p0 = 2;
  params.var.q0 = 1;
  params.var.seed = 11;
  params.sample_sizes = std::move(sizes);
  params.trials = trials;
  return params;
}

DependenceParams dependence_setup(std::vector<int> orders, Index rows, int sparsity) {
  DependenceParams params;
  for (int k : orders) params.designs.push_back({DependenceKind::kMovingAverage, k, 0.5});
  params.rows = rows;
  params.lags = 20;
  params.sparsity = sparsity;
  params.trials = 30;
  params.pilot_trials = 30;
  params.kappa_budget = 2000;
  params.seed = 5;
  return params;
}

}  // namespace

TEST_CASE("seeded streams are reproducible and distinct") {
  auto a = make_rng(3, 1, 2);
  auto b = make_rng(3, 1, 2);
  auto c = make_rng(3, 2, 1);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
}

TEST_CASE("companion spectral radius") {
  CoefTensor ar(1, 1);
  ar(1, 0, 0) = -0.5;
  CHECK(companion_spectral_radius(ar) == doctest::Approx(0.5).epsilon(1e-12));

  // y_t = 0.5 y_{t-1} + 0.3 y_{t-2}: roots of z^2 - 0.5 z - 0.3.
  CoefTensor ar2(2, 1);
  ar2(1, 0, 0) = 0.5;
  ar2(2, 0, 0) = 0.3;
  const double root = (0.5 + std::sqrt(0.25 + 1.2)) / 2.0;
  CHECK(companion_spectral_radius(ar2) == doctest::Approx(root).epsilon(1e-12));

  // Triangular VAR(1): eigenvalues are the diagonal.
  CoefTensor tri(1, 2);
  tri(1, 0, 0) = 0.2;
  tri(1, 1, 1) = -0.7;
  tri(1, 0, 1) = 5.0;
  CHECK(companion_spectral_radius(tri) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("white noise has negligible autocorrelation") {
  const Index rows = 20000;
  CoefTensor zero(1, 3);
  auto rng = make_rng(1);
  const MatrixXd y = simulate_var(zero, VectorXd::Ones(3), rows, 10, rng);
  for (Index j = 0; j < 3; ++j) {
    CHECK(std::abs(lag1_autocorrelation(y.col(j))) < 3.0 / std::sqrt(static_cast<double>(rows)));
  }
}

TEST_CASE("AR(1) autocorrelation matches its coefficient") {
  CoefTensor ar(1, 1);
  ar(1, 0, 0) = 0.5;
  auto rng = make_rng(2);
  const MatrixXd y = simulate_var(ar, VectorXd::Ones(1), 20000, 50, rng);
  CHECK(lag1_autocorrelation(y.col(0)) == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("innovation scale enters per variable") {
  CoefTensor zero(1, 2);
  auto rng = make_rng(4);
  VectorXd scale(2);
  scale << 0.0, 2.0;
  const MatrixXd y = simulate_var(zero, scale, 5000, 0, rng);
  CHECK(y.col(0).cwiseAbs().maxCoeff() == 0.0);
  const double sd = std::sqrt((y.col(1).array() - y.col(1).mean()).square().mean());
  CHECK(sd == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("sparse truths have exact counts, bounded magnitudes and are stable") {
  SparseVarParams params;
  params.num_variables = 4;
  params.lags = 3;
  params.p0 = 2;
  params.q0 = 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rng = make_rng(seed);
    const auto truth = draw_sparse_truth(params, rng);
    CHECK(truth.spectral_radius < 0.95);
    CHECK(truth.spectral_radius == doctest::Approx(companion_spectral_radius(truth.coef)));
    for (Index to = 0; to < 4; ++to) {
      CHECK(truth.support.others_for(to) == 2);
      CHECK(truth.support.own_for(to) == 1);
    }
    for (Index r = 0; r < truth.coef.matrix().rows(); ++r) {
      for (Index c = 0; c < 4; ++c) {
        const double v = std::abs(truth.coef.matrix()(r, c));
        CHECK((v == 0.0 || (v >= 0.3 && v <= 0.5)));
      }
    }
  }
}

TEST_CASE("infeasible sparsity is a configuration error") {
  SparseVarParams params;
  params.num_variables = 3;
  params.lags = 2;
  params.p0 = 5;
  auto rng = make_rng(1);
  CHECK_THROWS_AS(draw_sparse_truth(params, rng), ConfigError);
  params.p0 = 4;
  CHECK_NOTHROW(draw_sparse_truth(params, rng));
  params.q0 = 3;
  CHECK_THROWS_AS(draw_sparse_truth(params, rng), ConfigError);
  params.q0 = 1;
  params.min_magnitude = 0.0;
  CHECK_THROWS_AS(draw_sparse_truth(params, rng), ConfigError);
}

TEST_CASE("unstable magnitudes exhaust the rejection budget") {
  SparseVarParams params;
  params.num_variables = 2;
  params.q0 = 1;
  params.min_magnitude = 1.5;
  params.max_magnitude = 2.0;
  params.max_tries = 50;
  auto rng = make_rng(1);
  CHECK_THROWS_AS(draw_sparse_truth(params, rng), DataError);
}

TEST_CASE("simulated panels are covariance stationary") {
  SparseVarParams params;
  params.num_variables = 3;
  params.lags = 2;
  params.p0 = 2;
  params.q0 = 1;
  params.rows = 100000;
  params.seed = 9;
  const auto sim = generate_sparse_var(params);
  const MatrixXd cov = stationary_covariance(sim.truth.coef, VectorXd::Ones(3));
  for (Index j = 0; j < 3; ++j) {
    const VectorXd col = sim.panel.data.col(j);
    const double var = (col.array() - col.mean()).square().mean();
    CHECK(var <= 2.0 * cov(j, j));
    CHECK(var == doctest::Approx(cov(j, j)).epsilon(0.1));
  }
}

TEST_CASE("long AR(1) simulations stay within twice the stationary variance") {
  CoefTensor ar(1, 1);
  ar(1, 0, 0) = 0.9;
  auto rng = make_rng(6);
  const MatrixXd y = simulate_var(ar, VectorXd::Ones(1), 100000, 5, rng);
  const double var = (y.col(0).array() - y.col(0).mean()).square().mean();
  CHECK(var <= 2.0 / (1.0 - 0.81));
  CHECK(var == doctest::Approx(1.0 / (1.0 - 0.81)).epsilon(0.1));
}

TEST_CASE("generate_sparse_var is deterministic in its seed") {
  SparseVarParams params;
  params.rows = 50;
  params.seed = 3;
  const auto a = generate_sparse_var(params);
  const auto b = generate_sparse_var(params);
  CHECK(a.panel.data == b.panel.data);
  CHECK(a.truth.coef.matrix() == b.truth.coef.matrix());
  params.seed = 4;
  CHECK(generate_sparse_var(params).panel.data != a.panel.data);
}

TEST_CASE("penalty schedules") {
  PenaltySchedule schedule;
  CHECK(schedule.on_support(10000.0) == doctest::Approx(std::pow(10000.0, -0.75)));
  CHECK(schedule.off_support(10000.0) == doctest::Approx(2.0 * std::pow(10000.0, -0.25)));
  CHECK(parse_schedule_kind("adaptive") == ScheduleKind::kAdaptive);
  CHECK(to_string(ScheduleKind::kOracle) == "oracle");
  CHECK_THROWS_AS(parse_schedule_kind("x"), ConfigError);
  schedule.epsilon = 0.5;
  CHECK_THROWS_AS(schedule.validate(), ConfigError);
}

TEST_CASE("noiseless target equation is recovered exactly") {
  auto params = recovery_setup(10, {2000});
  params.var.innovation_scale.assign(10, 1.0);
  params.var.innovation_scale[0] = 0.0;
  const auto report = recovery_experiment(params);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].exact_rate == 1.0);
  CHECK(report.rows[0].failures == 0);
  CHECK(report.rows[0].mean_false_positives == 0.0);
}

TEST_CASE("noiseless target with tiny penalties is recovered exactly") {
  auto params = recovery_setup(20, {200});
  params.var.innovation_scale.assign(10, 1.0);
  params.var.innovation_scale[0] = 0.0;
  params.var.min_magnitude = 0.5;
  params.var.max_magnitude = 0.6;
  params.schedule.on_scale = 1e-4;
  params.schedule.off_scale = 1e-4 / std::pow(200.0, 0.25);
  const auto report = recovery_experiment(params);
  CHECK(report.rows[0].exact_rate == 1.0);
}

TEST_CASE("huge penalties select nothing") {
  auto params = recovery_setup(5, {200});
  params.schedule.on_scale = 1e6;
  params.schedule.off_scale = 1e6;
  const auto report = recovery_experiment(params);
  CHECK(report.rows[0].exact_rate == 0.0);
  CHECK(report.rows[0].mean_false_negatives == 3.0);
  CHECK(report.rows[0].mean_false_positives == 0.0);
}

TEST_CASE("selection improves with the sample size") {
  const auto report = recovery_experiment(recovery_setup(100, {200, 500, 2000}));
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[2].exact_rate > report.rows[0].exact_rate);
  CHECK(report.rows[2].exact_rate >= 0.9);
  CHECK(report.rows[1].false_positive_rate <= report.rows[0].false_positive_rate);
  CHECK(report.rows[2].false_positive_rate <= report.rows[1].false_positive_rate);
  CHECK(report.rows[2].mean_l2_error < report.rows[0].mean_l2_error);
}

TEST_CASE("adaptive schedule also recovers large-sample supports") {
  auto params = recovery_setup(20, {2000});
  params.schedule.kind = ScheduleKind::kAdaptive;
  const auto report = recovery_experiment(params);
  CHECK(report.rows[0].exact_rate >= 0.8);
}

TEST_CASE("recovery experiments are reproducible across thread counts") {
  auto params = recovery_setup(8, {200});
  const auto a = recovery_experiment(params);
  params.threads = 2;
  const auto b = recovery_experiment(params);
  CHECK(a.rows[0].exact_rate == b.rows[0].exact_rate);
  CHECK(a.rows[0].mean_l2_error == b.rows[0].mean_l2_error);
  CHECK(a.rows[0].median_oracle_ratio == b.rows[0].median_oracle_ratio);
}

TEST_CASE("restricted eigenvalue of the identity is one") {
  const double kappa = restricted_eigenvalue(MatrixXd::Identity(6, 6), 2, 5000);
  CHECK(kappa == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("restricted eigenvalue vanishes on a cone null direction") {
  VectorXd v(3);
  v << 1.0, -0.5, -0.5;
  const MatrixXd g = MatrixXd::Identity(3, 3) - v * v.transpose() / v.squaredNorm();
  CHECK(restricted_eigenvalue(g, 1, 5000) < 1e-6);
}

TEST_CASE("restricted eigenvalue scales with the square root of the Gram") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  MatrixXd x(40, 8);
  for (Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  const MatrixXd g = x.transpose() * x / 40.0;
  const double base = restricted_eigenvalue(g, 2, 4000, 7);
  const double scaled = restricted_eigenvalue(4.0 * g, 2, 4000, 7);
  CHECK(scaled == doctest::Approx(2.0 * base).epsilon(1e-9));
  // Lower bound from the smallest eigenvalue, upper bound from any 2-sparse direction.
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g);
  CHECK(base >= std::sqrt(std::max(0.0, eig.eigenvalues().minCoeff())) - 1e-12);
  CHECK(base <= std::sqrt(g(0, 0)) + 1e-12);
  CHECK_THROWS_AS(restricted_eigenvalue(g, 0, 10), ConfigError);
}

TEST_CASE("dependence measures") {
  DependenceDesign ma{DependenceKind::kMovingAverage, 4, 0.5};
  DependenceDesign ar{DependenceKind::kAutoregressive, 0, 0.5};
  CHECK(ma.dependence_measure(500) == 5.0);
  CHECK(ar.dependence_measure(500) == 500.0);
}

TEST_CASE("stronger dependence raises the penalty and the risk") {
  const auto report = dependence_risk_experiment(dependence_setup({0, 4, 12}, 400, 3));
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].lambda < report.rows[1].lambda);
  CHECK(report.rows[1].lambda < report.rows[2].lambda);
  CHECK(report.rows[0].mean_prediction_error < report.rows[1].mean_prediction_error);
  CHECK(report.rows[1].mean_prediction_error < report.rows[2].mean_prediction_error);
  for (const auto& row : report.rows) {
    CHECK(row.bound_fraction >= 0.95);
    CHECK(row.flagged == 0);
  }
}

TEST_CASE("a null signal yields the zero estimate") {
  const auto report = dependence_risk_experiment(dependence_setup({0, 3}, 300, 0));
  for (const auto& row : report.rows) CHECK(row.zero_fraction >= 0.95);
}

TEST_CASE("doubling the sample size lowers the prediction risk") {
  const auto small = dependence_risk_experiment(dependence_setup({2}, 300, 3));
  const auto large = dependence_risk_experiment(dependence_setup({2}, 600, 3));
  CHECK(large.rows[0].mean_prediction_error < small.rows[0].mean_prediction_error);
  CHECK(large.rows[0].lambda < small.rows[0].lambda);
}

TEST_CASE("dependence parameter validation") {
  auto params = dependence_setup({2}, 300, 3);
  params.tail_q = 0.0;
  CHECK_THROWS_AS(dependence_risk_experiment(params), ConfigError);
  params = dependence_setup({2}, 300, 30);
  CHECK_THROWS_AS(dependence_risk_experiment(params), ConfigError);
  params = dependence_setup({2}, 300, 3);
  params.designs[0] = {DependenceKind::kAutoregressive, 0, 1.0};
  CHECK_THROWS_AS(dependence_risk_experiment(params), ConfigError);
}

TEST_CASE("experiment CSV output") {
  const auto recovery = recovery_experiment(recovery_setup(3, {200}));
  std::ostringstream out;
  write_recovery_csv(out, recovery);
  CHECK(out.str().rfind("T,trials,exact_rate,", 0) == 0);
  CHECK(out.str().find("\n200,3,") != std::string::npos);

  std::ostringstream dep;
  write_dependence_csv(dep, dependence_risk_experiment(dependence_setup({1}, 200, 2)));
  CHECK(dep.str().rfind("k,measure,T,P,s,", 0) == 0);
  CHECK(dep.str().find("\n1,2,200,20,2,30,") != std::string::npos);
}

// Values recorded from this implementation (libstdc++ normal_distribution);
// they guard against unintended changes to the generator or the experiment.
TEST_CASE("recovery experiment regression values") {
  const auto report = recovery_experiment(recovery_setup(100, {200, 500, 2000}));
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].exact_rate == doctest::Approx(0.86));
  CHECK(report.rows[1].exact_rate == doctest::Approx(0.99));
  CHECK(report.rows[2].exact_rate == doctest::Approx(1.0));
  CHECK(report.rows[0].mean_l2_error == doctest::Approx(0.0915867684).epsilon(1e-8));
  CHECK(report.rows[1].mean_l2_error == doctest::Approx(0.0540551151).epsilon(1e-8));
  CHECK(report.rows[2].mean_l2_error == doctest::Approx(0.0255992529).epsilon(1e-8));
  CHECK(report.rows[0].median_oracle_ratio == doctest::Approx(1.021520551).epsilon(1e-8));
  CHECK(report.rows[2].median_oracle_ratio == doctest::Approx(0.9982669752).epsilon(1e-8));
}
