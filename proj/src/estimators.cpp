#include "lvar/estimators.hpp"

#include "lvar/errors.hpp"
#include "lvar/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

namespace lvar {

namespace {

std::vector<double> resolve_weights(const FitOptions& options, Index num_variables) {
  if (options.weights.empty()) return std::vector<double>(static_cast<std::size_t>(num_variables), 1.0);
  if (static_cast<Index>(options.weights.size()) != num_variables) {
    throw DataError("expected " + std::to_string(num_variables) + " variable weights, got " +
                    std::to_string(options.weights.size()));
  }
  return options.weights;
}

LagDecayMatrix decay_for(const LagDesign& design, const PenaltySpec& spec) {
  return LagDecayMatrix{spec.decay, spec.alpha, design.lags, design.num_variables};
}

const SolveResult* find_warm(const FitOptions& options, const std::vector<Index>& columns,
                             Index size) {
  if (options.warm_start == nullptr) return nullptr;
  for (const auto& record : options.warm_start->solves) {
    if (record.columns == columns && record.result.beta.size() == size) return &record.result;
  }
  return nullptr;
}

SolverConfig with_warm_start(const SolverConfig& config, const SolveResult* warm) {
  SolverConfig out = config;
  if (warm != nullptr && warm->beta.allFinite()) out.warm_start = warm->beta;
  return out;
}

void check_level(double value, const char* what) {
  if (!(value >= 0.0) || std::isnan(value)) {
    throw ConfigError(std::string(what) + " must be >= 0");
  }
}

// Shared tail of every estimator: read the support off the penalized
// coefficients and refit by least squares.
void finish_fit(const LagDesign& design, const FitOptions& options, FitResult& fit) {
  fit.support = support_of(fit.selected, fit.columns);
  fit.refit = CoefTensor(design.lags, design.num_variables);
  fit.refit_ok = false;
  if (!options.refit) return;
  try {
    auto refit = ols_refit(design, fit.support, fit.columns);
    fit.refit = std::move(refit.coef);
    fit.refit_rank_deficient = refit.rank_deficient;
    fit.refit_ok = true;
  } catch (const DataError&) {
    // Support larger than the sample: keep the penalized coefficients.
    fit.refit_ok = false;
  }
}

// Penalized solve for the response columns `cols` on I_N (x) Xt with the
// grouping of a segment (or the whole panel in universal mode).
FitResult fit_grouped(const LagDesign& design, const std::vector<Index>& cols, double outside_level,
                      double own_level, double within_level, double alpha, const PenaltySpec& spec,
                      const SolverConfig& config, const FitOptions& options) {
  const Index num_vars = design.num_variables;
  const Index m = design.X.cols();
  const auto blocks = static_cast<Index>(cols.size());
  const auto weights = resolve_weights(options, num_vars);
  auto decay = decay_for(design, spec);
  decay.alpha = alpha;
  const Eigen::VectorXd scale = build_transform(weights, decay);
  Eigen::MatrixXd xt = design.X * scale.asDiagonal();

  Eigen::VectorXd response(design.rows() * blocks);
  for (Index k = 0; k < blocks; ++k) {
    response.segment(k * design.rows(), design.rows()) = design.Y.col(cols[static_cast<std::size_t>(k)]);
  }

  std::vector<Index> local(static_cast<std::size_t>(num_vars), -1);
  for (Index k = 0; k < blocks; ++k) local[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])] = k;

  // Source objectives use (1/(N n))||.||^2; canonical form halves every level.
  Eigen::VectorXd levels = Eigen::VectorXd::Zero(m * blocks);
  std::vector<PenaltyGroup> groups;
  for (int p = 1; p <= design.lags; ++p) {
    for (Index i = 0; i < num_vars; ++i) {
      const Index r = design.column_of(p, i);
      const Index own = local[static_cast<std::size_t>(i)];
      if (own < 0) {
        PenaltyGroup g{{}, canonical_level(outside_level, LossForm::kMeanSquare)};
        for (Index k = 0; k < blocks; ++k) g.columns.push_back(k * m + r);
        groups.push_back(std::move(g));
        continue;
      }
      levels(own * m + r) = canonical_level(own_level, LossForm::kMeanSquare);
      if (blocks >= 2) {
        PenaltyGroup g{{}, canonical_level(within_level, LossForm::kMeanSquare)};
        for (Index k = 0; k < blocks; ++k) {
          if (k != own) g.columns.push_back(k * m + r);
        }
        groups.push_back(std::move(g));
      }
    }
  }
  LassoProblem problem{std::make_shared<BlockDiagonalDesign>(std::move(xt), blocks),
                       std::move(response), std::move(levels), 1.0};
  GroupPartition partition(m * blocks, std::move(groups));
  const auto* warm = find_warm(options, cols, m * blocks);
  SolveResult solved = solve_group_lasso(problem, partition, with_warm_start(config, warm));

  FitResult fit;
  fit.spec = spec;
  fit.columns = cols;
  fit.selected = CoefTensor(design.lags, num_vars);
  for (Index k = 0; k < blocks; ++k) {
    const Index c = cols[static_cast<std::size_t>(k)];
    fit.selected.matrix().col(c) = scale.cwiseProduct(solved.beta.segment(k * m, m));
  }
  fit.solves.push_back({cols, std::move(solved)});
  finish_fit(design, options, fit);
  return fit;
}

}  // namespace

GroupingMode parse_grouping_mode(std::string_view text) {
  if (text == "universal") return GroupingMode::kUniversal;
  if (text == "no_grouping" || text == "none") return GroupingMode::kNoGrouping;
  if (text == "segmentized") return GroupingMode::kSegmentized;
  throw ConfigError("unknown grouping mode '" + std::string(text) +
                    "' (expected universal, no_grouping or segmentized)");
}

std::string_view to_string(GroupingMode mode) {
  switch (mode) {
    case GroupingMode::kUniversal:
      return "universal";
    case GroupingMode::kNoGrouping:
      return "no_grouping";
    case GroupingMode::kSegmentized:
      return "segmentized";
  }
  return "no_grouping";
}

DecayKind parse_decay_kind(std::string_view text) {
  if (text == "power") return DecayKind::kPower;
  if (text == "log") return DecayKind::kLog;
  if (text == "exp") return DecayKind::kExp;
  throw ConfigError("unknown decay kind '" + std::string(text) + "' (expected power, log or exp)");
}

std::string_view to_string(DecayKind kind) {
  switch (kind) {
    case DecayKind::kPower:
      return "power";
    case DecayKind::kLog:
      return "log";
    case DecayKind::kExp:
      return "exp";
  }
  return "power";
}

double LagDecayMatrix::multiplier(int lag) const {
  const double p = static_cast<double>(lag);
  switch (kind) {
    case DecayKind::kPower:
      return std::pow(p, alpha);
    case DecayKind::kLog:
      return std::pow(1.0 + std::log(p), alpha);
    case DecayKind::kExp:
      return std::exp(alpha * p);
  }
  return 1.0;
}

Eigen::VectorXd LagDecayMatrix::diagonal() const {
  Eigen::VectorXd d(num_variables * lags);
  for (int p = 1; p <= lags; ++p) d.segment((p - 1) * num_variables, num_variables).setConstant(multiplier(p));
  return d;
}

void PenaltySpec::validate(Index num_variables) const {
  check_level(alpha, "alpha");
  auto check_all = [](const std::vector<double>& values, std::size_t expected, const char* what) {
    if (values.size() != expected) {
      throw ConfigError(std::string(what) + " needs " + std::to_string(expected) + " values, got " +
                        std::to_string(values.size()));
    }
    for (double v : values) check_level(v, what);
  };
  switch (mode) {
    case GroupingMode::kUniversal:
      check_level(lambda, "lambda");
      check_level(gamma, "gamma");
      break;
    case GroupingMode::kNoGrouping:
      check_all(column_lambda, static_cast<std::size_t>(num_variables), "column lambda");
      check_all(column_gamma, static_cast<std::size_t>(num_variables), "column gamma");
      if (!column_alpha.empty()) {
        check_all(column_alpha, static_cast<std::size_t>(num_variables), "column alpha");
      }
      break;
    case GroupingMode::kSegmentized: {
      if (segments.empty()) throw ConfigError("segmentized mode needs at least one segment");
      std::vector<int> seen(static_cast<std::size_t>(num_variables), 0);
      for (const auto& seg : segments) {
        if (seg.empty()) throw ConfigError("segments must not be empty");
        for (Index j : seg) {
          if (j < 0 || j >= num_variables) {
            throw ConfigError("segment member " + std::to_string(j) + " is not a variable index");
          }
          ++seen[static_cast<std::size_t>(j)];
        }
      }
      for (Index j = 0; j < num_variables; ++j) {
        if (seen[static_cast<std::size_t>(j)] != 1) {
          throw ConfigError("segments must partition the variables; variable " + std::to_string(j) +
                            " appears " + std::to_string(seen[static_cast<std::size_t>(j)]) + " times");
        }
      }
      check_all(segment_lambda, segments.size(), "segment lambda");
      check_all(segment_gamma, segments.size(), "segment gamma");
      check_all(segment_eta, segments.size(), "segment eta");
      if (!segment_alpha.empty()) check_all(segment_alpha, segments.size(), "segment alpha");
      break;
    }
  }
}

PenaltySpec PenaltySpec::universal(double lambda, double gamma, double alpha) {
  PenaltySpec spec;
  spec.mode = GroupingMode::kUniversal;
  spec.lambda = lambda;
  spec.gamma = gamma;
  spec.alpha = alpha;
  return spec;
}

PenaltySpec PenaltySpec::no_grouping(Index num_variables, double lambda, double gamma, double alpha) {
  PenaltySpec spec;
  spec.mode = GroupingMode::kNoGrouping;
  spec.column_lambda.assign(static_cast<std::size_t>(num_variables), lambda);
  spec.column_gamma.assign(static_cast<std::size_t>(num_variables), gamma);
  spec.alpha = alpha;
  return spec;
}

PenaltySpec PenaltySpec::segmentized(std::vector<std::vector<Index>> segments, double lambda,
                                     double gamma, double eta, double alpha) {
  PenaltySpec spec;
  spec.mode = GroupingMode::kSegmentized;
  const auto count = segments.size();
  spec.segments = std::move(segments);
  spec.segment_lambda.assign(count, lambda);
  spec.segment_gamma.assign(count, gamma);
  spec.segment_eta.assign(count, eta);
  spec.alpha = alpha;
  return spec;
}

Eigen::VectorXd build_transform(std::span<const double> weights, const LagDecayMatrix& decay,
                                std::optional<OwnBoost> boost) {
  if (static_cast<Index>(weights.size()) != decay.num_variables) {
    throw DataError("transform needs " + std::to_string(decay.num_variables) + " weights, got " +
                    std::to_string(weights.size()));
  }
  if (boost && (boost->variable < 0 || boost->variable >= decay.num_variables)) {
    throw DataError("own-lag boost refers to a missing variable");
  }
  Eigen::VectorXd out(decay.num_variables * decay.lags);
  for (int p = 1; p <= decay.lags; ++p) {
    const double mp = decay.multiplier(p);
    for (Index i = 0; i < decay.num_variables; ++i) {
      double w = weights[static_cast<std::size_t>(i)];
      if (!(w > 0.0)) throw DataError("variable weights must be positive");
      if (boost && boost->variable == i) w *= boost->mu;
      out((p - 1) * decay.num_variables + i) = 1.0 / (mp * w);
    }
  }
  return out;
}

std::size_t Support::others_for(Index to) const {
  return static_cast<std::size_t>(
      std::count_if(others.begin(), others.end(), [to](const CoefIndex& c) { return c.to == to; }));
}

std::size_t Support::own_for(Index to) const {
  return static_cast<std::size_t>(
      std::count_if(own.begin(), own.end(), [to](const CoefIndex& c) { return c.to == to; }));
}

Support support_of(const CoefTensor& coef, std::span<const Index> columns) {
  Support support;
  for (Index to : columns) {
    for (int p = 1; p <= coef.lags(); ++p) {
      for (Index from = 0; from < coef.num_variables(); ++from) {
        if (coef(p, from, to) == 0.0) continue;
        (from == to ? support.own : support.others).push_back({p, from, to});
      }
    }
  }
  std::sort(support.others.begin(), support.others.end());
  std::sort(support.own.begin(), support.own.end());
  return support;
}

bool FitResult::converged() const {
  return std::all_of(solves.begin(), solves.end(),
                     [](const SolveRecord& s) { return s.result.converged; });
}

double FitResult::converged_fraction() const {
  if (solves.empty()) return 1.0;
  const auto ok = std::count_if(solves.begin(), solves.end(),
                                [](const SolveRecord& s) { return s.result.converged; });
  return static_cast<double>(ok) / static_cast<double>(solves.size());
}

FitResult fit_no_grouping(const LagDesign& design, Index column, const PenaltySpec& spec,
                          const SolverConfig& config, const FitOptions& options) {
  if (spec.mode != GroupingMode::kNoGrouping) throw ConfigError("fit_no_grouping needs mode no_grouping");
  spec.validate(design.num_variables);
  if (column < 0 || column >= design.num_variables) throw DataError("target column out of range");
  const auto weights = resolve_weights(options, design.num_variables);
  auto decay = decay_for(design, spec);
  if (!spec.column_alpha.empty()) decay.alpha = spec.column_alpha[static_cast<std::size_t>(column)];
  const double lambda = spec.column_lambda[static_cast<std::size_t>(column)];
  const double gamma = spec.column_gamma[static_cast<std::size_t>(column)];
  const Index m = design.X.cols();

  // With lambda, gamma > 0 the own-lag ratio mu = gamma / lambda is folded
  // into W' and a uniform-level lasso is solved; otherwise the two levels are
  // kept per column on the plain W P transform.
  Eigen::VectorXd scale;
  Eigen::VectorXd levels(m);
  if (lambda > 0.0 && gamma > 0.0) {
    scale = build_transform(weights, decay, OwnBoost{column, gamma / lambda});
    levels.setConstant(canonical_level(lambda, LossForm::kMeanSquare));
  } else {
    scale = build_transform(weights, decay);
    for (Index r = 0; r < m; ++r) {
      const bool own = design.column_map[static_cast<std::size_t>(r)].variable == column;
      levels(r) = canonical_level(own ? gamma : lambda, LossForm::kMeanSquare);
    }
  }
  LassoProblem problem{std::make_shared<DenseDesign>(design.X * scale.asDiagonal()),
                       design.Y.col(column), std::move(levels), 1.0};
  const std::vector<Index> cols{column};
  const auto* warm = find_warm(options, cols, m);
  SolveResult solved = solve_lasso(problem, with_warm_start(config, warm));

  FitResult fit;
  fit.spec = spec;
  fit.columns = cols;
  fit.selected = CoefTensor(design.lags, design.num_variables);
  fit.selected.matrix().col(column) = scale.cwiseProduct(solved.beta);
  fit.solves.push_back({cols, std::move(solved)});
  finish_fit(design, options, fit);
  return fit;
}

FitResult fit_universal(const LagDesign& design, const PenaltySpec& spec, const SolverConfig& config,
                        const FitOptions& options) {
  if (spec.mode != GroupingMode::kUniversal) throw ConfigError("fit_universal needs mode universal");
  spec.validate(design.num_variables);
  std::vector<Index> cols(static_cast<std::size_t>(design.num_variables));
  std::iota(cols.begin(), cols.end(), Index{0});
  // Rows B_{p i, -i} across the other response columns form the groups.
  return fit_grouped(design, cols, 0.0, spec.gamma, spec.lambda, spec.alpha, spec, config, options);
}

FitResult fit_segment(const LagDesign& design, std::size_t segment, const PenaltySpec& spec,
                      const SolverConfig& config, const FitOptions& options) {
  if (spec.mode != GroupingMode::kSegmentized) throw ConfigError("fit_segment needs mode segmentized");
  spec.validate(design.num_variables);
  if (segment >= spec.segments.size()) throw DataError("segment index out of range");
  return fit_grouped(design, spec.segments[segment], spec.segment_lambda[segment],
                     spec.segment_gamma[segment], spec.segment_eta[segment],
                     spec.segment_alpha.empty() ? spec.alpha : spec.segment_alpha[segment], spec,
                     config, options);
}

FitResult fit_segmentized(const LagDesign& design, const PenaltySpec& spec, const SolverConfig& config,
                          const FitOptions& options, int threads) {
  if (spec.mode != GroupingMode::kSegmentized) throw ConfigError("fit_segmentized needs mode segmentized");
  spec.validate(design.num_variables);
  std::vector<FitResult> parts(spec.segments.size());
  parallel_for(parts.size(), threads,
               [&](std::size_t s) { parts[s] = fit_segment(design, s, spec, config, options); });
  return merge_fits(std::move(parts));
}

FitResult fit_var(const LagDesign& design, const PenaltySpec& spec, const SolverConfig& config,
                  const FitOptions& options, std::span<const Index> columns, int threads) {
  switch (spec.mode) {
    case GroupingMode::kUniversal:
      return fit_universal(design, spec, config, options);
    case GroupingMode::kSegmentized:
      return fit_segmentized(design, spec, config, options, threads);
    case GroupingMode::kNoGrouping:
      break;
  }
  std::vector<Index> cols(columns.begin(), columns.end());
  if (cols.empty()) {
    cols.resize(static_cast<std::size_t>(design.num_variables));
    std::iota(cols.begin(), cols.end(), Index{0});
  }
  std::vector<FitResult> parts(cols.size());
  parallel_for(parts.size(), threads, [&](std::size_t k) {
    parts[k] = fit_no_grouping(design, cols[k], spec, config, options);
  });
  return merge_fits(std::move(parts));
}

FitResult merge_fits(std::vector<FitResult> parts) {
  if (parts.empty()) throw DataError("nothing to merge");
  FitResult out = std::move(parts.front());
  for (std::size_t k = 1; k < parts.size(); ++k) {
    auto& part = parts[k];
    for (Index c : part.columns) {
      if (std::find(out.columns.begin(), out.columns.end(), c) != out.columns.end()) {
        throw DataError("merged fits overlap in response column " + std::to_string(c));
      }
      out.columns.push_back(c);
      out.selected.matrix().col(c) = part.selected.matrix().col(c);
      out.refit.matrix().col(c) = part.refit.matrix().col(c);
    }
    out.refit_ok = out.refit_ok && part.refit_ok;
    out.refit_rank_deficient = out.refit_rank_deficient || part.refit_rank_deficient;
    for (auto& s : part.solves) out.solves.push_back(std::move(s));
  }
  std::sort(out.columns.begin(), out.columns.end());
  out.support = support_of(out.selected, out.columns);
  if (!out.refit_ok) {
    // A partial refit would mix refit and penalized columns; fall back wholesale.
    out.refit = CoefTensor(out.selected.lags(), out.selected.num_variables());
  }
  return out;
}

RefitResult ols_refit(const LagDesign& design, const Support& support, std::span<const Index> columns) {
  RefitResult out{CoefTensor(design.lags, design.num_variables), false};
  const Index n = design.rows();
  for (Index to : columns) {
    std::vector<Index> cols;
    for (const auto* set : {&support.others, &support.own}) {
      for (const auto& c : *set) {
        if (c.to == to) cols.push_back(design.column_of(c.lag, c.from));
      }
    }
    if (cols.empty()) continue;
    std::sort(cols.begin(), cols.end());
    const auto k = static_cast<Index>(cols.size());
    if (k > n) {
      throw DataError("refit of column " + std::to_string(to) + " needs " + std::to_string(k) +
                      " coefficients but has only " + std::to_string(n) + " observations");
    }
    Eigen::MatrixXd sub(n, k);
    for (Index a = 0; a < k; ++a) sub.col(a) = design.X.col(cols[static_cast<std::size_t>(a)]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    Eigen::VectorXd coef;
    if (qr.rank() < k) {
      out.rank_deficient = true;
      coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(sub).solve(design.Y.col(to));
    } else {
      coef = qr.solve(design.Y.col(to));
    }
    for (Index a = 0; a < k; ++a) out.coef.matrix()(cols[static_cast<std::size_t>(a)], to) = coef(a);
  }
  return out;
}

}  // namespace lvar
