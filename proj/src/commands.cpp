#include "lvar/commands.hpp"

#include "lvar/errors.hpp"
#include "lvar/estimators.hpp"
#include "lvar/forecast.hpp"
#include "lvar/simulation.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace lvar {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r\"");
    const auto last = cell.find_last_not_of(" \t\r\"");
    cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

fs::path prepare_output(const RunConfig& config) {
  const fs::path dir(config.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("output directory '" + config.output + "' cannot be created: " + ec.message());
  }
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out.precision(10);
  return out;
}

std::vector<Index> target_columns(const RunConfig& config, const Panel& panel) {
  return resolve_variables(config.targets, panel, config.input);
}

GridPoint first_point(const RunConfig& config) {
  return {config.lambda.front(), config.gamma.front(), config.eta.front(), config.alpha.front()};
}

// Report a solver diagnostics line when some solves did not converge.
void warn_convergence(std::ostream& log, std::size_t failed, std::size_t total) {
  if (failed > 0) log << "warning: " << failed << " of " << total << " solves did not converge\n";
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (table.header.empty()) {
      for (const auto& name : cells) {
        if (name.empty()) throw DataError(path + ":" + std::to_string(line_no) + ": empty variable name");
      }
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double value = 0.0;
      const auto& text = cells[c];
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw DataError(path + ":" + std::to_string(line_no) + ": column '" + table.header[c] +
                        "' holds a non-numeric value '" + text + "'");
      }
      row.push_back(value);
    }
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw DataError(path + ": file is empty");
  if (rows.empty()) throw DataError(path + ": no observations after the header");
  table.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) table.data(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return table;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& data) {
  const auto precision = out.precision(10);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Index r = 0; r < data.rows(); ++r) {
    for (Index c = 0; c < data.cols(); ++c) out << (c ? "," : "") << data(r, c);
    out << '\n';
  }
  out.precision(precision);
}

Panel load_panel(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("config key 'input' is required");
  const CsvTable table = read_csv(config.input);
  Panel header = make_panel(Eigen::MatrixXd::Zero(1, static_cast<Index>(table.header.size())), table.header);
  std::vector<Index> columns;
  if (config.variables.empty()) {
    for (Index j = 0; j < header.cols(); ++j) columns.push_back(j);
  } else {
    columns = resolve_variables(config.variables, header, config.input);
  }
  Eigen::MatrixXd raw(table.data.rows(), static_cast<Index>(columns.size()));
  std::vector<std::string> names;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    raw.col(static_cast<Index>(k)) = table.data.col(columns[k]);
    names.push_back(table.header[static_cast<std::size_t>(columns[k])]);
  }
  std::vector<TransformCode> codes;
  if (config.transforms.size() == 1) {
    codes.assign(columns.size(), parse_transform_code(config.transforms.front()));
  } else if (config.transforms.size() == columns.size()) {
    for (const auto& code : config.transforms) codes.push_back(parse_transform_code(code));
  } else if (config.transforms.empty()) {
    codes.assign(columns.size(), TransformCode::kLevel);
  } else {
    throw ConfigError("transforms lists " + std::to_string(config.transforms.size()) + " codes for " +
                      std::to_string(columns.size()) + " variables");
  }
  return apply_transforms(raw, std::move(names), codes);
}

void cmd_fit(const RunConfig& config, std::ostream& log) {
  const Panel panel = load_panel(config);
  const auto targets = target_columns(config, panel);
  const auto mode = parse_grouping_mode(config.mode);
  const PenaltySpec spec =
      spec_at(first_point(config), mode, panel.cols(), resolve_segments(config, panel), parse_decay_kind(config.decay));
  const fs::path dir = prepare_output(config);
  const auto [standardized, weights] = standardize(panel);
  std::ostringstream summary;
  summary << "mode " << config.mode << ", " << panel.rows() << " observations, " << panel.cols() << " variables\n";
  std::vector<Index> shown = targets;
  if (shown.empty()) {
    for (Index j = 0; j < panel.cols(); ++j) shown.push_back(j);
  }
  for (int lags : config.lags) {
    const LagDesign design = build_lag_design(standardized, lags);
    FitOptions options;
    options.refit = config.refit;
    const std::vector<Index> columns = mode == GroupingMode::kNoGrouping ? targets : std::vector<Index>{};
    const FitResult fit = fit_var(design, spec, solver_config(config), options, columns, config.threads);

    auto coef_out = open_output(dir / ("coefficients_P" + std::to_string(lags) + ".csv"));
    coef_out << "lag,from,to,selected,refit\n";
    for (Index to : shown) {
      for (int p = 1; p <= lags; ++p) {
        for (Index from = 0; from < panel.cols(); ++from) {
          coef_out << p << ',' << panel.names[static_cast<std::size_t>(from)] << ','
                   << panel.names[static_cast<std::size_t>(to)] << ',' << fit.selected(p, from, to) << ','
                   << (fit.refit_ok ? fit.refit(p, from, to) : fit.selected(p, from, to)) << '\n';
        }
      }
    }
    auto support_out = open_output(dir / ("support_P" + std::to_string(lags) + ".csv"));
    support_out << "lag,from,to,kind\n";
    auto write_support = [&](const std::vector<CoefIndex>& entries, const char* kind) {
      for (const auto& e : entries) {
        support_out << e.lag << ',' << panel.names[static_cast<std::size_t>(e.from)] << ','
                    << panel.names[static_cast<std::size_t>(e.to)] << ',' << kind << '\n';
      }
    };
    write_support(fit.support.others, "others");
    write_support(fit.support.own, "own");

    std::size_t failed = 0;
    for (const auto& s : fit.solves) failed += s.result.converged ? 0 : 1;
    for (Index to : shown) {
      const auto s1 = fit.support.others_for(to);
      const auto s2 = fit.support.own_for(to);
      summary << "P=" << lags << ' ' << panel.names[static_cast<std::size_t>(to)] << ": ";
      if (s1 + s2 == 0) {
        summary << "0 selected\n";
      } else {
        summary << "|S1|=" << s1 << " |S2|=" << s2 << '\n';
      }
    }
    if (fit.refit_rank_deficient) summary << "warning: P=" << lags << " refit was rank deficient\n";
    warn_convergence(summary, failed, fit.solves.size());
  }
  log << summary.str();
  auto summary_out = open_output(dir / "summary.txt");
  summary_out << summary.str();
}

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
  const Panel panel = load_panel(config);
  if (config.window < 2) throw ConfigError("config key 'window' must be >= 2 for evaluation");
  RollingConfig rolling;
  rolling.window_len = config.window;
  rolling.t0 = config.t0 > 0 ? config.t0 : config.window - 1;
  rolling.t1 = config.t1 > 0 ? config.t1 : panel.rows() - 1;
  rolling.horizons = config.horizons;
  rolling.refit_every = config.refit_every;
  rolling.variables = target_columns(config, panel);

  HyperGrid grid{config.lambda, config.gamma, config.eta, config.alpha, config.refine_rounds, config.refine_factor};
  GridSearchConfig search;
  search.mode = parse_grouping_mode(config.mode);
  search.objective = parse_grid_objective(config.objective);
  search.decay = parse_decay_kind(config.decay);
  search.segments = resolve_segments(config, panel);
  search.model.solver = solver_config(config);
  search.model.use_refit = config.refit;
  search.threads = config.threads;

  const fs::path dir = prepare_output(config);
  auto report = open_output(dir / "report.csv");
  auto winners = open_output(dir / "winners.csv");
  write_report_header(report);
  winners << "P,variable,segment,h,lambda,gamma,eta,alpha,objective,coarse_objective\n";
  std::vector<Index> scored = rolling.variables;
  if (scored.empty()) {
    for (Index j = 0; j < panel.cols(); ++j) scored.push_back(j);
  }
  for (int lags : config.lags) {
    search.model.lags = lags;
    const GridSearchResult result = grid_search(panel, grid, rolling, search);
    for (const auto& b : result.best) {
      winners << lags << ',' << (b.variable >= 0 ? panel.names[static_cast<std::size_t>(b.variable)] : "") << ','
              << (b.segment >= 0 ? std::to_string(b.segment) : "") << ',' << b.horizon << ',' << b.point.lambda
              << ',' << b.point.gamma << ',' << b.point.eta << ',' << b.point.alpha << ',' << b.objective << ','
              << b.coarse_objective << '\n';
    }
    std::size_t failed_points = 0;
    for (const auto& row : result.table) failed_points += row.report ? 0 : 1;
    for (int h : config.horizons) {
      for (Index j : scored) {
        const GridSelection* pick = result.find(j, h);
        if (!pick) {
          for (std::size_t s = 0; s < search.segments.size() && !pick; ++s) {
            for (Index member : search.segments[s]) {
              if (member == j) pick = result.find_segment(static_cast<Index>(s), h);
            }
          }
        }
        if (!pick) pick = result.find(-1, h);
        if (!pick) continue;
        for (const auto& row : result.table) {
          if (row.point != pick->point || !row.report) continue;
          if (const ForecastCell* cell = row.report->find(j, h)) {
            write_report_row(report, *cell, panel, search.mode, lags, row.point, row.report->converged_fraction);
            log << "P=" << lags << " h=" << h << ' ' << panel.names[static_cast<std::size_t>(j)]
                << ": rmsfe " << cell->rmsfe << " at lambda " << row.point.lambda << ", gamma " << row.point.gamma
                << '\n';
          }
          break;
        }
      }
    }
    if (failed_points > 0) log << "warning: P=" << lags << ' ' << failed_points << " grid points failed\n";
  }
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  const fs::path dir = prepare_output(config);
  if (config.experiment == "recovery") {
    const RecoveryReport report = recovery_experiment(recovery_params(config));
    auto out = open_output(dir / "recovery.csv");
    write_recovery_csv(out, report);
    for (const auto& row : report.rows) {
      log << "T=" << row.rows << ": exact recovery " << row.exact_rate << ", median oracle ratio "
          << row.median_oracle_ratio << '\n';
      if (row.failures > 0) log << "warning: " << row.failures << " trials failed\n";
      warn_convergence(log, static_cast<std::size_t>(row.non_converged), static_cast<std::size_t>(row.trials));
    }
  } else if (config.experiment == "dependence") {
    const DependenceReport report = dependence_risk_experiment(dependence_params(config));
    auto out = open_output(dir / "dependence.csv");
    write_dependence_csv(out, report);
    for (const auto& row : report.rows) {
      log << "measure " << row.measure << ": prediction error " << row.mean_prediction_error
          << ", bound held in " << row.bound_fraction << " of checked trials\n";
      if (row.flagged > 0) log << "warning: " << row.flagged << " trials had a vanishing restricted eigenvalue\n";
    }
  } else {
    SparseVarParams params = recovery_params(config).var;
    params.innovation_scale.clear();
    params.rows = config.rows;
    const SimulatedVar sim = generate_sparse_var(params);
    auto out = open_output(dir / "simulated_panel.csv");
    write_csv(out, sim.panel.names, sim.panel.data);
    auto truth = open_output(dir / "truth.csv");
    truth << "lag,from,to,value\n";
    for (int p = 1; p <= params.lags; ++p)
      for (Index from = 0; from < params.num_variables; ++from)
        for (Index to = 0; to < params.num_variables; ++to) {
          if (sim.truth.coef(p, from, to) != 0.0) {
            truth << p << ',' << sim.panel.names[static_cast<std::size_t>(from)] << ','
                  << sim.panel.names[static_cast<std::size_t>(to)] << ',' << sim.truth.coef(p, from, to) << '\n';
          }
        }
    log << "simulated " << params.rows << " rows, spectral radius " << sim.truth.spectral_radius << '\n';
  }
}

int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace lvar
