#pragma once

#include "lvar/config.hpp"
#include "lvar/panel.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace lvar {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitSolver = 4,
};

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd data;
};

/// Header row of names, then one row of decimal numbers per observation.
/// Throws DataError with `path:line` context.
CsvTable read_csv(const std::string& path);
void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& data);

/// Reads `config.input`, keeps `config.variables` and applies the transforms.
Panel load_panel(const RunConfig& config);

/// Each command writes its files under config.output and a summary to `log`.
void cmd_fit(const RunConfig& config, std::ostream& log);
void cmd_evaluate(const RunConfig& config, std::ostream& log);
void cmd_simulate(const RunConfig& config, std::ostream& log);

/// Runs `body`, reporting exceptions to `err` and mapping them to exit codes.
int run_guarded(const std::function<void()>& body, std::ostream& err);

}  // namespace lvar
