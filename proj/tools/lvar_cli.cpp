#include "lvar/commands.hpp"
#include "lvar/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"Penalized vector autoregressions: fitting, forecast evaluation and simulation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration file")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides 'output')");
    sub->add_option("--seed", seed, "Random seed (overrides 'seed')");
    sub->add_option("--threads", threads, "Parallelism degree (overrides 'threads')")->check(CLI::PositiveNumber);
  };
  auto* fit = app.add_subcommand("fit", "Fit the penalized VAR and write coefficients and supports");
  auto* evaluate = app.add_subcommand("evaluate", "Tune on a grid and write the rolling forecast report");
  auto* simulate = app.add_subcommand("simulate", "Run a simulation experiment");
  for (auto* sub : {fit, evaluate, simulate}) add_flags(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lvar::kExitConfig;
  }

  return lvar::run_guarded(
      [&] {
        lvar::RunConfig config = lvar::load_config(config_path);
        if (out_dir) config.output = *out_dir;
        if (seed) config.seed = *seed;
        if (threads) config.threads = *threads;
        config.validate();
        if (fit->parsed()) lvar::cmd_fit(config, std::cout);
        if (evaluate->parsed()) lvar::cmd_evaluate(config, std::cout);
        if (simulate->parsed()) lvar::cmd_simulate(config, std::cout);
      },
      std::cerr);
}
