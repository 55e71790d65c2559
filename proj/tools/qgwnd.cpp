#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "qgwnd/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quantum-graph white-noise dispersion experiments"};
  std::string kind, config_path, out_dir;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  app.add_option("kind", kind, "Experiment kind")
      ->required()
      ->check(CLI::IsMember(qgwnd::experiment_kind_names()));
  app.add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out_dir, "Run directory for JSON and CSV output");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  auto* trials_opt = app.add_option("--trials", trials, "Monte Carlo trials (overrides the config)")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    qgwnd::ExperimentConfig cfg = qgwnd::load_config(config_path);
    if (qgwnd::to_string(cfg.kind) != kind)
      throw qgwnd::ConfigError("config kind '" + qgwnd::to_string(cfg.kind) + "' does not match '" + kind + "'");
    if (*out_opt) cfg.output = out_dir;
    if (*seed_opt) cfg.seed = seed;
    if (*trials_opt) cfg.trials = trials;
    const qgwnd::ExperimentResult result = qgwnd::run_experiment(cfg);
    for (const auto& rec : result.records) {
      for (const auto& [name, value] : rec.values) std::cout << rec.kind << ' ' << name << ' ' << value << '\n';
      for (const auto& c : rec.checks)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " bounds=[" << c.lower << ", "
                  << c.upper << "]\n";
    }
    return result.pass() ? EXIT_SUCCESS : 2;
  } catch (const std::exception& e) {
    std::cerr << "qgwnd: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
}
