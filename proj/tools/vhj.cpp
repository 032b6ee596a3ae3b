#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "vhj/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Viscous Hamilton-Jacobi lab: run one configured experiment"};
  std::string config;
  std::optional<std::string> out;
  double grid_scale = 1.0;
  std::optional<std::uint64_t> seed;
  app.add_option("config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("-o,--out", out, "Output directory (overrides the config)");
  app.add_option("--grid-scale", grid_scale, "Multiply the number of grid cells per axis");
  app.add_option("--seed", seed, "Random seed (overrides the config)");
  CLI11_PARSE(app, argc, argv);

  try {
    vhj::RunOverrides ov;
    ov.output = out;
    ov.grid_scale = grid_scale;
    ov.seed = seed;
    const vhj::ExperimentResult res = vhj::run_experiment(vhj::load_config(config), ov);
    std::cout << res.summary;
    std::cout << "\nwrote " << res.files.size() << " files to " << res.output.string() << "\n";
    return res.passed ? 0 : 1;
  } catch (const vhj::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
