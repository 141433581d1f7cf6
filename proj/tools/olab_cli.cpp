#include <iostream>

#include <CLI11.hpp>

#include "olab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Eigenvector overlap laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out_dir;
  run->add_option("config", config_path, "Path to the JSON experiment config")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the master seed");
  auto* workers_opt = run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(olab::ExitCode::config_error);
  }

  olab::RunOverrides overrides;
  if (*seed_opt) overrides.seed = seed;
  if (*workers_opt) overrides.workers = workers;
  if (*out_opt) overrides.output = out_dir;
  return static_cast<int>(olab::run_config_file(config_path, overrides, std::cout, std::cerr));
}
