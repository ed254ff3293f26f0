#include <iostream>

#include <CLI11.hpp>

#include "mjrobust/commands.hpp"
#include "mjrobust/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Robust stability certificates for Markov jump linear systems"};
  app.set_version_flag("--version", mjrobust::kVersion);
  app.require_subcommand(1);

  mjrobust::CommandOptions opt;
  std::string out_dir = ".";
  std::string config;
  std::uint64_t seed = 0;
  double gamma = 0.0, tol = 0.0;
  int grid_n = 0, samples = 0;

  for (const auto& name : mjrobust::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "model config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--gamma", gamma, "gamma to certify");
    sub->add_flag("--bisect", opt.bisect, "search for the minimal feasible gamma");
    sub->add_option("--grid-n", grid_n, "number of grid cells");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--tol", tol, "bisection tolerance");
    sub->add_option("--samples-per-cell", samples, "verification samples per cell");
  }
  CLI11_PARSE(app, argc, argv);

  const auto* sub = app.get_subcommands().front();
  opt.config = config;
  opt.out = out_dir;
  if (sub->count("--gamma")) opt.gamma = gamma;
  if (sub->count("--tol")) opt.tol = tol;
  if (sub->count("--grid-n")) opt.grid_n = grid_n;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--samples-per-cell")) opt.samples_per_cell = samples;
  return mjrobust::run_command(sub->get_name(), opt, std::cout, std::cerr);
}
