#include <iostream>

#include <CLI11.hpp>

#include "cloakopt/app/commands.hpp"

using namespace cloakopt::app;

int main(int argc, char** argv) {
  CLI::App app{"Inverse design of dielectric environments for steady-state emitter entanglement"};
  app.require_subcommand(1);
  app.fallthrough();

  CommandOptions opts;
  std::string config, out;
  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "flat key = value configuration file");
  app.add_option("--out", out, "output directory (overrides out_dir)");
  app.add_option("--threads", threads, "OpenMP thread count")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "seed for randomized checks");

  auto* optimize = app.add_subcommand("optimize", "optimize one design, write design and trace files");
  auto* sweep = app.add_subcommand("sweep", "optimize over a grid of separations and pump rates");
  auto* freespace = app.add_subcommand("freespace", "free-space coupling and concurrence curves");
  auto* mems = app.add_subcommand("mems", "export the maximally entangled mixed state curve");
  auto* validate = app.add_subcommand("validate", "run the invariant suite");
  validate->add_flag("--corrupt-self-term", opts.corrupt_self_term)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (app.count("--config")) opts.config_path = config;
  if (app.count("--out")) opts.out_dir = out;
  if (app.count("--threads")) opts.threads = threads;
  if (app.count("--seed")) opts.seed = seed;

  if (*optimize) return cmd_optimize(opts);
  if (*sweep) return cmd_sweep(opts);
  if (*freespace) return cmd_freespace(opts);
  if (*mems) return cmd_mems(opts);
  if (*validate) return cmd_validate(opts);
  return kExitConfigError;
}
