#include "kinshape/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace kinshape;

  CLI::App app{"Energy-shaping controllers with l-inf reduction of kinetic shaping terms"};
  app.require_subcommand(1);

  std::string config, controller, out_dir, x_csv, b_csv;
  int samples = 0;
  std::uint64_t seed = 0;

  auto* simulate = app.add_subcommand("simulate", "Integrate one closed loop");
  simulate->add_option("config", config, "Experiment config (TOML)")->required();
  simulate->add_option("--controller", controller, "ida | th1 | reduced")
      ->check(CLI::IsMember({"ida", "th1", "reduced"}));
  simulate->add_option("--out", out_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Run ida, th1 and reduced from one config");
  compare->add_option("config", config, "Experiment config (TOML)")->required();
  compare->add_option("--out", out_dir, "Output directory");

  auto* solve = app.add_subcommand("solve", "Solve min ||A x - b||_inf s.t. A + A' <= 0");
  solve->add_option("x", x_csv, "Comma-separated x")->required();
  solve->add_option("b", b_csv, "Comma-separated b")->required();

  auto* verify = app.add_subcommand("verify", "Run the invariant checks on sampled states");
  verify->add_option("config", config, "Experiment config (TOML)")->required();
  verify->add_option("--samples", samples, "Number of sampled states");
  verify->add_option("--seed", seed, "RNG seed");
  verify->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  CommandOptions opt;
  if (!controller.empty()) opt.controller = parse_controller(controller);
  if (!out_dir.empty()) opt.out_dir = out_dir;
  if (verify->count("--samples")) opt.samples = samples;
  if (verify->count("--seed")) opt.seed = seed;

  if (*simulate) return cmd_simulate(config, opt, std::cout, std::cerr);
  if (*compare) return cmd_compare(config, opt, std::cout, std::cerr);
  if (*solve) return cmd_solve(x_csv, b_csv, std::cout, std::cerr);
  return cmd_verify(config, opt, std::cout, std::cerr);
}
