#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace fracac::cli;
  CLI::App app{"fracac: fractional Allen-Cahn experiments"};
  app.require_subcommand(1);
  RunOptions opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "experiment configuration (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--threads", opt.threads, "worker threads (0: all cores)");
  };
  auto* solve = app.add_subcommand("solve", "single eps solve");
  auto* sweep = app.add_subcommand("sweep", "eps sweep with limit diagnostics");
  auto* geometry = app.add_subcommand("geometry", "nonlocal perimeter and curvature of a set");
  auto* verify = app.add_subcommand("verify", "invariant suite");
  for (auto* s : {solve, sweep, geometry, verify}) common(s);
  geometry->add_option("subtask", opt.subtask, "perimeter, curvature, variation or cone-check")
      ->required()
      ->check(CLI::IsMember({"perimeter", "curvature", "variation", "cone-check"}));
  for (auto* s : {solve, sweep, geometry, verify}) s->add_option("--only", opt.only, "verify groups, comma separated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ConfigFailure;
  }
  return run(app.get_subcommands().front()->get_name(), opt, std::cerr);
}
