#include <iostream>

#include "CLI11.hpp"
#include "rbsde/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Discrete solver and verification lab for doubly reflected BSDEs"};
  app.require_subcommand(1);
  rbsde::cli::RunOptions opt;
  std::string config;
  int depth = 0;
  std::size_t cases = 0;
  std::uint64_t seed = 0;
  double tol = 0.0, schedule_max = 0.0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config, "Scenario JSON file");
    if (needs_config) c->required();
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--depth", depth, "Override the number of steps (verify: cap the random depths)")
        ->check(CLI::Range(1, 62));
    sub->add_option("--cases", cases, "Instances per criterion (verify)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Random seed (verify)");
    sub->add_option("--tol", tol, "Penalization Cauchy tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--schedule-max", schedule_max, "Largest n of the initial penalty schedule")
        ->check(CLI::PositiveNumber);
  };
  add_common(app.add_subcommand("solve", "Standard-form solve"), true);
  add_common(app.add_subcommand("penalize", "Penalized family, squeeze limits and reduction"), true);
  add_common(app.add_subcommand("snell", "Generalized Snell envelope"), true);
  add_common(app.add_subcommand("envelope", "Envelope transform tables of l and -u"), true);
  add_common(app.add_subcommand("verify", "Invariant and oracle suite"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rbsde::cli::ExitCode::config_error;
  }
  CLI::App* sub = app.get_subcommands().front();
  opt.subcommand = sub->get_name();
  if (sub->count("--config")) opt.config = config;
  if (sub->count("--depth")) opt.depth = depth;
  if (sub->count("--cases")) opt.cases = cases;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--tol")) opt.tol = tol;
  if (sub->count("--schedule-max")) opt.schedule_max = schedule_max;
  return rbsde::cli::run(opt, std::cout, std::cerr);
}
