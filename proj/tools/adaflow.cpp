#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "adaflow/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Adaptive and momentum stochastic optimization experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  long long threads = 0;

  for (const char* name : {"ode", "optimize", "clt", "traps"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "Experiment config (JSON)")->required();
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--threads", threads, "Worker threads (default: ADAFLOW_THREADS or 1)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : adaflow::cli::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommand(command);
  std::optional<long long> flag;
  if (sub->count("--threads")) flag = threads;
  return adaflow::cli::run_from_file(command, config, out, flag, std::cout, std::cerr);
}
