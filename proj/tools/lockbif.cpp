#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lockbif/app/commands.hpp"
#include "lockbif/app/config.hpp"

int main(int argc, char** argv) {
  using namespace lockbif::app;
  CLI::App app{"Bifurcation analysis of locked solutions of coupled cubic Schrodinger systems"};
  app.footer(csv_contracts() +
             "\nExit codes: 0 success, 2 solver non-convergence, 3 invalid configuration,\n"
             "4 degenerate ground state, 5 invariant violation during verify.");

  std::string command;
  std::string config_path;
  std::string dir = "+";
  Flags flags;
  app.add_option("command", command, "Command to run")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "INI configuration file")->required();
  app.add_option("--out", flags.out, "Output directory (overrides [output] directory)");
  app.add_option("--k", flags.k, "Bifurcation index k >= 2 (continue, sweep)");
  app.add_option("--partition", flags.partition, "Two-block partition such as 1|2,3 (continue)");
  app.add_option("--dir", dir, "Kick direction")->check(CLI::IsMember({"+", "-"}));
  app.add_option("--eps", flags.eps, "Kick size (overrides [continuation] eps)");
  app.add_option("--jobs", flags.jobs, "Worker threads for sweep; 0 = logical cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_invalid_config;
  }
  flags.direction = dir == "-" ? -1 : 1;

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const lockbif::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
  return run(command, cfg, flags, std::cout, std::cerr);
}
