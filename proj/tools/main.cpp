#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nichewave: persistence lab for nonlocal KPP equations"};
  std::string command;
  std::string config;
  app.add_option("command", command,
                 "validate | spectrum | stationary | evolve | sweep | eps-star | ess | fat-tail | audit")
      ->required();
  app.add_option("config", config, "INI experiment config")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nichewave::cli::exit_config;
  }
  return nichewave::cli::run(command, config, std::cout, std::cerr);
}
