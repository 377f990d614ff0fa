// Command-line driver: mems_bifurcate <subcommand> --config <path> [--out <dir>]

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <string>

#include "mems/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bifurcation diagrams for the radial MEMS equation -Δu = λ|x|^α h(|x|)/(1-u)^2"};
  std::string sub;
  std::string config_path;
  std::string out_dir = ".";
  app.add_option("subcommand", sub, "trace | minimal | spectrum | extremal | pohozaev | certificate | oracle")
      ->required();
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out_dir, "output directory (created if missing)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << mems::usage_text(argv[0]);
    return mems::kExitUsage;
  }

  const auto& names = mems::subcommand_names();
  if (std::find(names.begin(), names.end(), sub) == names.end()) {
    std::cerr << "unknown subcommand '" << sub << "'\n" << mems::usage_text(argv[0]);
    return mems::kExitUsage;
  }
  mems::RunConfig config;
  try {
    config = mems::parse_config(mems::read_text_file(config_path));
  } catch (const std::exception& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return mems::kExitUsage;
  }
  return mems::run_subcommand(sub, config, out_dir);
}
