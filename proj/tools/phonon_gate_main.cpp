// phonon-gate <mode> [--config FILE] [--set key=value]... [--out PATH]

#include "phonon_gate/cli.hpp"
#include "phonon_gate/errors.hpp"
#include "phonon_gate/version.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  using namespace phonon_gate;

  CLI::App app{"Ion-Rydberg-atom phonon-blockade CNOT simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string mode;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;
  app.add_option("mode", mode, "gate | sweep-shift | sweep-fidelity | traces | check")->required();
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--set", overrides, "override one key (key=value); repeatable");
  app.add_option("--out", out_path, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitPhysics;
  }

  RunConfig config;
  try {
    std::string text;
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw IoError("cannot read config file '" + config_path + "'");
      std::ostringstream buf;
      buf << in.rdbuf();
      text = buf.str();
    }
    config = parse_config(text, overrides);
    config.mode = parse_mode(mode);
    if (!out_path.empty()) config.output_path = out_path;
  } catch (const std::exception& e) {
    std::cerr << "error: " << (config_path.empty() ? "" : config_path + ": ") << e.what() << '\n';
    return exit_code_for(e);
  }
  return run(config, std::cout, std::cerr);
}
