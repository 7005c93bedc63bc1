#include "mssflow/driver.hpp"
#include "mssflow/error.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Minimal surface system solver: flow, hypothesis checks, density oracles, exterior exhaustion"};
  std::string mode;
  std::string config;
  std::string out;
  bool force = false;
  app.add_option("mode", mode, "solve | check | density | exterior")
      ->required()
      ->check(CLI::IsMember({"solve", "check", "check_hypothesis", "density", "density_oracle", "exterior"}));
  app.add_option("--config", config, "INI run configuration")->required();
  app.add_flag("--force", force, "run the flow even when the hypothesis check fails");
  app.add_option("--out", out, "output directory (overrides [output] dir)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mssflow::kExitConfig;
  }

  try {
    mssflow::RunConfig cfg = mssflow::load_config(config);
    if (mssflow::mode_from_string(mode) != cfg.mode)
      throw mssflow::ConfigError("mode '" + mode + "' does not match config mode '" + mssflow::to_string(cfg.mode) + "'");
    if (!out.empty()) cfg.out_dir = out;
    const mssflow::RunSummary s = mssflow::run(cfg, force);
    std::cout << s.line() << std::endl;
    return s.exit_code;
  } catch (const mssflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    std::cout << "mode=" << mode << " outcome=config_error residual=nan max_lambda=nan" << std::endl;
    return mssflow::kExitConfig;
  } catch (const mssflow::PreconditionError& e) {
    std::cerr << "invalid run: " << e.what() << "\n";
    std::cout << "mode=" << mode << " outcome=config_error residual=nan max_lambda=nan" << std::endl;
    return mssflow::kExitConfig;
  } catch (const mssflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cout << "mode=" << mode << " outcome=error residual=nan max_lambda=nan" << std::endl;
    return mssflow::kExitInvariant;
  }
}
