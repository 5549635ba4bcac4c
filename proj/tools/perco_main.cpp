#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "perco/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"perco: correlated-percolation simulation and renormalization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int workers = 1;
  bool check = false;

  auto* run = app.add_subcommand("run", "execute an experiment described by a JSON config");
  run->add_option("config", config_path, "path to the config JSON")->required();
  run->add_option("--workers", workers, "worker threads for trials (does not affect results)");
  run->add_option("--out", out_dir, "output directory (overrides the config's 'out')");
  run->add_flag("--check", check, "exit 3 when a kind-specific acceptance check fails");

  auto* validate = app.add_subcommand("validate", "print diagnostics for a config without sampling");
  validate->add_option("config", config_path, "path to the config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    perco::RunConfig config = perco::load_run_config(config_path);
    if (validate->parsed()) {
      auto diags = perco::validate_run_config(config);
      if (diags.empty()) {
        std::printf("ok: no diagnostics\n");
      } else {
        for (const auto& d : diags) std::printf("diagnostic: %s\n", d.c_str());
      }
      return 0;
    }
    std::string dir = !out_dir.empty() ? out_dir : config.out_dir;
    auto outcome = perco::execute_run(config, dir, workers, check);
    for (const auto& d : outcome.diagnostics) std::fprintf(stderr, "diagnostic: %s\n", d.c_str());
    for (const auto& f : outcome.failed_checks) std::fprintf(stderr, "check failed: %s\n", f.c_str());
    if (outcome.exit_code == 0) {
      std::printf("wrote %s and %s\n", outcome.run_json_path.c_str(), outcome.csv_path.c_str());
    }
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
