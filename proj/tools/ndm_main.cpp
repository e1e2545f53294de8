// ndm: fit, select, scan and diagnose network disturbance models on flow panels.
//
//   ndm simulate --config sim.cfg --out DIR
//   ndm fit|select|scan-cutoff|diagnose --config run.cfg [--out DIR] [--seed N] [--jobs N] [--set key=value]...
//
// Flags override the matching config keys (`out`, `seed`, `jobs`); `--set`
// overrides any key, and is applied after the file is read.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ndm/config.hpp"
#include "ndm/error.hpp"
#include "ndm/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::string seed;
  std::string jobs;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonOptions& options, bool run_flags) {
  sub->add_option("--config", options.config, "configuration file")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", options.out, "output directory (config key: out)");
  sub->add_option("--seed", options.seed, "random seed (config key: seed)");
  if (run_flags) sub->add_option("--jobs", options.jobs, "worker threads (config key: jobs)");
  sub->add_option("--set", options.overrides, "override a config key, key=value");
}

ndm::ConfigFile effective_config(const CommonOptions& options) {
  ndm::ConfigFile file = ndm::ConfigFile::load(options.config);
  for (const auto& item : options.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ndm::ConfigError("--set expects key=value, got '" + item + "'");
    file.set(item.substr(0, eq), item.substr(eq + 1));
  }
  if (!options.seed.empty()) file.set("seed", options.seed);
  if (!options.jobs.empty()) file.set("jobs", options.jobs);
  return file;
}

ndm::RunConfig run_config(const CommonOptions& options) {
  ndm::RunConfig config = ndm::make_run_config(effective_config(options));
  // A flag path is relative to the working directory, not the config file.
  if (!options.out.empty()) config.out_dir = options.out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network disturbance models for directed flow panels"};
  app.set_version_flag("--version", ndm::kVersion);
  app.require_subcommand(1);

  CommonOptions options;
  auto* fit = app.add_subcommand("fit", "fit every candidate structure in every period");
  auto* select = app.add_subcommand("select", "aggregate AIC and Akaike weights across periods");
  auto* scan = app.add_subcommand("scan-cutoff", "Moran's I over a grid of distance cutoffs");
  auto* diagnose = app.add_subcommand("diagnose", "residual diagnostics for one structure");
  auto* simulate = app.add_subcommand("simulate", "write a synthetic panel and its run configuration");
  for (auto* sub : {fit, select, scan, diagnose}) add_common(sub, options, true);
  add_common(simulate, options, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      ndm::ConfigFile file = effective_config(options);
      const fs::path out = options.out.empty() ? fs::path("sim") : fs::path(options.out);
      return ndm::cmd_simulate(file, out, std::cerr);
    }
    const ndm::RunConfig config = run_config(options);
    if (fit->parsed()) return ndm::cmd_fit(config, std::cerr);
    if (select->parsed()) return ndm::cmd_select(config, std::cerr);
    if (scan->parsed()) return ndm::cmd_scan(config, std::cerr);
    return ndm::cmd_diagnose(config, std::cerr);
  } catch (const ndm::ConfigError& e) {
    std::cerr << "ndm: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ndm: error: " << e.what() << '\n';
    return 1;
  }
}
