#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ndm/config.hpp"
#include "ndm/panel.hpp"
#include "ndm/selection.hpp"

namespace ndm {

/// Runs body(0..count-1) on up to `jobs` threads. Exceptions are rethrown
/// (the one from the lowest index) after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

struct LoadedData {
  Panel panel;
  CovariateSources covariates;
  std::vector<std::string> warnings;

  StructuralRelations relations(const RunConfig& config) const;
};

/// Reads panel and covariate files; nodal series are imputed when `config.impute`.
LoadedData load_data(const RunConfig& config);

/// Everything a period needs for fitting, independent of the structure.
struct PeriodData {
  Period period = 0;
  FlowIndex index;
  Eigen::VectorXd y;
  DesignMatrix X;
};

struct PreparedPanel {
  std::vector<PeriodData> periods;
  std::vector<std::string> warnings;  // includes skipped periods
};

PreparedPanel prepare_periods(const LoadedData& data, const RunConfig& config);

struct FitRun {
  FitTable fits;
  std::vector<std::string> failures;  // "period structure: message"
};

/// Fits every candidate structure in every prepared period; per-fit failures
/// are collected, not thrown.
FitRun run_fits(const LoadedData& data, const PreparedPanel& prepared, const RunConfig& config);

/// Subcommands. Each writes its artifacts plus manifest.json into
/// config.out_dir and returns the process exit status (0 iff no hard error).
/// Progress and warnings go to `log`.
int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_select(const RunConfig& config, std::ostream& log);
int cmd_scan(const RunConfig& config, std::ostream& log);
int cmd_diagnose(const RunConfig& config, std::ostream& log);
int cmd_simulate(const ConfigFile& spec_file, const std::filesystem::path& out_dir, std::ostream& log);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace ndm
