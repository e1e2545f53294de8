#include "ndm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "ndm/csv.hpp"
#include "ndm/diagnostics.hpp"
#include "ndm/error.hpp"
#include "ndm/io.hpp"
#include "ndm/moran.hpp"
#include "ndm/synth.hpp"

namespace ndm {

namespace fs = std::filesystem;
using nlohmann::json;

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(count, 1))));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

StructuralRelations LoadedData::relations(const RunConfig& config) const {
  return {covariates.find_dyadic(config.alliance_series), covariates.find_dyadic(config.distance_series)};
}

LoadedData load_data(const RunConfig& config) {
  config.validate_files();
  LoadedData data;
  data.panel = load_panel(config.edges.string(), config.roster.string());
  for (const auto& source : config.nodal) {
    std::ifstream in(source.path);
    if (!in) throw DataError("cannot open " + source.path.string());
    NodalSeries series = read_nodal_series(in, source.name, source.path.string());
    data.covariates.nodal.push_back(config.impute ? impute_linear(series) : std::move(series));
  }
  for (const auto& source : config.dyadic) {
    std::ifstream in(source.path);
    if (!in) throw DataError("cannot open " + source.path.string());
    data.covariates.dyadic.push_back(read_dyadic_series(in, source.name, source.symmetric, source.path.string()));
  }
  return data;
}

PreparedPanel prepare_periods(const LoadedData& data, const RunConfig& config) {
  PreparedPanel prepared;
  for (const auto& snapshot : data.panel.snapshots) {
    if (snapshot.empty()) {
      prepared.warnings.push_back("period " + std::to_string(snapshot.period()) + ": no flows, skipped");
      continue;
    }
    PeriodData period;
    period.period = snapshot.period();
    period.index = index_flows(snapshot);
    period.y = log_flows(snapshot, period.index);
    period.X = build_design(period.index, data.covariates, config.recipe, config.lag);
    for (const auto& w : period.X.warnings) prepared.warnings.push_back("period " + std::to_string(period.period) + ": " + w);
    if (period.index.size() <= config.recipe.columns()) {
      prepared.warnings.push_back("period " + std::to_string(period.period) + ": " +
                                  std::to_string(period.index.size()) + " flows for " +
                                  std::to_string(config.recipe.columns()) + " regressors, skipped");
      continue;
    }
    prepared.periods.push_back(std::move(period));
  }
  return prepared;
}

FitRun run_fits(const LoadedData& data, const PreparedPanel& prepared, const RunConfig& config) {
  const StructuralRelations relations = data.relations(config);
  const std::size_t k = config.candidates.size();
  const std::size_t tasks = prepared.periods.size() * k;
  std::vector<std::optional<SemFit>> results(tasks);
  std::vector<std::string> errors(tasks);
  parallel_for(tasks, config.jobs, [&](std::size_t task) {
    const PeriodData& period = prepared.periods[task / k];
    const Candidate& candidate = config.candidates[task % k];
    try {
      if (!candidate.spec) {
        results[task] = fit_ols(period.y, period.X, config.fit);
      } else {
        SemProblem problem{period.y, period.X, build_weight_matrix(*candidate.spec, period.index, relations)};
        results[task] = fit(problem, config.fit);
      }
    } catch (const Error& e) {
      errors[task] = e.what();
    }
  });
  FitRun run;
  for (std::size_t task = 0; task < tasks; ++task) {
    const Period t = prepared.periods[task / k].period;
    const std::string id = config.candidates[task % k].id();
    if (results[task]) {
      run.fits.emplace(std::make_pair(t, id), std::move(*results[task]));
    } else {
      run.failures.push_back("period " + std::to_string(t) + " " + id + ": " + errors[task]);
    }
  }
  return run;
}

namespace {

std::ofstream open_output(const fs::path& dir, const std::string& name, std::vector<std::string>& outputs) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / name).string());
  outputs.push_back(name);
  return out;
}

std::string hex64(std::uint64_t value) {
  char buffer[20];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& config_text,
                    std::uint64_t seed, std::vector<std::string> outputs, const std::vector<std::string>& warnings,
                    const std::vector<std::string>& failures) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["config_hash"] = hex64(fnv1a64(config_text));
  manifest["seed"] = seed;
  manifest["config"] = config_text;
  std::sort(outputs.begin(), outputs.end());
  manifest["outputs"] = outputs;
  manifest["warnings"] = warnings;
  manifest["failures"] = failures;
  const fs::path path = dir / ("manifest_" + command + ".json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_json(out, manifest);
}

void report(std::ostream& log, const std::vector<std::string>& lines, const char* tag) {
  for (const auto& line : lines) log << tag << ": " << line << '\n';
}

fs::path prepare_out(const RunConfig& config) {
  fs::create_directories(config.out_dir);
  return config.out_dir;
}

}  // namespace

int cmd_fit(const RunConfig& config, std::ostream& log) {
  const LoadedData data = load_data(config);
  const PreparedPanel prepared = prepare_periods(data, config);
  const FitRun run = run_fits(data, prepared, config);
  report(log, prepared.warnings, "warning");
  report(log, run.failures, "failed");

  const fs::path dir = prepare_out(config);
  std::vector<std::string> outputs;
  json fits = json::array();
  for (const auto& [key, f] : run.fits) fits.push_back(to_json(f));
  {
    auto out = open_output(dir, "fits.json", outputs);
    write_json(out, fits);
  }
  {
    auto out = open_output(dir, "coefficients.csv", outputs);
    write_coefficients_header(out);
    for (const auto& [key, f] : run.fits) write_coefficients(out, f);
  }
  write_manifest(dir, "fit", config.canonical_text, config.seed, outputs, prepared.warnings, run.failures);
  log << "fit: " << run.fits.size() << " fits over " << prepared.periods.size() << " periods, "
      << run.failures.size() << " failures\n";
  return 0;
}

int cmd_select(const RunConfig& config, std::ostream& log) {
  FitTable fits;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;
  if (config.fits_path) {
    std::ifstream in(*config.fits_path);
    if (!in) throw DataError("cannot open " + config.fits_path->string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw DataError(config.fits_path->string() + ": " + e.what());
    }
    for (const auto& record : j) {
      SemFit f = fit_from_json(record);
      auto key = std::make_pair(f.period, f.structure);
      fits.emplace(std::move(key), std::move(f));
    }
  } else {
    const LoadedData data = load_data(config);
    const PreparedPanel prepared = prepare_periods(data, config);
    FitRun run = run_fits(data, prepared, config);
    warnings = prepared.warnings;
    failures = run.failures;
    fits = std::move(run.fits);
  }
  report(log, warnings, "warning");
  report(log, failures, "failed");
  const SelectionReport selection = select(fits);
  for (const auto& [t, reason] : selection.excluded) {
    warnings.push_back("period " + std::to_string(t) + " excluded from selection: " + reason);
    log << "warning: period " << t << " excluded from selection: " << reason << '\n';
  }

  const fs::path dir = prepare_out(config);
  std::vector<std::string> outputs;
  {
    auto out = open_output(dir, "aggregated.csv", outputs);
    write_aggregated_csv(out, selection);
  }
  {
    auto out = open_output(dir, "weights.csv", outputs);
    write_weights_csv(out, selection);
  }
  {
    auto out = open_output(dir, "weights_smoothed.csv", outputs);
    write_smoothed_weights_csv(out, selection, config.smooth_window);
  }
  {
    json j = to_json(selection);
    j["smoothing"] = {{"method", "centered moving average"}, {"window", config.smooth_window}};
    auto out = open_output(dir, "selection.json", outputs);
    write_json(out, j);
  }
  write_manifest(dir, "select", config.canonical_text, config.seed, outputs, warnings, failures);
  log << "select: winner " << selection.winner << " over " << selection.per_period.size() << " periods\n";
  return 0;
}

int cmd_scan(const RunConfig& config, std::ostream& log) {
  const LoadedData data = load_data(config);
  const PreparedPanel prepared = prepare_periods(data, config);
  report(log, prepared.warnings, "warning");
  const DyadicSeries* distances = data.covariates.find_dyadic(config.distance_series);
  if (!distances) throw ConfigError("scan-cutoff needs the dyadic series '" + config.distance_series + "'");

  std::vector<PeriodResiduals> residuals;
  for (const auto& period : prepared.periods) {
    if (config.scan_residuals == "ols") {
      residuals.push_back({period.index, fit_ols(period.y, period.X, config.fit).u_hat});
    } else {
      residuals.push_back({period.index, period.y});
    }
  }
  const std::vector<double> grid = config.scan_grid.values();
  std::vector<CutoffScan> scans(config.scan_directions.size());
  parallel_for(scans.size(), config.jobs, [&](std::size_t i) {
    scans[i] = scan_cutoffs(residuals, *distances, config.scan_directions[i], grid);
  });

  const fs::path dir = prepare_out(config);
  std::vector<std::string> outputs;
  for (const auto& scan : scans) {
    const std::string stem = "scan_" + to_string(scan.direction);
    {
      auto out = open_output(dir, stem + ".csv", outputs);
      write_scan_csv(out, scan);
    }
    json j = to_json(scan);
    j["residuals"] = config.scan_residuals;
    auto out = open_output(dir, stem + ".json", outputs);
    write_json(out, j);
    log << "scan-cutoff: " << to_string(scan.direction) << " best cutoff " << scan.best_cutoff << " km (I = "
        << scan.best_value << ")\n";
  }
  write_manifest(dir, "scan-cutoff", config.canonical_text, config.seed, outputs, prepared.warnings, {});
  return 0;
}

int cmd_diagnose(const RunConfig& config, std::ostream& log) {
  const NeighborhoodSpec spec = NeighborhoodSpec::parse(config.diagnose_structure);
  const LoadedData data = load_data(config);
  const PreparedPanel prepared = prepare_periods(data, config);
  const StructuralRelations relations = data.relations(config);
  std::vector<std::string> warnings = prepared.warnings;
  std::vector<std::string> failures;

  const std::size_t count = prepared.periods.size();
  std::vector<std::optional<SemFit>> fits(count);
  std::vector<std::optional<WeightMatrix>> weights(count);
  std::vector<std::string> errors(count);
  parallel_for(count, config.jobs, [&](std::size_t i) {
    const PeriodData& period = prepared.periods[i];
    try {
      SemProblem problem{period.y, period.X, build_weight_matrix(spec, period.index, relations)};
      fits[i] = fit(problem, config.fit);
      weights[i] = std::move(problem.W);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::vector<double> pooled_standardized;
  std::vector<TradecorrelationResiduals> tradecorr;
  for (std::size_t i = 0; i < count; ++i) {
    const Period t = prepared.periods[i].period;
    if (!fits[i]) {
      failures.push_back("period " + std::to_string(t) + ": " + errors[i]);
      continue;
    }
    if (!fits[i]->converged || fits[i]->degenerate) {
      warnings.push_back("period " + std::to_string(t) + ": fit not usable for diagnostics, skipped");
      continue;
    }
    const Eigen::VectorXd z = standardized_residuals(*fits[i]);
    pooled_standardized.insert(pooled_standardized.end(), z.data(), z.data() + z.size());
    tradecorr.push_back(tradecorr_residuals(*fits[i], *weights[i]));
  }
  report(log, warnings, "warning");
  report(log, failures, "failed");
  if (pooled_standardized.size() < 2) throw NumericError("diagnose: no usable fits");

  const fs::path dir = prepare_out(config);
  std::vector<std::string> outputs;
  {
    auto out = open_output(dir, "qq.csv", outputs);
    write_qq_csv(out, qq_points(pooled_standardized));
  }
  {
    auto out = open_output(dir, "hist.csv", outputs);
    write_histogram_csv(out, histogram(pooled_standardized));
  }
  {
    auto out = open_output(dir, "tradecorr.csv", outputs);
    write_tradecorr_csv(out, tradecorr);
  }

  std::vector<std::pair<std::string, std::vector<TradecorrelationResiduals>>> groups;
  if (config.diagnose_ranges.empty()) {
    groups.emplace_back("kde.csv", tradecorr);
  } else {
    for (const auto& [from, to] : config.diagnose_ranges) {
      std::vector<TradecorrelationResiduals> subset;
      for (const auto& r : tradecorr) {
        if (from <= r.period && r.period <= to) subset.push_back(r);
      }
      groups.emplace_back("kde_" + std::to_string(from) + "-" + std::to_string(to) + ".csv", std::move(subset));
    }
  }
  json bandwidths = json::object();
  for (const auto& [name, subset] : groups) {
    const auto attribution = pool_attributions(subset);
    std::vector<NodeId> nodes;
    for (const auto& [node, values] : attribution) {
      if (config.diagnose_nodes.empty() ||
          std::find(config.diagnose_nodes.begin(), config.diagnose_nodes.end(), node) != config.diagnose_nodes.end()) {
        nodes.push_back(node);
      }
    }
    std::vector<std::optional<DensityCurve>> curves(nodes.size());
    parallel_for(nodes.size(), config.jobs, [&](std::size_t i) {
      const auto& values = attribution.at(nodes[i]);
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      if (values.size() < 2 || !(*hi > *lo)) return;
      curves[i] = kde(values);
      curves[i]->node = nodes[i];
    });
    std::vector<DensityCurve> kept;
    json bw = json::object();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (curves[i]) {
        bw[nodes[i]] = curves[i]->bandwidth;
        kept.push_back(std::move(*curves[i]));
      } else {
        warnings.push_back(name + ": node " + nodes[i] + " has fewer than two distinct values, no density");
      }
    }
    bandwidths[name] = bw;
    auto out = open_output(dir, name, outputs);
    write_kde_csv(out, kept);
  }
  {
    json meta;
    meta["structure"] = spec.id();
    meta["kernel"] = "gaussian";
    meta["bandwidth_rule"] = "silverman: 0.9 min(sd, IQR/1.34) m^(-1/5)";
    meta["histogram_rule"] = "freedman-diaconis";
    meta["qq_plotting_positions"] = "(k - 0.5) / m";
    meta["periods_used"] = tradecorr.size();
    meta["standardized_residuals"] = pooled_standardized.size();
    meta["bandwidths"] = bandwidths;
    auto out = open_output(dir, "diagnostics.json", outputs);
    write_json(out, meta);
  }
  write_manifest(dir, "diagnose", config.canonical_text, config.seed, outputs, warnings, failures);
  log << "diagnose: " << tradecorr.size() << " periods, " << pooled_standardized.size() << " residuals\n";
  return 0;
}

int cmd_simulate(const ConfigFile& spec_file, const fs::path& out_dir, std::ostream& log) {
  const SimSpec spec = make_sim_spec(spec_file);
  const SimPanel sim = simulate(spec);
  fs::create_directories(out_dir);
  std::vector<std::string> outputs;
  {
    auto out = open_output(out_dir, "edges.csv", outputs);
    write_edges(out, sim.panel);
  }
  {
    auto out = open_output(out_dir, "roster.csv", outputs);
    write_roster(out, sim.panel.roster);
  }
  std::string run_cfg = "# generated by ndm simulate\nedges = edges.csv\nroster = roster.csv\n";
  for (const auto& series : sim.covariates.nodal) {
    auto out = open_output(out_dir, series.name() + ".csv", outputs);
    write_nodal_series(out, series);
    run_cfg += "nodal." + series.name() + " = " + series.name() + ".csv\n";
  }
  for (const auto& series : sim.covariates.dyadic) {
    auto out = open_output(out_dir, series.name() + ".csv", outputs);
    write_dyadic_series(out, series);
    run_cfg += "dyadic." + series.name() + " = " + series.name() + ".csv\n";
    run_cfg += "dyadic." + series.name() + ".symmetric = " + (series.symmetric() ? "true" : "false") + "\n";
  }
  run_cfg += "lag = " + std::to_string(spec.lag) + "\n";
  run_cfg += std::string("intercept = ") + (spec.recipe.intercept ? "true" : "false") + "\n";
  for (const auto& term : spec.recipe.terms) {
    run_cfg += "term = " + term.name + ":" + term.series + ":" + to_string(term.role) + ":" +
               to_string(term.transform) + "\n";
  }
  bool has_structures = false;
  bool has_seed = false;
  bool has_out = false;
  for (const auto& e : spec_file.entries()) {
    if (e.key.rfind("run.", 0) != 0) continue;
    const std::string key = e.key.substr(4);
    has_structures = has_structures || key == "structures";
    has_seed = has_seed || key == "seed";
    has_out = has_out || key == "out";
    run_cfg += key + " = " + e.value + "\n";
  }
  if (!has_structures) {
    run_cfg += "structures = n1,n2,n3,n4_import,n4_export,n5_import:1100,n5_export:300,rho0\n";
  }
  if (!has_out) run_cfg += "out = results\n";
  if (!has_seed) run_cfg += "seed = " + std::to_string(spec.seed) + "\n";
  {
    auto out = open_output(out_dir, "run.cfg", outputs);
    out << run_cfg;
  }
  {
    auto out = open_output(out_dir, "truth.json", outputs);
    write_json(out, to_json(spec, sim.truth));
  }
  write_manifest(out_dir, "simulate", spec_file.canonical(), spec.seed, outputs, {}, {});
  std::size_t flows = 0;
  for (const auto& s : sim.panel.snapshots) flows += s.size();
  log << "simulate: " << sim.panel.snapshots.size() << " periods, " << flows << " flows\n";
  return 0;
}

}  // namespace ndm
