#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ndm/covariates.hpp"
#include "ndm/moran.hpp"
#include "ndm/sem.hpp"
#include "ndm/synth.hpp"
#include "ndm/weights.hpp"

namespace ndm {

/// Line-oriented `key = value` file. `#` starts a comment; keys may repeat
/// (for list-valued keys such as `term`). Entry order is preserved.
class ConfigFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;  // 0 for entries set programmatically
  };

  static ConfigFile parse(std::istream& in, const std::string& source);
  static ConfigFile load(const std::filesystem::path& path);

  /// Replaces every entry with this key (command-line precedence).
  void set(const std::string& key, const std::string& value);

  std::optional<std::string> get(const std::string& key) const;  // last occurrence
  std::vector<std::string> get_all(const std::string& key) const;
  bool has(const std::string& key) const { return get(key).has_value(); }

  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  /// Canonical text: one `key = value` per line in entry order.
  std::string canonical() const;

  /// Throws ConfigError for the first key not accepted by `allowed`
  /// (exact names or prefixes ending in '.').
  void check_keys(const std::vector<std::string>& allowed) const;

  /// "source:line: key" for error messages.
  std::string where(const std::string& key) const;

 private:
  std::string source_;
  std::filesystem::path base_dir_;
  std::vector<Entry> entries_;
};

struct SeriesSource {
  std::string name;
  std::filesystem::path path;
  bool symmetric = false;
};

/// Candidate dependence structure; nullopt spec is the independent-error model "rho0".
struct Candidate {
  std::optional<NeighborhoodSpec> spec;

  std::string id() const { return spec ? spec->id() : "rho0"; }
};

struct RunConfig {
  std::filesystem::path edges;
  std::filesystem::path roster;
  std::vector<SeriesSource> nodal;
  std::vector<SeriesSource> dyadic;
  bool impute = true;
  CovariateRecipe recipe = CovariateRecipe::arms_trade_default();
  int lag = 2;
  std::vector<Candidate> candidates;
  std::string alliance_series = "alliance";
  std::string distance_series = "distance";
  FitOptions fit;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  int jobs = 1;

  std::vector<ScanDirection> scan_directions{ScanDirection::Import, ScanDirection::Export};
  CutoffGrid scan_grid;
  std::string scan_residuals = "ols";  // or "log_flow"

  int smooth_window = 5;
  std::optional<std::filesystem::path> fits_path;

  std::string diagnose_structure = "n3";
  std::vector<std::pair<Period, Period>> diagnose_ranges;
  std::vector<NodeId> diagnose_nodes;

  std::string canonical_text;  // effective configuration, for the manifest

  /// Throws ConfigError naming the first referenced file that does not exist.
  void validate_files() const;
};

/// Structures accepted by `structures =`: n1, n2, n3, n4_import, n4_export,
/// n5_import:<km>, n5_export:<km>, rho0.
std::vector<Candidate> parse_candidates(const std::string& text);

RunConfig make_run_config(const ConfigFile& file);

/// Simulation spec from a config file; keys prefixed `run.` are not part of the
/// spec and are copied into the generated run configuration.
SimSpec make_sim_spec(const ConfigFile& file);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace ndm
