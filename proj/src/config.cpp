#include "ndm/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ndm/csv.hpp"
#include "ndm/error.hpp"

namespace ndm {

namespace fs = std::filesystem;

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
  ConfigFile file;
  file.source_ = source;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = csv::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(number) + ": expected 'key = value', got '" + text + "'");
    }
    Entry entry{csv::trim(text.substr(0, eq)), csv::trim(text.substr(eq + 1)), number};
    if (entry.key.empty()) throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
    file.entries_.push_back(std::move(entry));
  }
  return file;
}

ConfigFile ConfigFile::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  ConfigFile file = parse(in, path.string());
  file.base_dir_ = path.parent_path();
  return file;
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  std::erase_if(entries_, [&](const Entry& e) { return e.key == key; });
  entries_.push_back({key, value, 0});
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) return it->value;
  }
  return std::nullopt;
}

std::vector<std::string> ConfigFile::get_all(const std::string& key) const {
  std::vector<std::string> values;
  for (const auto& e : entries_) {
    if (e.key == key) values.push_back(e.value);
  }
  return values;
}

std::string ConfigFile::canonical() const {
  std::string text;
  for (const auto& e : entries_) text += e.key + " = " + e.value + "\n";
  return text;
}

std::string ConfigFile::where(const std::string& key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) {
      return it->line ? source_ + ":" + std::to_string(it->line) + ": " + key : "option " + key;
    }
  }
  return source_ + ": " + key;
}

void ConfigFile::check_keys(const std::vector<std::string>& allowed) const {
  for (const auto& e : entries_) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const std::string& a) {
      return a == e.key || (!a.empty() && a.back() == '.' && e.key.rfind(a, 0) == 0 && e.key.size() > a.size());
    });
    if (!ok) {
      throw ConfigError((e.line ? source_ + ":" + std::to_string(e.line) : std::string("option")) +
                        ": unknown key '" + e.key + "'");
    }
  }
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigFile& file) : file_(file) {}

  template <typename F>
  auto parse(const std::string& key, F&& convert) const {
    const auto value = file_.get(key);
    try {
      return convert(*value);
    } catch (const Error& e) {
      throw ConfigError(file_.where(key) + ": " + e.what());
    }
  }

  int integer(const std::string& key, int fallback) const {
    if (!file_.has(key)) return fallback;
    return parse(key, [&](const std::string& v) { return csv::parse_int(v, "value"); });
  }

  double real(const std::string& key, double fallback) const {
    if (!file_.has(key)) return fallback;
    return parse(key, [&](const std::string& v) { return csv::parse_double(v, "value"); });
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!file_.has(key)) return fallback;
    return parse(key, [&](const std::string& v) {
      if (v == "true" || v == "yes" || v == "1") return true;
      if (v == "false" || v == "no" || v == "0") return false;
      throw ConfigError("expected true or false, got '" + v + "'");
    });
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return file_.get(key).value_or(fallback);
  }

  fs::path path(const std::string& value) const {
    fs::path p(value);
    return p.is_absolute() || file_.base_dir().empty() ? p : file_.base_dir() / p;
  }

  std::uint64_t seed(std::uint64_t fallback) const {
    if (!file_.has("seed")) return fallback;
    return parse("seed", [](const std::string& v) {
      std::uint64_t s = 0;
      std::istringstream in(v);
      if (!(in >> s) || !in.eof()) throw ConfigError("expected a nonnegative integer seed, got '" + v + "'");
      return s;
    });
  }

  CovariateRecipe recipe(CovariateRecipe fallback) const {
    const auto terms = file_.get_all("term");
    CovariateRecipe recipe = std::move(fallback);
    if (!terms.empty()) {
      recipe.terms.clear();
      for (const auto& t : terms) {
        try {
          recipe.terms.push_back(parse_term(t));
        } catch (const ConfigError& e) {
          throw ConfigError(file_.where("term") + ": " + e.what());
        }
      }
    }
    recipe.intercept = boolean("intercept", recipe.intercept);
    if (recipe.columns() == 0) throw ConfigError(file_.source() + ": covariate recipe has no columns");
    return recipe;
  }

 private:
  const ConfigFile& file_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = csv::trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

std::vector<Candidate> parse_candidates(const std::string& text) {
  std::vector<Candidate> candidates;
  for (const auto& item : split_list(text)) {
    if (item == "rho0" || item == "ols") {
      candidates.push_back({std::nullopt});
    } else {
      candidates.push_back({NeighborhoodSpec::parse(item)});
    }
  }
  if (candidates.empty()) throw ConfigError("at least one candidate structure is required");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      if (candidates[i].id() == candidates[j].id()) throw ConfigError("duplicate structure " + candidates[i].id());
    }
  }
  return candidates;
}

RunConfig make_run_config(const ConfigFile& file) {
  file.check_keys({"edges", "roster", "nodal.", "dyadic.", "impute", "intercept", "term", "lag", "structures",
                   "alliance_series", "distance_series", "rho_interval", "optimizer.max_iter", "optimizer.tol",
                   "optimizer.margin", "out", "seed", "jobs", "scan.direction", "scan.start", "scan.stop",
                   "scan.step", "scan.residuals", "smooth_window", "fits", "diagnose.structure", "diagnose.ranges",
                   "diagnose.nodes"});
  const Reader read(file);
  RunConfig config;
  if (!file.has("edges")) throw ConfigError(file.source() + ": missing required key 'edges'");
  if (!file.has("roster")) throw ConfigError(file.source() + ": missing required key 'roster'");
  config.edges = read.path(*file.get("edges"));
  config.roster = read.path(*file.get("roster"));

  for (const auto& e : file.entries()) {
    if (e.key.rfind("nodal.", 0) == 0) {
      const std::string name = e.key.substr(6);
      std::erase_if(config.nodal, [&](const SeriesSource& s) { return s.name == name; });
      config.nodal.push_back({name, read.path(e.value), false});
    } else if (e.key.rfind("dyadic.", 0) == 0) {
      std::string name = e.key.substr(7);
      const std::string suffix = ".symmetric";
      if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        continue;
      }
      std::erase_if(config.dyadic, [&](const SeriesSource& s) { return s.name == name; });
      config.dyadic.push_back({name, read.path(e.value), read.boolean("dyadic." + name + ".symmetric", true)});
    }
  }

  config.impute = read.boolean("impute", true);
  config.recipe = read.recipe(CovariateRecipe::arms_trade_default());
  config.lag = read.integer("lag", 2);
  if (config.lag < 0) throw ConfigError(file.where("lag") + ": lag must be nonnegative");
  if (!file.has("structures")) throw ConfigError(file.source() + ": missing required key 'structures'");
  config.candidates = read.parse("structures", [&](const std::string& v) { return parse_candidates(v); });
  config.alliance_series = read.text("alliance_series", config.alliance_series);
  config.distance_series = read.text("distance_series", config.distance_series);
  if (file.has("rho_interval")) {
    config.fit.interval = read.parse("rho_interval", [](const std::string& v) { return parse_rho_interval(v); });
  }
  config.fit.simplex.max_iterations = read.integer("optimizer.max_iter", config.fit.simplex.max_iterations);
  config.fit.simplex.x_tolerance = read.real("optimizer.tol", config.fit.simplex.x_tolerance);
  config.fit.boundary_margin = read.real("optimizer.margin", config.fit.boundary_margin);
  config.out_dir = file.has("out") ? read.path(*file.get("out")) : fs::path("out");
  config.seed = read.seed(config.seed);
  config.jobs = std::max(1, read.integer("jobs", 1));

  if (file.has("scan.direction")) {
    const std::string d = *file.get("scan.direction");
    if (d == "both") {
      config.scan_directions = {ScanDirection::Import, ScanDirection::Export};
    } else {
      config.scan_directions = {read.parse("scan.direction", [](const std::string& v) {
        return parse_scan_direction(v);
      })};
    }
  }
  config.scan_grid.start_km = read.real("scan.start", config.scan_grid.start_km);
  config.scan_grid.stop_km = read.real("scan.stop", config.scan_grid.stop_km);
  config.scan_grid.step_km = read.real("scan.step", config.scan_grid.step_km);
  config.scan_residuals = read.text("scan.residuals", config.scan_residuals);
  if (config.scan_residuals != "ols" && config.scan_residuals != "log_flow") {
    throw ConfigError(file.where("scan.residuals") + ": expected ols or log_flow");
  }
  config.smooth_window = read.integer("smooth_window", config.smooth_window);
  if (file.has("fits")) config.fits_path = read.path(*file.get("fits"));

  config.diagnose_structure = read.text("diagnose.structure", config.diagnose_structure);
  if (file.has("diagnose.ranges")) {
    for (const auto& item : split_list(*file.get("diagnose.ranges"))) {
      const auto dash = item.find('-', 1);
      if (dash == std::string::npos) throw ConfigError(file.where("diagnose.ranges") + ": expected from-to");
      const Period from = read.parse("diagnose.ranges", [&](const std::string&) {
        return csv::parse_int(item.substr(0, dash), "range start");
      });
      const Period to = read.parse("diagnose.ranges", [&](const std::string&) {
        return csv::parse_int(item.substr(dash + 1), "range end");
      });
      if (from > to) throw ConfigError(file.where("diagnose.ranges") + ": empty range " + item);
      config.diagnose_ranges.emplace_back(from, to);
    }
  }
  if (file.has("diagnose.nodes")) config.diagnose_nodes = split_list(*file.get("diagnose.nodes"));

  config.canonical_text = file.canonical();
  return config;
}

void RunConfig::validate_files() const {
  auto check = [](const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw ConfigError(what + " file not found: " + p.string());
  };
  check(edges, "edge");
  check(roster, "roster");
  for (const auto& s : nodal) check(s.path, "covariate (" + s.name + ")");
  for (const auto& s : dyadic) check(s.path, "covariate (" + s.name + ")");
  if (fits_path) check(*fits_path, "fits");
}

SimSpec make_sim_spec(const ConfigFile& file) {
  file.check_keys({"n_nodes", "n_periods", "first_period", "density", "flows_per_period", "structure", "rho", "beta",
                   "sigma", "seed", "lag", "alliance_probability", "disk_radius_km", "intercept", "term", "run."});
  const Reader read(file);
  SimSpec spec;
  spec.n_nodes = read.integer("n_nodes", spec.n_nodes);
  spec.n_periods = read.integer("n_periods", spec.n_periods);
  spec.first_period = read.integer("first_period", spec.first_period);
  spec.density = read.real("density", spec.density);
  if (file.has("flows_per_period")) spec.flows_per_period = read.integer("flows_per_period", 0);
  if (file.has("structure")) {
    spec.structure = read.parse("structure", [](const std::string& v) { return NeighborhoodSpec::parse(v); });
  }
  spec.rho = read.real("rho", spec.rho);
  if (file.has("beta")) {
    spec.beta = read.parse("beta", [](const std::string& v) {
      std::vector<double> beta;
      for (const auto& item : split_list(v)) beta.push_back(csv::parse_double(item, "beta"));
      return beta;
    });
  }
  spec.sigma = read.real("sigma", spec.sigma);
  spec.seed = read.seed(spec.seed);
  spec.lag = read.integer("lag", spec.lag);
  spec.alliance_probability = read.real("alliance_probability", spec.alliance_probability);
  spec.disk_radius_km = read.real("disk_radius_km", spec.disk_radius_km);
  spec.recipe = read.recipe(SimSpec::default_recipe());
  spec.validate();
  return spec;
}

}  // namespace ndm
