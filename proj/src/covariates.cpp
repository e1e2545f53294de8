#include "ndm/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "ndm/csv.hpp"
#include "ndm/error.hpp"

namespace ndm {

std::optional<double> NodalSeries::at(const NodeId& node, Period period) const {
  auto it = values_.find(node);
  if (it == values_.end()) return std::nullopt;
  auto jt = it->second.find(period);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::pair<NodeId, NodeId> DyadicSeries::key(const NodeId& a, const NodeId& b) const {
  if (symmetric_ && b < a) return {b, a};
  return {a, b};
}

void DyadicSeries::set(const NodeId& a, const NodeId& b, Period period, std::optional<double> value) {
  auto& slot = values_[key(a, b)];
  auto [it, inserted] = slot.emplace(period, value);
  if (inserted) return;
  if (!symmetric_) {
    throw DataError("dyadic series " + name_ + ": duplicate entry for (" + a + "," + b + ") in period " +
                    std::to_string(period));
  }
  if (symmetric_ && it->second && value && *it->second != *value) {
    throw DataError("dyadic series " + name_ + ": asymmetric values for (" + a + "," + b + ") in period " +
                    std::to_string(period));
  }
  if (!it->second) it->second = value;
}

std::optional<double> DyadicSeries::lookup(const NodeId& a, const NodeId& b, Period period) const {
  auto it = values_.find(key(a, b));
  if (it == values_.end()) return std::nullopt;
  std::optional<double> earlier;
  std::optional<double> later;
  for (const auto& [t, v] : it->second) {
    if (!v) continue;
    if (t <= period) {
      earlier = v;
    } else if (!later) {
      later = v;
    }
  }
  return earlier ? earlier : later;
}

NodalSeries impute_linear(const NodalSeries& series) {
  NodalSeries out(series.name());
  for (const auto& [node, by_period] : series.values()) {
    std::vector<std::pair<Period, double>> observed;
    for (const auto& [t, v] : by_period) {
      if (v) observed.emplace_back(t, *v);
    }
    if (observed.empty()) {
      throw DataError("series " + series.name() + ": node " + node + " has no observed values");
    }
    const Period first = by_period.begin()->first;
    const Period last = by_period.rbegin()->first;
    std::size_t k = 0;  // observed[k] is the first observation at or after t
    for (Period t = first; t <= last; ++t) {
      while (k < observed.size() && observed[k].first < t) ++k;
      double value = 0.0;
      if (k < observed.size() && observed[k].first == t) {
        value = observed[k].second;
      } else if (k == 0) {
        value = observed.front().second;
      } else if (k == observed.size()) {
        value = observed.back().second;
      } else {
        const auto& [t0, v0] = observed[k - 1];
        const auto& [t1, v1] = observed[k];
        const double w = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
        value = v0 + w * (v1 - v0);
      }
      out.set(node, t, value);
    }
  }
  return out;
}

CovariateRecipe CovariateRecipe::arms_trade_default() {
  CovariateRecipe recipe;
  recipe.intercept = true;
  recipe.terms = {
      {"log_gdp_sender", "gdp", TermRole::Sender, Transform::Log},
      {"log_gdp_receiver", "gdp", TermRole::Receiver, Transform::Log},
      {"log_milex_receiver", "milex", TermRole::Receiver, Transform::Log},
      {"alliance", "alliance", TermRole::Dyad, Transform::Identity},
      {"polity_diff", "polity", TermRole::AbsDifference, Transform::Identity},
  };
  return recipe;
}

std::vector<std::string> CovariateRecipe::column_names() const {
  std::vector<std::string> names;
  if (intercept) names.emplace_back("intercept");
  for (const auto& t : terms) names.push_back(t.name);
  return names;
}

std::string to_string(TermRole role) {
  switch (role) {
    case TermRole::Sender: return "sender";
    case TermRole::Receiver: return "receiver";
    case TermRole::Dyad: return "dyad";
    case TermRole::AbsDifference: return "absdiff";
  }
  return "?";
}

std::string to_string(Transform transform) { return transform == Transform::Log ? "log" : "identity"; }

CovariateTerm parse_term(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(csv::trim(text.substr(start, colon == std::string::npos ? std::string::npos : colon - start)));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() < 3 || parts.size() > 4) {
    throw ConfigError("term '" + text + "': expected name:series:role[:transform]");
  }
  CovariateTerm term;
  term.name = parts[0];
  term.series = parts[1];
  if (term.name.empty() || term.series.empty()) throw ConfigError("term '" + text + "': empty name or series");
  const std::string& role = parts[2];
  if (role == "sender") {
    term.role = TermRole::Sender;
  } else if (role == "receiver") {
    term.role = TermRole::Receiver;
  } else if (role == "dyad") {
    term.role = TermRole::Dyad;
  } else if (role == "absdiff") {
    term.role = TermRole::AbsDifference;
  } else {
    throw ConfigError("term '" + text + "': unknown role '" + role + "'");
  }
  if (parts.size() == 4) {
    if (parts[3] == "log") {
      term.transform = Transform::Log;
    } else if (parts[3] == "identity" || parts[3].empty()) {
      term.transform = Transform::Identity;
    } else {
      throw ConfigError("term '" + text + "': unknown transform '" + parts[3] + "'");
    }
  }
  return term;
}

const NodalSeries* CovariateSources::find_nodal(const std::string& name) const {
  for (const auto& s : nodal) {
    if (s.name() == name) return &s;
  }
  return nullptr;
}

const DyadicSeries* CovariateSources::find_dyadic(const std::string& name) const {
  for (const auto& s : dyadic) {
    if (s.name() == name) return &s;
  }
  return nullptr;
}

namespace {

class NodalReader {
 public:
  NodalReader(const NodalSeries& series, Period period, std::vector<std::string>& warnings)
      : series_(series), period_(period), warnings_(warnings) {}

  double operator()(const NodeId& node) {
    const auto& all = series_.values();
    auto it = all.find(node);
    if (it == all.end() || it->second.empty()) {
      throw DataError("series " + series_.name() + ": no values for node " + node);
    }
    const auto& by_period = it->second;
    Period t = period_;
    if (t < by_period.begin()->first || t > by_period.rbegin()->first) {
      t = t < by_period.begin()->first ? by_period.begin()->first : by_period.rbegin()->first;
      if (warned_.insert(node).second) {
        warnings_.push_back("series " + series_.name() + ": node " + node + " has no value at " +
                            std::to_string(period_) + ", using value from " + std::to_string(t));
      }
    }
    auto jt = by_period.find(t);
    if (jt == by_period.end() || !jt->second) {
      throw DataError("series " + series_.name() + ": value for node " + node + " at " + std::to_string(t) +
                      " is missing (impute first)");
    }
    return *jt->second;
  }

 private:
  const NodalSeries& series_;
  Period period_;
  std::vector<std::string>& warnings_;
  std::set<NodeId> warned_;
};

double apply_transform(Transform transform, double value, const std::string& what) {
  if (transform == Transform::Identity) return value;
  if (!(value > 0.0)) throw DataError(what + ": cannot take log of nonpositive value " + csv::format_double(value));
  return std::log(value);
}

}  // namespace

DesignMatrix build_design(const FlowIndex& index, const CovariateSources& sources, const CovariateRecipe& recipe,
                          int lag) {
  if (recipe.columns() == 0) throw ConfigError("covariate recipe has no columns");
  const Period at = index.period() - lag;
  DesignMatrix design;
  design.index = index;
  design.column_names = recipe.column_names();
  design.intercept = recipe.intercept;
  const auto n = static_cast<Eigen::Index>(index.size());
  design.rows.resize(n, static_cast<Eigen::Index>(recipe.columns()));

  Eigen::Index col = 0;
  if (recipe.intercept) design.rows.col(col++).setOnes();

  for (const auto& term : recipe.terms) {
    if (term.role == TermRole::Dyad) {
      const DyadicSeries* series = sources.find_dyadic(term.series);
      if (!series) throw ConfigError("term " + term.name + ": unknown dyadic series '" + term.series + "'");
      for (Eigen::Index a = 0; a < n; ++a) {
        const Dyad& d = index[static_cast<std::size_t>(a)];
        auto v = series->lookup(d.sender, d.receiver, at);
        if (!v) {
          throw DataError("series " + series->name() + ": missing value for pair " + to_string(d) + " at " +
                          std::to_string(at));
        }
        design.rows(a, col) = apply_transform(term.transform, *v, "series " + series->name() + " pair " + to_string(d));
      }
    } else {
      const NodalSeries* series = sources.find_nodal(term.series);
      if (!series) throw ConfigError("term " + term.name + ": unknown nodal series '" + term.series + "'");
      NodalReader read(*series, at, design.warnings);
      for (Eigen::Index a = 0; a < n; ++a) {
        const Dyad& d = index[static_cast<std::size_t>(a)];
        const std::string what = "series " + series->name() + " period " + std::to_string(at);
        double value = 0.0;
        switch (term.role) {
          case TermRole::Sender:
            value = apply_transform(term.transform, read(d.sender), what + " node " + d.sender);
            break;
          case TermRole::Receiver:
            value = apply_transform(term.transform, read(d.receiver), what + " node " + d.receiver);
            break;
          case TermRole::AbsDifference:
            value = std::abs(apply_transform(term.transform, read(d.sender), what + " node " + d.sender) -
                             apply_transform(term.transform, read(d.receiver), what + " node " + d.receiver));
            break;
          case TermRole::Dyad:
            break;
        }
        design.rows(a, col) = value;
      }
    }
    ++col;
  }
  return design;
}

NodalSeries read_nodal_series(std::istream& in, const std::string& name, const std::string& source) {
  csv::Reader reader(in, source);
  const auto cols = reader.require_columns({"node", "period", "value"});
  NodalSeries series(name);
  csv::Row row;
  while (reader.next(row)) {
    const std::string where = source + ":" + std::to_string(row.line);
    const NodeId& node = row.fields[cols[0]];
    const Period t = csv::parse_int(row.fields[cols[1]], where + " period");
    if (series.values().count(node) && series.values().at(node).count(t)) {
      throw DataError(where + ": duplicate entry for node " + node + " period " + std::to_string(t));
    }
    series.set(node, t, csv::parse_optional_double(row.fields[cols[2]], where + " value"));
  }
  return series;
}

DyadicSeries read_dyadic_series(std::istream& in, const std::string& name, bool symmetric, const std::string& source) {
  csv::Reader reader(in, source);
  const auto cols = reader.require_columns({"node_a", "node_b", "period", "value"});
  DyadicSeries series(name, symmetric);
  csv::Row row;
  while (reader.next(row)) {
    const std::string where = source + ":" + std::to_string(row.line);
    try {
      series.set(row.fields[cols[0]], row.fields[cols[1]], csv::parse_int(row.fields[cols[2]], where + " period"),
                 csv::parse_optional_double(row.fields[cols[3]], where + " value"));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return series;
}

void write_nodal_series(std::ostream& out, const NodalSeries& series) {
  out << "node,period,value\n";
  for (const auto& [node, by_period] : series.values()) {
    for (const auto& [t, v] : by_period) {
      out << node << ',' << t << ',' << (v ? csv::format_double(*v) : std::string("NA")) << '\n';
    }
  }
}

void write_dyadic_series(std::ostream& out, const DyadicSeries& series) {
  out << "node_a,node_b,period,value\n";
  for (const auto& [pair, by_period] : series.values()) {
    for (const auto& [t, v] : by_period) {
      out << pair.first << ',' << pair.second << ',' << t << ',' << (v ? csv::format_double(*v) : std::string("NA"))
          << '\n';
    }
  }
}

}  // namespace ndm
