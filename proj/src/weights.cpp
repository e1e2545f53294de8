#include "ndm/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "ndm/csv.hpp"
#include "ndm/error.hpp"

namespace ndm {

NeighborhoodSpec::NeighborhoodSpec(NeighborhoodKind kind, std::optional<double> cutoff_km)
    : kind_(kind), cutoff_(cutoff_km) {
  if (is_distance()) {
    if (!cutoff_ || !(*cutoff_ > 0.0) || !std::isfinite(*cutoff_)) {
      throw ConfigError(kind_name(kind_) + " requires a positive cutoff in km");
    }
  } else if (cutoff_) {
    throw ConfigError(kind_name(kind_) + " does not take a cutoff");
  }
}

bool NeighborhoodSpec::is_distance() const {
  return kind_ == NeighborhoodKind::DistanceImport || kind_ == NeighborhoodKind::DistanceExport;
}

bool NeighborhoodSpec::is_alliance() const {
  return kind_ == NeighborhoodKind::AllianceImport || kind_ == NeighborhoodKind::AllianceExport;
}

std::string kind_name(NeighborhoodKind kind) {
  switch (kind) {
    case NeighborhoodKind::SenderAttached: return "n1";
    case NeighborhoodKind::ReceiverAttached: return "n2";
    case NeighborhoodKind::FullActivity: return "n3";
    case NeighborhoodKind::AllianceImport: return "n4_import";
    case NeighborhoodKind::AllianceExport: return "n4_export";
    case NeighborhoodKind::DistanceImport: return "n5_import";
    case NeighborhoodKind::DistanceExport: return "n5_export";
  }
  return "?";
}

std::vector<NeighborhoodKind> all_neighborhood_kinds() {
  return {NeighborhoodKind::SenderAttached,  NeighborhoodKind::ReceiverAttached, NeighborhoodKind::FullActivity,
          NeighborhoodKind::AllianceImport,  NeighborhoodKind::AllianceExport,   NeighborhoodKind::DistanceImport,
          NeighborhoodKind::DistanceExport};
}

std::string NeighborhoodSpec::id() const {
  std::string id = kind_name(kind_);
  if (cutoff_) {
    std::string km = csv::format_double(*cutoff_);
    id += "_c" + km;
  }
  return id;
}

NeighborhoodSpec NeighborhoodSpec::parse(const std::string& text) {
  const std::string t = csv::trim(text);
  const auto colon = t.find(':');
  const std::string name = csv::trim(t.substr(0, colon));
  std::optional<double> cutoff;
  if (colon != std::string::npos) {
    try {
      cutoff = csv::parse_double(t.substr(colon + 1), "cutoff");
    } catch (const DataError& e) {
      throw ConfigError("structure '" + t + "': " + e.what());
    }
  }
  for (auto kind : all_neighborhood_kinds()) {
    if (kind_name(kind) == name) return NeighborhoodSpec(kind, cutoff);
  }
  throw ConfigError("unknown structure '" + t + "'");
}

namespace {

using Groups = std::map<NodeId, std::vector<std::size_t>>;

Groups group_by(const FlowIndex& index, bool by_sender) {
  Groups groups;
  for (std::size_t a = 0; a < index.size(); ++a) {
    groups[by_sender ? index[a].sender : index[a].receiver].push_back(a);
  }
  return groups;
}

void append_group(const Groups& groups, const NodeId& node, std::vector<std::size_t>& out) {
  auto it = groups.find(node);
  if (it != groups.end()) out.insert(out.end(), it->second.begin(), it->second.end());
}

void finish(std::vector<std::size_t>& row, std::size_t self) {
  std::sort(row.begin(), row.end());
  row.erase(std::unique(row.begin(), row.end()), row.end());
  row.erase(std::remove(row.begin(), row.end(), self), row.end());
}

// For kinds 4 and 5: related(k, l) between two distinct nodes of the same role
// (receivers for import kinds, senders for export kinds).
std::map<NodeId, std::vector<NodeId>> related_nodes(const NeighborhoodSpec& spec, const std::vector<NodeId>& nodes,
                                                    const StructuralRelations& relations, Period period) {
  const DyadicSeries* series = spec.is_alliance() ? relations.alliance : relations.distance;
  if (!series) {
    throw DataError(spec.id() + ": " + (spec.is_alliance() ? "alliance" : "distance") +
                    " data required but not provided");
  }
  std::map<NodeId, std::vector<NodeId>> related;
  for (std::size_t x = 0; x < nodes.size(); ++x) {
    for (std::size_t y = x + 1; y < nodes.size(); ++y) {
      const NodeId& k = nodes[x];
      const NodeId& l = nodes[y];
      auto value = series->lookup(k, l, period);
      if (!series->symmetric()) {
        auto reverse = series->lookup(l, k, period);
        if (!value) value = reverse;
        if (value && reverse && *value != *reverse) {
          throw DataError(spec.id() + ": " + series->name() + " differs for (" + k + "," + l + ") and (" + l + "," +
                          k + ") in period " + std::to_string(period));
        }
      }
      if (!value) {
        throw DataError(spec.id() + ": missing " + series->name() + " for pair (" + k + "," + l + ") in period " +
                        std::to_string(period));
      }
      bool linked = false;
      if (spec.is_alliance()) {
        if (*value != 0.0 && *value != 1.0) {
          throw DataError(spec.id() + ": alliance indicator for (" + k + "," + l + ") is " +
                          csv::format_double(*value) + ", expected 0 or 1");
        }
        linked = *value == 1.0;
      } else {
        linked = *value < *spec.cutoff_km();
      }
      if (linked) {
        related[k].push_back(l);
        related[l].push_back(k);
      }
    }
  }
  return related;
}

}  // namespace

Neighborhoods neighborhood(const NeighborhoodSpec& spec, const FlowIndex& index, const StructuralRelations& relations) {
  const std::size_t n = index.size();
  Neighborhoods rows(n);
  const Groups by_sender = group_by(index, true);
  const Groups by_receiver = group_by(index, false);

  switch (spec.kind()) {
    case NeighborhoodKind::SenderAttached:
    case NeighborhoodKind::ReceiverAttached:
    case NeighborhoodKind::FullActivity: {
      for (std::size_t a = 0; a < n; ++a) {
        const Dyad& v = index[a];
        auto& row = rows[a];
        if (spec.kind() == NeighborhoodKind::SenderAttached) {
          append_group(by_sender, v.sender, row);
        } else if (spec.kind() == NeighborhoodKind::ReceiverAttached) {
          append_group(by_receiver, v.receiver, row);
        } else {
          append_group(by_sender, v.sender, row);
          append_group(by_sender, v.receiver, row);
          append_group(by_receiver, v.sender, row);
          append_group(by_receiver, v.receiver, row);
        }
        if (auto reciprocal = index.position({v.receiver, v.sender})) row.push_back(*reciprocal);
        finish(row, a);
      }
      break;
    }
    case NeighborhoodKind::AllianceImport:
    case NeighborhoodKind::DistanceImport:
    case NeighborhoodKind::AllianceExport:
    case NeighborhoodKind::DistanceExport: {
      const bool import = spec.kind() == NeighborhoodKind::AllianceImport ||
                          spec.kind() == NeighborhoodKind::DistanceImport;
      const Groups& groups = import ? by_receiver : by_sender;
      std::vector<NodeId> nodes;
      for (const auto& [node, _] : groups) nodes.push_back(node);
      const auto related = related_nodes(spec, nodes, relations, index.period());
      for (std::size_t a = 0; a < n; ++a) {
        const NodeId& anchor = import ? index[a].receiver : index[a].sender;
        auto it = related.find(anchor);
        if (it == related.end()) continue;
        for (const auto& other : it->second) append_group(groups, other, rows[a]);
        finish(rows[a], a);
      }
      break;
    }
  }
  return rows;
}

Eigen::MatrixXd row_normalize(const Neighborhoods& neighbors) {
  const auto n = static_cast<Eigen::Index>(neighbors.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& row = neighbors[static_cast<std::size_t>(a)];
    if (row.empty()) continue;
    const double weight = 1.0 / static_cast<double>(row.size());
    for (auto b : row) w(a, static_cast<Eigen::Index>(b)) = weight;
  }
  return w;
}

WeightMatrix build_weight_matrix(const NeighborhoodSpec& spec, const FlowIndex& index,
                                 const StructuralRelations& relations) {
  return {index, row_normalize(neighborhood(spec, index, relations)), spec};
}

void write_weight_coo(std::ostream& out, const WeightMatrix& w) {
  out << "row_dyad,col_dyad,weight\n";
  for (Eigen::Index a = 0; a < w.n(); ++a) {
    for (Eigen::Index b = 0; b < w.n(); ++b) {
      if (w.entries(a, b) == 0.0) continue;
      out << w.index[static_cast<std::size_t>(a)].sender << "->" << w.index[static_cast<std::size_t>(a)].receiver
          << ',' << w.index[static_cast<std::size_t>(b)].sender << "->" << w.index[static_cast<std::size_t>(b)].receiver
          << ',' << csv::format_double(w.entries(a, b)) << '\n';
    }
  }
}

}  // namespace ndm
