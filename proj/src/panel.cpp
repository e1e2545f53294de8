#include "ndm/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "ndm/csv.hpp"
#include "ndm/error.hpp"

namespace ndm {

std::string to_string(const Dyad& dyad) { return "(" + dyad.sender + "," + dyad.receiver + ")"; }

NodeRoster::NodeRoster(std::vector<RosterEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.node.empty()) throw DataError("roster: empty node id");
    if (e.active_from > e.active_to) {
      throw DataError("roster: node " + e.node + " has active_from " + std::to_string(e.active_from) +
                      " after active_to " + std::to_string(e.active_to));
    }
    if (!lookup_.emplace(e.node, i).second) throw DataError("roster: duplicate node id " + e.node);
  }
}

bool NodeRoster::is_active(const NodeId& node, Period period) const {
  auto it = lookup_.find(node);
  if (it == lookup_.end()) return false;
  const auto& e = entries_[it->second];
  return e.active_from <= period && period <= e.active_to;
}

const RosterEntry& NodeRoster::entry(const NodeId& node) const {
  auto it = lookup_.find(node);
  if (it == lookup_.end()) throw DataError("roster: unknown node " + node);
  return entries_[it->second];
}

std::vector<NodeId> NodeRoster::active_nodes(Period period) const {
  std::vector<NodeId> nodes;
  for (const auto& e : entries_) {
    if (e.active_from <= period && period <= e.active_to) nodes.push_back(e.node);
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

NetworkSnapshot::NetworkSnapshot(Period period, std::vector<Flow> flows, const NodeRoster& roster)
    : period_(period), flows_(std::move(flows)) {
  std::set<Dyad> seen;
  const std::string where = "period " + std::to_string(period_);
  for (const auto& f : flows_) {
    if (f.sender == f.receiver) throw DataError(where + ": self-loop " + to_string(f.dyad()));
    if (!(f.value > 0.0) || !std::isfinite(f.value)) {
      throw DataError(where + ": flow " + to_string(f.dyad()) + " has nonpositive or non-finite value");
    }
    if (!roster.is_active(f.sender, period_)) {
      throw DataError(where + ": sender " + f.sender + " not active in roster");
    }
    if (!roster.is_active(f.receiver, period_)) {
      throw DataError(where + ": receiver " + f.receiver + " not active in roster");
    }
    if (!seen.insert(f.dyad()).second) throw DataError(where + ": duplicate dyad " + to_string(f.dyad()));
  }
}

FlowIndex::FlowIndex(Period period, std::vector<Dyad> sorted_dyads)
    : period_(period), dyads_(std::move(sorted_dyads)) {
  if (!std::is_sorted(dyads_.begin(), dyads_.end()) ||
      std::adjacent_find(dyads_.begin(), dyads_.end()) != dyads_.end()) {
    throw DataError("flow index must be strictly increasing");
  }
}

std::optional<std::size_t> FlowIndex::position(const Dyad& dyad) const {
  auto it = std::lower_bound(dyads_.begin(), dyads_.end(), dyad);
  if (it == dyads_.end() || *it != dyad) return std::nullopt;
  return static_cast<std::size_t>(it - dyads_.begin());
}

std::vector<NodeId> FlowIndex::nodes() const {
  std::set<NodeId> nodes;
  for (const auto& d : dyads_) {
    nodes.insert(d.sender);
    nodes.insert(d.receiver);
  }
  return {nodes.begin(), nodes.end()};
}

FlowIndex index_flows(const NetworkSnapshot& snapshot) {
  if (snapshot.empty()) {
    throw DataError("period " + std::to_string(snapshot.period()) + ": empty snapshot cannot be indexed");
  }
  std::vector<Dyad> dyads;
  dyads.reserve(snapshot.size());
  for (const auto& f : snapshot.flows()) dyads.push_back(f.dyad());
  std::sort(dyads.begin(), dyads.end());
  return FlowIndex(snapshot.period(), std::move(dyads));
}

Eigen::VectorXd log_flows(const NetworkSnapshot& snapshot, const FlowIndex& index) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(index.size()));
  std::size_t filled = 0;
  for (const auto& f : snapshot.flows()) {
    auto pos = index.position(f.dyad());
    if (!pos) throw DataError("flow " + to_string(f.dyad()) + " missing from index");
    y(static_cast<Eigen::Index>(*pos)) = std::log(f.value);
    ++filled;
  }
  if (filled != index.size()) throw DataError("flow index does not match snapshot");
  return y;
}

const NetworkSnapshot* Panel::find(Period period) const {
  for (const auto& s : snapshots) {
    if (s.period() == period) return &s;
  }
  return nullptr;
}

NodeRoster read_roster(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  const auto cols = reader.require_columns({"node", "active_from", "active_to"});
  std::vector<RosterEntry> entries;
  csv::Row row;
  while (reader.next(row)) {
    const std::string where = source + ":" + std::to_string(row.line);
    entries.push_back({row.fields[cols[0]], csv::parse_int(row.fields[cols[1]], where + " active_from"),
                       csv::parse_int(row.fields[cols[2]], where + " active_to")});
  }
  try {
    return NodeRoster(std::move(entries));
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

Panel read_panel(std::istream& edges, const NodeRoster& roster, const std::string& source) {
  csv::Reader reader(edges, source);
  const auto cols = reader.require_columns({"period", "sender", "receiver", "value"});
  std::map<Period, std::vector<Flow>> by_period;
  std::map<Period, std::map<Dyad, std::size_t>> first_line;
  csv::Row row;
  while (reader.next(row)) {
    const std::string where = source + ":" + std::to_string(row.line);
    const Period period = csv::parse_int(row.fields[cols[0]], where + " period");
    Flow flow{row.fields[cols[1]], row.fields[cols[2]], csv::parse_double(row.fields[cols[3]], where + " value")};
    if (flow.sender == flow.receiver) throw DataError(where + ": self-loop " + to_string(flow.dyad()));
    if (!(flow.value > 0.0) || !std::isfinite(flow.value)) {
      throw DataError(where + ": value must be positive, got " + row.fields[cols[3]]);
    }
    if (!roster.is_active(flow.sender, period)) {
      throw DataError(where + ": sender " + flow.sender + " not active in " + std::to_string(period));
    }
    if (!roster.is_active(flow.receiver, period)) {
      throw DataError(where + ": receiver " + flow.receiver + " not active in " + std::to_string(period));
    }
    auto [it, inserted] = first_line[period].emplace(flow.dyad(), row.line);
    if (!inserted) {
      throw DataError(where + ": duplicate dyad " + to_string(flow.dyad()) + " in period " +
                      std::to_string(period) + " (first seen on line " + std::to_string(it->second) + ")");
    }
    by_period[period].push_back(std::move(flow));
  }
  Panel panel;
  panel.roster = roster;
  for (auto& [period, flows] : by_period) panel.snapshots.emplace_back(period, std::move(flows), roster);
  return panel;
}

Panel load_panel(const std::string& edge_path, const std::string& roster_path) {
  std::ifstream roster_in(roster_path);
  if (!roster_in) throw DataError("cannot open roster file " + roster_path);
  std::ifstream edge_in(edge_path);
  if (!edge_in) throw DataError("cannot open edge file " + edge_path);
  const NodeRoster roster = read_roster(roster_in, roster_path);
  return read_panel(edge_in, roster, edge_path);
}

void write_edges(std::ostream& out, const Panel& panel) {
  out << "period,sender,receiver,value\n";
  for (const auto& s : panel.snapshots) {
    if (s.empty()) continue;
    const FlowIndex index = index_flows(s);
    std::map<Dyad, double> values;
    for (const auto& f : s.flows()) values[f.dyad()] = f.value;
    for (const auto& d : index.dyads()) {
      out << s.period() << ',' << d.sender << ',' << d.receiver << ',' << csv::format_double(values[d]) << '\n';
    }
  }
}

void write_roster(std::ostream& out, const NodeRoster& roster) {
  out << "node,active_from,active_to\n";
  for (const auto& e : roster.entries()) out << e.node << ',' << e.active_from << ',' << e.active_to << '\n';
}

}  // namespace ndm
