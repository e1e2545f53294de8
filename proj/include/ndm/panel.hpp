#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ndm {

using NodeId = std::string;
using Period = int;

struct RosterEntry {
  NodeId node;
  Period active_from = 0;
  Period active_to = 0;
};

/// Time-varying node roster: which nodes exist in which periods.
class NodeRoster {
 public:
  NodeRoster() = default;
  explicit NodeRoster(std::vector<RosterEntry> entries);

  bool contains(const NodeId& node) const { return lookup_.count(node) != 0; }
  bool is_active(const NodeId& node, Period period) const;
  const RosterEntry& entry(const NodeId& node) const;
  std::vector<NodeId> active_nodes(Period period) const;

  const std::vector<RosterEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<RosterEntry> entries_;
  std::map<NodeId, std::size_t> lookup_;
};

/// Directed sender -> receiver pair.
struct Dyad {
  NodeId sender;
  NodeId receiver;

  auto operator<=>(const Dyad&) const = default;
  bool operator==(const Dyad&) const = default;
};

std::string to_string(const Dyad& dyad);

struct Flow {
  NodeId sender;
  NodeId receiver;
  double value = 0.0;

  Dyad dyad() const { return {sender, receiver}; }
};

/// One period of a directed, positively weighted network.
class NetworkSnapshot {
 public:
  /// Validates positivity, self-loops, duplicate dyads and roster activity.
  NetworkSnapshot(Period period, std::vector<Flow> flows, const NodeRoster& roster);

  Period period() const { return period_; }
  const std::vector<Flow>& flows() const { return flows_; }
  std::size_t size() const { return flows_.size(); }
  bool empty() const { return flows_.empty(); }

 private:
  Period period_;
  std::vector<Flow> flows_;
};

/// Ordered flow index V = {v_1, ..., v_n} for one period. Defines the
/// coordinate system of every per-period vector and matrix.
class FlowIndex {
 public:
  FlowIndex() = default;
  FlowIndex(Period period, std::vector<Dyad> sorted_dyads);

  Period period() const { return period_; }
  const std::vector<Dyad>& dyads() const { return dyads_; }
  const Dyad& operator[](std::size_t a) const { return dyads_[a]; }
  std::size_t size() const { return dyads_.size(); }
  std::optional<std::size_t> position(const Dyad& dyad) const;

  /// Distinct nodes appearing as sender or receiver, sorted.
  std::vector<NodeId> nodes() const;

 private:
  Period period_ = 0;
  std::vector<Dyad> dyads_;
};

/// Lexicographic (sender, receiver) ordering. Throws DataError on an empty snapshot.
FlowIndex index_flows(const NetworkSnapshot& snapshot);

/// log(value) of each flow, in index order.
Eigen::VectorXd log_flows(const NetworkSnapshot& snapshot, const FlowIndex& index);

struct Panel {
  NodeRoster roster;
  std::vector<NetworkSnapshot> snapshots;  // ascending by period

  const NetworkSnapshot* find(Period period) const;
};

NodeRoster read_roster(std::istream& in, const std::string& source = "roster");
Panel read_panel(std::istream& edges, const NodeRoster& roster, const std::string& source = "edges");

/// Reads `period,sender,receiver,value` edges and `node,active_from,active_to` roster CSVs.
Panel load_panel(const std::string& edge_path, const std::string& roster_path);

void write_edges(std::ostream& out, const Panel& panel);
void write_roster(std::ostream& out, const NodeRoster& roster);

}  // namespace ndm
