#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ndm/panel.hpp"

namespace ndm {

/// Per-node time series (GDP, military expenditure, polity score, ...).
/// Entries may be explicitly missing.
class NodalSeries {
 public:
  using Values = std::map<NodeId, std::map<Period, std::optional<double>>>;

  explicit NodalSeries(std::string name = {}) : name_(std::move(name)) {}

  void set(const NodeId& node, Period period, std::optional<double> value) { values_[node][period] = value; }

  const std::string& name() const { return name_; }
  const Values& values() const { return values_; }
  bool has_node(const NodeId& node) const { return values_.count(node) != 0; }

  /// Stored entry; nullopt when absent or explicitly missing.
  std::optional<double> at(const NodeId& node, Period period) const;

 private:
  std::string name_;
  Values values_;
};

/// Pairwise time series (alliance indicator, capital distance).
class DyadicSeries {
 public:
  DyadicSeries(std::string name = {}, bool symmetric = false) : name_(std::move(name)), symmetric_(symmetric) {}

  /// For symmetric series, (a,b) and (b,a) share storage; conflicting values throw DataError.
  void set(const NodeId& a, const NodeId& b, Period period, std::optional<double> value);

  /// Value in force at `period`: the latest observation at or before it,
  /// otherwise the earliest later one. nullopt if the pair has no observation.
  std::optional<double> lookup(const NodeId& a, const NodeId& b, Period period) const;

  const std::string& name() const { return name_; }
  bool symmetric() const { return symmetric_; }
  std::size_t pair_count() const { return values_.size(); }
  const auto& values() const { return values_; }

 private:
  std::pair<NodeId, NodeId> key(const NodeId& a, const NodeId& b) const;

  std::string name_;
  bool symmetric_;
  std::map<std::pair<NodeId, NodeId>, std::map<Period, std::optional<double>>> values_;
};

/// Internal gaps are filled by linear interpolation, leading and trailing gaps
/// by the nearest observation. After imputation every node covers a
/// contiguous range of periods. Throws DataError for a node with no observations.
NodalSeries impute_linear(const NodalSeries& series);

enum class TermRole { Sender, Receiver, Dyad, AbsDifference };
enum class Transform { Identity, Log };

/// One design column: which series, read from which endpoint, transformed how.
struct CovariateTerm {
  std::string name;
  std::string series;
  TermRole role = TermRole::Sender;
  Transform transform = Transform::Identity;
};

struct CovariateRecipe {
  bool intercept = true;
  std::vector<CovariateTerm> terms;

  /// log GDP (sender), log GDP (receiver), log military expenditure (receiver),
  /// alliance dummy, absolute polity difference.
  static CovariateRecipe arms_trade_default();

  std::vector<std::string> column_names() const;
  std::size_t columns() const { return terms.size() + (intercept ? 1 : 0); }
};

/// Parses "name:series:role:transform", e.g. "log_gdp_sender:gdp:sender:log".
CovariateTerm parse_term(const std::string& text);
std::string to_string(TermRole role);
std::string to_string(Transform transform);

struct CovariateSources {
  std::vector<NodalSeries> nodal;
  std::vector<DyadicSeries> dyadic;

  const NodalSeries* find_nodal(const std::string& name) const;
  const DyadicSeries* find_dyadic(const std::string& name) const;
};

struct DesignMatrix {
  FlowIndex index;
  std::vector<std::string> column_names;
  Eigen::MatrixXd rows;  // n x p, row a <-> dyad v_a
  bool intercept = true;
  std::vector<std::string> warnings;

  Eigen::Index n() const { return rows.rows(); }
  Eigen::Index p() const { return rows.cols(); }
};

/// Builds X for `index.period()` from covariates observed at period - lag.
/// Nodal lookups outside a node's observed range are extrapolated with the
/// nearest value and reported in `warnings`.
DesignMatrix build_design(const FlowIndex& index, const CovariateSources& sources, const CovariateRecipe& recipe,
                          int lag);

NodalSeries read_nodal_series(std::istream& in, const std::string& name, const std::string& source);
DyadicSeries read_dyadic_series(std::istream& in, const std::string& name, bool symmetric, const std::string& source);
void write_nodal_series(std::ostream& out, const NodalSeries& series);
void write_dyadic_series(std::ostream& out, const DyadicSeries& series);

}  // namespace ndm
