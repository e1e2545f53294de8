#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ndm/covariates.hpp"
#include "ndm/panel.hpp"

namespace ndm {

/// Dependence structures between flows (i,j) and (p,q).
///   SenderAttached     p = i  or (p,q) = (j,i)
///   ReceiverAttached   q = j  or (p,q) = (j,i)
///   FullActivity       p in {i,j} or q in {i,j}
///   AllianceImport     da(j,q) = 1
///   AllianceExport     da(i,p) = 1
///   DistanceImport     q != j and d(j,q) < c
///   DistanceExport     p != i and d(i,p) < c
/// The flow itself is never its own neighbor, and da(k,k) = 0.
enum class NeighborhoodKind {
  SenderAttached,
  ReceiverAttached,
  FullActivity,
  AllianceImport,
  AllianceExport,
  DistanceImport,
  DistanceExport,
};

class NeighborhoodSpec {
 public:
  /// Throws ConfigError unless a positive cutoff is given exactly for distance kinds.
  explicit NeighborhoodSpec(NeighborhoodKind kind, std::optional<double> cutoff_km = std::nullopt);

  /// Accepts "n1", "n2", "n3", "n4_import", "n4_export", "n5_import:<km>", "n5_export:<km>".
  static NeighborhoodSpec parse(const std::string& text);

  NeighborhoodKind kind() const { return kind_; }
  std::optional<double> cutoff_km() const { return cutoff_; }
  bool is_distance() const;
  bool is_alliance() const;

  /// Stable identifier used in reports, e.g. "n3" or "n5_import_c1100".
  std::string id() const;

  bool operator==(const NeighborhoodSpec&) const = default;

 private:
  NeighborhoodKind kind_;
  std::optional<double> cutoff_;
};

std::vector<NeighborhoodKind> all_neighborhood_kinds();
std::string kind_name(NeighborhoodKind kind);

/// Alliance indicator and capital distances consulted by kinds 4 and 5.
/// Read at the flow index's own period.
struct StructuralRelations {
  const DyadicSeries* alliance = nullptr;
  const DyadicSeries* distance = nullptr;
};

/// Row a lists the (sorted) positions of the neighbors of flow v_a.
using Neighborhoods = std::vector<std::vector<std::size_t>>;

Neighborhoods neighborhood(const NeighborhoodSpec& spec, const FlowIndex& index,
                           const StructuralRelations& relations = {});

/// Row-normalized dependence matrix: W_ab = 1/|N(v_a)| for v_b in N(v_a).
struct WeightMatrix {
  FlowIndex index;
  Eigen::MatrixXd entries;
  NeighborhoodSpec spec{NeighborhoodKind::FullActivity};

  Eigen::Index n() const { return entries.rows(); }
};

WeightMatrix build_weight_matrix(const NeighborhoodSpec& spec, const FlowIndex& index,
                                 const StructuralRelations& relations = {});
Eigen::MatrixXd row_normalize(const Neighborhoods& neighbors);

/// Coordinate list `row_dyad,col_dyad,weight` of the nonzero entries.
void write_weight_coo(std::ostream& out, const WeightMatrix& w);

}  // namespace ndm
