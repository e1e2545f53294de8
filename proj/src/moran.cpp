#include "ndm/moran.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ndm/error.hpp"

namespace ndm {

BlockDiagonalWeights::BlockDiagonalWeights(std::vector<Eigen::SparseMatrix<double>> blocks) {
  for (auto& b : blocks) add_block(std::move(b));
}

void BlockDiagonalWeights::add_block(Eigen::SparseMatrix<double> block) {
  if (block.rows() != block.cols()) throw DataError("block-diagonal weights: block is not square");
  size_ += block.rows();
  blocks_.push_back(std::move(block));
}

double BlockDiagonalWeights::total_weight() const {
  double s0 = 0.0;
  for (const auto& b : blocks_) s0 += b.sum();
  return s0;
}

Eigen::MatrixXd BlockDiagonalWeights::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size_, size_);
  Eigen::Index offset = 0;
  for (const auto& b : blocks_) {
    out.block(offset, offset, b.rows(), b.cols()) = Eigen::MatrixXd(b);
    offset += b.rows();
  }
  return out;
}

namespace {

Eigen::VectorXd centered(const Eigen::VectorXd& z) {
  if (z.size() < 2) throw NumericError("morans_i: need at least two observations");
  Eigen::VectorXd c = z.array() - z.mean();
  if (!(c.squaredNorm() > 0.0)) throw NumericError("morans_i: zero variance after centering");
  return c;
}

}  // namespace

double morans_i(const Eigen::VectorXd& z, const Eigen::MatrixXd& w) {
  if (w.rows() != z.size() || w.cols() != z.size()) throw DataError("morans_i: dimension mismatch");
  const double s0 = w.sum();
  if (s0 == 0.0) throw NumericError("morans_i: weight matrix is all zero");
  const Eigen::VectorXd c = centered(z);
  return static_cast<double>(z.size()) / s0 * c.dot(w * c) / c.squaredNorm();
}

double morans_i(const Eigen::VectorXd& z, const BlockDiagonalWeights& w) {
  if (w.size() != z.size()) throw DataError("morans_i: dimension mismatch");
  const double s0 = w.total_weight();
  if (s0 == 0.0) throw NumericError("morans_i: weight matrix is all zero");
  const Eigen::VectorXd c = centered(z);
  double quadratic = 0.0;
  Eigen::Index offset = 0;
  for (const auto& block : w.blocks()) {
    const auto segment = c.segment(offset, block.rows());
    quadratic += segment.dot(block * segment);
    offset += block.rows();
  }
  return static_cast<double>(z.size()) / s0 * quadratic / c.squaredNorm();
}

ScanDirection parse_scan_direction(const std::string& text) {
  if (text == "import") return ScanDirection::Import;
  if (text == "export") return ScanDirection::Export;
  throw ConfigError("unknown scan direction '" + text + "' (expected import or export)");
}

std::string to_string(ScanDirection direction) { return direction == ScanDirection::Import ? "import" : "export"; }

std::vector<double> CutoffGrid::values() const {
  if (!(step_km > 0.0) || stop_km < start_km || start_km < 0.0) {
    throw ConfigError("cutoff grid needs 0 <= start <= stop and step > 0");
  }
  std::vector<double> grid;
  const auto count = static_cast<long>(std::floor((stop_km - start_km) / step_km + 1e-9));
  for (long k = 0; k <= count; ++k) grid.push_back(start_km + static_cast<double>(k) * step_km);
  return grid;
}

namespace {

// Per-period data reused across grid points: anchor node of every flow and the
// anchor-to-anchor distance matrix.
struct PeriodGeometry {
  std::vector<std::size_t> anchor;     // flow -> anchor node slot
  Eigen::MatrixXd distance;            // slot x slot
  std::vector<std::vector<std::size_t>> flows_of;  // slot -> flows
};

PeriodGeometry geometry(const FlowIndex& index, const DyadicSeries& distances, ScanDirection direction) {
  PeriodGeometry g;
  std::map<NodeId, std::size_t> slot;
  std::vector<NodeId> nodes;
  for (const auto& d : index.dyads()) {
    const NodeId& node = direction == ScanDirection::Import ? d.receiver : d.sender;
    auto [it, inserted] = slot.emplace(node, nodes.size());
    if (inserted) nodes.push_back(node);
    g.anchor.push_back(it->second);
  }
  const auto m = static_cast<Eigen::Index>(nodes.size());
  g.distance = Eigen::MatrixXd::Zero(m, m);
  g.flows_of.resize(nodes.size());
  for (std::size_t a = 0; a < g.anchor.size(); ++a) g.flows_of[g.anchor[a]].push_back(a);
  for (Eigen::Index x = 0; x < m; ++x) {
    for (Eigen::Index y = x + 1; y < m; ++y) {
      const NodeId& k = nodes[static_cast<std::size_t>(x)];
      const NodeId& l = nodes[static_cast<std::size_t>(y)];
      auto d = distances.lookup(k, l, index.period());
      if (!d && !distances.symmetric()) d = distances.lookup(l, k, index.period());
      if (!d) {
        throw DataError("scan: missing distance for pair (" + k + "," + l + ") in period " +
                        std::to_string(index.period()));
      }
      g.distance(x, y) = g.distance(y, x) = *d;
    }
  }
  return g;
}

// With row normalization every flow anchored at node x has the same neighbor
// set: all flows anchored at nodes y with d(x,y) < c. So z'Wz and S0 of the
// block only need per-anchor sums, Z_x = sum of z over flows anchored at x.
struct BlockMoments {
  double quadratic = 0.0;  // z'Wz
  double total_weight = 0.0;  // S0 = number of nonempty rows
};

BlockMoments distance_block_moments(const PeriodGeometry& g, const Eigen::VectorXd& z_sum,
                                    const Eigen::VectorXd& count, double cutoff) {
  BlockMoments out;
  const Eigen::Index m = g.distance.rows();
  for (Eigen::Index x = 0; x < m; ++x) {
    double related_sum = 0.0;
    double related_count = 0.0;
    for (Eigen::Index y = 0; y < m; ++y) {
      if (y != x && g.distance(x, y) < cutoff) {
        related_sum += z_sum(y);
        related_count += count(y);
      }
    }
    if (related_count == 0.0) continue;
    out.quadratic += z_sum(x) * related_sum / related_count;
    out.total_weight += count(x);
  }
  return out;
}

}  // namespace

CutoffScan scan_cutoffs(std::span<const PeriodResiduals> residuals, const DyadicSeries& distances,
                        ScanDirection direction, const std::vector<double>& grid) {
  if (residuals.empty()) throw DataError("scan: no residuals");
  if (grid.empty()) throw ConfigError("scan: empty cutoff grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("scan: cutoff grid must be strictly increasing");
  }
  std::vector<PeriodGeometry> geometries;
  Eigen::Index total = 0;
  for (const auto& r : residuals) {
    if (static_cast<std::size_t>(r.values.size()) != r.index.size()) {
      throw DataError("scan: residual vector does not match flow index in period " +
                      std::to_string(r.index.period()));
    }
    geometries.push_back(geometry(r.index, distances, direction));
    total += r.values.size();
  }
  Eigen::VectorXd pooled(total);
  Eigen::Index offset = 0;
  for (const auto& r : residuals) {
    pooled.segment(offset, r.values.size()) = r.values;
    offset += r.values.size();
  }

  const Eigen::VectorXd centered = pooled.array() - pooled.mean();
  const double variance = centered.squaredNorm();
  if (!(variance > 0.0)) throw NumericError("scan: residuals have zero variance");
  std::vector<Eigen::VectorXd> z_sums;
  std::vector<Eigen::VectorXd> counts;
  offset = 0;
  for (const auto& g : geometries) {
    Eigen::VectorXd zs = Eigen::VectorXd::Zero(g.distance.rows());
    Eigen::VectorXd ns = Eigen::VectorXd::Zero(g.distance.rows());
    for (std::size_t a = 0; a < g.anchor.size(); ++a) {
      zs(static_cast<Eigen::Index>(g.anchor[a])) += centered(offset + static_cast<Eigen::Index>(a));
      ns(static_cast<Eigen::Index>(g.anchor[a])) += 1.0;
    }
    offset += static_cast<Eigen::Index>(g.anchor.size());
    z_sums.push_back(std::move(zs));
    counts.push_back(std::move(ns));
  }

  CutoffScan scan;
  scan.direction = direction;
  scan.grid = grid;
  bool found = false;
  for (double cutoff : grid) {
    double quadratic = 0.0;
    double s0 = 0.0;
    for (std::size_t p = 0; p < geometries.size(); ++p) {
      const BlockMoments b = distance_block_moments(geometries[p], z_sums[p], counts[p], cutoff);
      quadratic += b.quadratic;
      s0 += b.total_weight;
    }
    if (s0 == 0.0) {
      scan.moran_values.push_back(std::numeric_limits<double>::quiet_NaN());
      scan.defined.push_back(false);
      continue;
    }
    const double value = static_cast<double>(total) / s0 * quadratic / variance;
    scan.moran_values.push_back(value);
    scan.defined.push_back(true);
    if (!found || value > scan.best_value) {
      scan.best_value = value;
      scan.best_cutoff = cutoff;
      scan.tie = false;
      found = true;
    } else if (value == scan.best_value) {
      scan.tie = true;
    }
  }
  if (!found) throw NumericError("scan: Moran's I is undefined at every cutoff");
  return scan;
}

}  // namespace ndm
