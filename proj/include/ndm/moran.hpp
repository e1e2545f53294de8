#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ndm/covariates.hpp"
#include "ndm/panel.hpp"
#include "ndm/weights.hpp"

namespace ndm {

/// Block-diagonal panel weight matrix: one block per period, in pooled order.
class BlockDiagonalWeights {
 public:
  BlockDiagonalWeights() = default;
  explicit BlockDiagonalWeights(std::vector<Eigen::SparseMatrix<double>> blocks);

  void add_block(Eigen::SparseMatrix<double> block);
  void add_block(const Eigen::MatrixXd& block) { add_block(Eigen::SparseMatrix<double>(block.sparseView())); }

  const std::vector<Eigen::SparseMatrix<double>>& blocks() const { return blocks_; }
  Eigen::Index size() const { return size_; }
  double total_weight() const;  // S0

  /// Dense assembly; only sensible for small panels.
  Eigen::MatrixXd dense() const;

 private:
  std::vector<Eigen::SparseMatrix<double>> blocks_;
  Eigen::Index size_ = 0;
};

/// I = (m / S0) z'Wz / z'z on the mean-centered z.
/// Throws NumericError if S0 = 0 or z has zero variance.
double morans_i(const Eigen::VectorXd& z, const Eigen::MatrixXd& w);
double morans_i(const Eigen::VectorXd& z, const BlockDiagonalWeights& w);

enum class ScanDirection { Import, Export };
ScanDirection parse_scan_direction(const std::string& text);
std::string to_string(ScanDirection direction);

struct CutoffGrid {
  double start_km = 0.0;
  double stop_km = 20000.0;
  double step_km = 100.0;

  /// start, start + step, ..., up to and including stop.
  std::vector<double> values() const;
};

/// Residual vector of one period in the coordinates of its flow index.
struct PeriodResiduals {
  FlowIndex index;
  Eigen::VectorXd values;
};

struct CutoffScan {
  ScanDirection direction = ScanDirection::Import;
  std::vector<double> grid;
  std::vector<double> moran_values;  // NaN where undefined
  std::vector<bool> defined;
  double best_cutoff = 0.0;
  double best_value = 0.0;
  bool tie = false;  // another cutoff attained the same maximum; the smallest is reported
};

/// For each cutoff c evaluates Moran's I of the pooled residuals under the
/// block-diagonal panel matrix of per-period distance neighborhoods. Blocks are
/// reduced to per-node sums instead of being materialized.
/// Grid points with an all-zero matrix are undefined and skipped in the argmax.
CutoffScan scan_cutoffs(std::span<const PeriodResiduals> residuals, const DyadicSeries& distances,
                        ScanDirection direction, const std::vector<double>& grid);

}  // namespace ndm
