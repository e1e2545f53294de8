#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ndm/sem.hpp"

namespace ndm {

/// eps_hat / sigma_hat. Throws NumericError for a degenerate fit.
Eigen::VectorXd standardized_residuals(const SemFit& fit);

struct QqPoint {
  double theoretical;
  double empirical;
};

/// Sorted values against standard normal quantiles at (k - 0.5) / m.
std::vector<QqPoint> qq_points(std::span<const double> values);

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double probability);

struct HistogramBin {
  double left;
  double right;
  std::size_t count;
  double normal_reference;  // expected count under N(0, 1)
};

/// Freedman-Diaconis binning (Sturges when the IQR is zero).
std::vector<HistogramBin> histogram(std::span<const double> values);

/// The vector rho_hat W u_hat, attributed to both endpoints of every flow.
struct TradecorrelationResiduals {
  Period period = 0;
  FlowIndex index;
  Eigen::VectorXd values;
  std::map<NodeId, std::vector<double>> attribution;
};

TradecorrelationResiduals tradecorr_residuals(const SemFit& fit, const WeightMatrix& w);

/// Concatenates the per-node attributions of several periods.
std::map<NodeId, std::vector<double>> pool_attributions(std::span<const TradecorrelationResiduals> periods);

struct DensityCurve {
  NodeId node;
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

struct KdeOptions {
  std::size_t min_points = 512;
  std::size_t max_points = 1 << 16;
  double pad_bandwidths = 3.0;
};

/// 0.9 min(sd, IQR / 1.34) m^(-1/5), falling back to sd when the IQR is zero.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian kernel density estimate on an equally spaced grid covering the
/// data range padded by three bandwidths. Needs at least two distinct values.
DensityCurve kde(std::span<const double> values, const KdeOptions& options = {});

}  // namespace ndm
