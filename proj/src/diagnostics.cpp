#include "ndm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "ndm/error.hpp"

namespace ndm {

Eigen::VectorXd standardized_residuals(const SemFit& fit) {
  if (fit.degenerate || !(fit.sigma2_hat > 0.0)) {
    throw NumericError("standardized residuals: degenerate variance estimate in period " +
                       std::to_string(fit.period));
  }
  return fit.eps_hat / std::sqrt(fit.sigma2_hat);
}

std::vector<QqPoint> qq_points(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const boost::math::normal standard;
  const auto m = static_cast<double>(sorted.size());
  std::vector<QqPoint> points;
  points.reserve(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double probability = (static_cast<double>(k) + 0.5) / m;
    points.push_back({boost::math::quantile(standard, probability), sorted[k]});
  }
  return points;
}

double quantile(std::vector<double> values, double probability) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * probability;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

double sample_sd(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

std::vector<HistogramBin> histogram(std::span<const double> values) {
  if (values.size() < 2) throw DataError("histogram: need at least two values");
  std::vector<double> v(values.begin(), values.end());
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double m = static_cast<double>(v.size());
  std::size_t bins = 1;
  if (hi > lo) {
    const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
    if (iqr > 0.0) {
      const double width = 2.0 * iqr / std::cbrt(m);
      bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    } else {
      bins = static_cast<std::size_t>(std::ceil(std::log2(m))) + 1;
    }
    bins = std::clamp<std::size_t>(bins, 1, 10000);
  }
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  const double left0 = hi > lo ? lo : lo - 0.5;
  std::vector<HistogramBin> out(bins);
  const boost::math::normal standard;
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].left = left0 + static_cast<double>(b) * width;
    out[b].right = b + 1 == bins ? (hi > lo ? hi : lo + 0.5) : left0 + static_cast<double>(b + 1) * width;
    out[b].count = 0;
    out[b].normal_reference = m * (boost::math::cdf(standard, out[b].right) - boost::math::cdf(standard, out[b].left));
  }
  for (double x : v) {
    auto b = static_cast<std::size_t>(std::floor((x - left0) / width));
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

TradecorrelationResiduals tradecorr_residuals(const SemFit& fit, const WeightMatrix& w) {
  if (w.entries.rows() != fit.u_hat.size()) throw DataError("tradecorr residuals: W does not match the fit");
  TradecorrelationResiduals out;
  out.period = fit.period;
  out.index = w.index;
  out.values = fit.rho_hat * (w.entries * fit.u_hat);
  for (std::size_t a = 0; a < w.index.size(); ++a) {
    const double value = out.values(static_cast<Eigen::Index>(a));
    out.attribution[w.index[a].sender].push_back(value);
    out.attribution[w.index[a].receiver].push_back(value);
  }
  return out;
}

std::map<NodeId, std::vector<double>> pool_attributions(std::span<const TradecorrelationResiduals> periods) {
  std::map<NodeId, std::vector<double>> pooled;
  for (const auto& p : periods) {
    for (const auto& [node, values] : p.attribution) {
      auto& target = pooled[node];
      target.insert(target.end(), values.begin(), values.end());
    }
  }
  return pooled;
}

double silverman_bandwidth(std::span<const double> values) {
  const double sd = sample_sd(values);
  std::vector<double> v(values.begin(), values.end());
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(values.size()), -0.2);
}

DensityCurve kde(std::span<const double> values, const KdeOptions& options) {
  if (values.size() < 2) throw DataError("kde: need at least two values");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  if (!(*hi_it > *lo_it)) throw DataError("kde: need at least two distinct values");
  DensityCurve curve;
  curve.bandwidth = silverman_bandwidth(values);
  const double h = curve.bandwidth;
  const double left = *lo_it - options.pad_bandwidths * h;
  const double right = *hi_it + options.pad_bandwidths * h;
  // At least four grid points per bandwidth so the curve integrates to one.
  const auto wanted = static_cast<std::size_t>(std::ceil((right - left) / (0.25 * h))) + 1;
  const std::size_t points = std::clamp(wanted, options.min_points, options.max_points);
  const double step = (right - left) / static_cast<double>(points - 1);
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double reach = 8.0 * h;  // exp(-32) is negligible
  curve.grid.resize(points);
  curve.density.resize(points);
  for (std::size_t g = 0; g < points; ++g) {
    const double x = left + static_cast<double>(g) * step;
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
    auto last = std::upper_bound(first, sorted.end(), x + reach);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / h;
      sum += std::exp(-0.5 * z * z);
    }
    curve.grid[g] = x;
    curve.density[g] = norm * sum;
  }
  return curve;
}

}  // namespace ndm
