#include "ndm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ndm/error.hpp"

namespace ndm {

std::vector<double> akaike_weights(std::span<const double> aics, std::span<const std::string> names) {
  if (aics.empty()) throw DataError("akaike_weights: no models");
  for (std::size_t i = 0; i < aics.size(); ++i) {
    if (!std::isfinite(aics[i])) {
      const std::string who = i < names.size() ? names[i] : "model " + std::to_string(i);
      throw DataError("akaike_weights: AIC of " + who + " is not finite");
    }
  }
  const double minimum = *std::min_element(aics.begin(), aics.end());
  std::vector<double> weights(aics.size());
  double total = 0.0;
  for (std::size_t i = 0; i < aics.size(); ++i) {
    weights[i] = std::exp(-0.5 * (aics[i] - minimum));
    total += weights[i];
  }
  for (auto& w : weights) w /= total;
  return weights;
}

std::size_t SelectionReport::position(const std::string& structure) const {
  auto it = std::find(structures.begin(), structures.end(), structure);
  if (it == structures.end()) throw DataError("selection report: unknown structure " + structure);
  return static_cast<std::size_t>(it - structures.begin());
}

SelectionReport select(const FitTable& fits) {
  if (fits.empty()) throw DataError("select: no fits");
  SelectionReport report;
  std::set<std::string> ids;
  std::set<Period> periods;
  for (const auto& [key, _] : fits) {
    periods.insert(key.first);
    ids.insert(key.second);
  }
  report.structures.assign(ids.begin(), ids.end());
  const std::size_t k = report.structures.size();
  report.aic_sum.assign(k, 0.0);

  for (Period t : periods) {
    PeriodSelection row;
    std::string reason;
    for (const auto& id : report.structures) {
      auto it = fits.find({t, id});
      if (it == fits.end()) {
        reason = "no fit for " + id;
        break;
      }
      if (!it->second.converged) {
        reason = id + " did not converge";
        break;
      }
      if (!std::isfinite(it->second.aic)) {
        reason = id + " has a non-finite AIC";
        break;
      }
      row.aic.push_back(it->second.aic);
    }
    if (!reason.empty()) {
      report.excluded[t] = reason;
      continue;
    }
    const double minimum = *std::min_element(row.aic.begin(), row.aic.end());
    for (double a : row.aic) row.delta.push_back(a - minimum);
    row.weight = akaike_weights(row.aic, report.structures);
    row.best = report.structures[static_cast<std::size_t>(
        std::min_element(row.aic.begin(), row.aic.end()) - row.aic.begin())];
    for (std::size_t i = 0; i < k; ++i) report.aic_sum[i] += row.aic[i];
    report.per_period.emplace(t, std::move(row));
  }
  if (report.per_period.empty()) throw DataError("select: no period has converged fits for every structure");

  const double minimum = *std::min_element(report.aic_sum.begin(), report.aic_sum.end());
  for (std::size_t i = 0; i < k; ++i) {
    report.aggregated_delta.push_back(report.aic_sum[i] - minimum);
    if (report.aic_sum[i] == minimum) {
      report.tied.push_back(report.structures[i]);
      if (report.winner.empty()) report.winner = report.structures[i];
    }
  }
  return report;
}

std::map<Period, std::vector<double>> smooth_weights(const SelectionReport& report, int window) {
  if (window < 1 || window % 2 == 0) throw ConfigError("smoothing window must be a positive odd number");
  std::vector<Period> periods;
  for (const auto& [t, _] : report.per_period) periods.push_back(t);
  const int half = window / 2;
  const int count = static_cast<int>(periods.size());
  std::map<Period, std::vector<double>> smoothed;
  for (int i = 0; i < count; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(count - 1, i + half);
    std::vector<double> mean(report.structures.size(), 0.0);
    for (int j = lo; j <= hi; ++j) {
      const auto& w = report.per_period.at(periods[static_cast<std::size_t>(j)]).weight;
      for (std::size_t s = 0; s < mean.size(); ++s) mean[s] += w[s];
    }
    for (auto& m : mean) m /= static_cast<double>(hi - lo + 1);
    smoothed[periods[static_cast<std::size_t>(i)]] = std::move(mean);
  }
  return smoothed;
}

}  // namespace ndm
