#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ndm/sem.hpp"

namespace ndm {

/// w_i = exp(-delta_i / 2) / sum_r exp(-delta_r / 2), delta_i = aic_i - min aic.
/// Throws DataError naming the offending entry (by `names` when given) if any AIC is not finite.
std::vector<double> akaike_weights(std::span<const double> aics, std::span<const std::string> names = {});

/// Fits keyed by (period, structure id).
using FitTable = std::map<std::pair<Period, std::string>, SemFit>;

struct PeriodSelection {
  std::vector<double> aic;     // aligned with SelectionReport::structures
  std::vector<double> delta;
  std::vector<double> weight;
  std::string best;
};

struct SelectionReport {
  std::vector<std::string> structures;  // sorted by id
  std::map<Period, PeriodSelection> per_period;
  std::vector<double> aic_sum;          // aggregated over included periods
  std::vector<double> aggregated_delta;
  std::string winner;                   // ties resolved by structure-id order
  std::vector<std::string> tied;        // every structure with aggregated delta 0
  std::map<Period, std::string> excluded;  // period -> reason

  std::size_t position(const std::string& structure) const;
};

/// Per-period AIC deltas and Akaike weights plus the aggregated AIC over all
/// periods in which every structure has a converged fit.
SelectionReport select(const FitTable& fits);

/// Centered moving average of each structure's weight series over the included
/// periods; the window shrinks at the ends. `window` must be odd and positive.
std::map<Period, std::vector<double>> smooth_weights(const SelectionReport& report, int window = 5);

}  // namespace ndm
