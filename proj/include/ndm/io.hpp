#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ndm/diagnostics.hpp"
#include "ndm/moran.hpp"
#include "ndm/selection.hpp"
#include "ndm/sem.hpp"
#include "ndm/synth.hpp"

namespace ndm {

/// Field names mirror SemFit; NaN becomes null.
nlohmann::json to_json(const SemFit& fit);
SemFit fit_from_json(const nlohmann::json& j);

/// `period,structure,term,estimate,se,p_value`; rho is reported as term "rho"
/// for spatial fits.
void write_coefficients_header(std::ostream& out);
void write_coefficients(std::ostream& out, const SemFit& fit);

nlohmann::json to_json(const SelectionReport& report);
void write_aggregated_csv(std::ostream& out, const SelectionReport& report);
void write_weights_csv(std::ostream& out, const SelectionReport& report);
void write_smoothed_weights_csv(std::ostream& out, const SelectionReport& report, int window);

nlohmann::json to_json(const CutoffScan& scan);
void write_scan_csv(std::ostream& out, const CutoffScan& scan);

void write_qq_csv(std::ostream& out, std::span<const QqPoint> points);
void write_histogram_csv(std::ostream& out, std::span<const HistogramBin> bins);
void write_kde_csv(std::ostream& out, std::span<const DensityCurve> curves);
void write_tradecorr_csv(std::ostream& out, std::span<const TradecorrelationResiduals> periods);

nlohmann::json to_json(const SimSpec& spec, std::span<const PeriodTruth> truth);

/// Dumps with a trailing newline.
void write_json(std::ostream& out, const nlohmann::json& j);

}  // namespace ndm
