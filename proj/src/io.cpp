#include "ndm/io.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "ndm/csv.hpp"
#include "ndm/error.hpp"

namespace ndm {

using nlohmann::json;

namespace {

json number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return value;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Eigen::VectorXd read_vector(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_number(j[i]);
  return v;
}

}  // namespace

json to_json(const SemFit& fit) {
  json j;
  j["period"] = fit.period;
  j["structure"] = fit.structure;
  j["terms"] = fit.terms;
  j["spatial"] = fit.spatial;
  j["rho_hat"] = number(fit.rho_hat);
  j["rho_lower"] = number(fit.rho_lower);
  j["rho_upper"] = number(fit.rho_upper);
  j["beta_hat"] = vector_json(fit.beta_hat);
  j["sigma2_hat"] = number(fit.sigma2_hat);
  j["se_beta"] = vector_json(fit.se_beta);
  j["se_rho"] = number(fit.se_rho);
  j["p_values"] = vector_json(fit.p_values);
  j["loglik"] = number(fit.loglik);
  j["aic"] = number(fit.aic);
  j["n"] = fit.n;
  j["parameters"] = fit.parameters;
  j["u_hat"] = vector_json(fit.u_hat);
  j["eps_hat"] = vector_json(fit.eps_hat);
  j["converged"] = fit.converged;
  j["degenerate"] = fit.degenerate;
  j["optimizer"] = fit.optimizer;
  j["iterations"] = fit.iterations;
  return j;
}

SemFit fit_from_json(const json& j) {
  try {
    SemFit fit;
    fit.period = j.at("period").get<int>();
    fit.structure = j.at("structure").get<std::string>();
    fit.terms = j.at("terms").get<std::vector<std::string>>();
    fit.spatial = j.at("spatial").get<bool>();
    fit.rho_hat = read_number(j.at("rho_hat"));
    fit.rho_lower = read_number(j.at("rho_lower"));
    fit.rho_upper = read_number(j.at("rho_upper"));
    fit.beta_hat = read_vector(j.at("beta_hat"));
    fit.sigma2_hat = read_number(j.at("sigma2_hat"));
    fit.se_beta = read_vector(j.at("se_beta"));
    fit.se_rho = read_number(j.at("se_rho"));
    fit.p_values = read_vector(j.at("p_values"));
    fit.loglik = read_number(j.at("loglik"));
    fit.aic = read_number(j.at("aic"));
    fit.n = j.at("n").get<int>();
    fit.parameters = j.at("parameters").get<int>();
    fit.u_hat = read_vector(j.at("u_hat"));
    fit.eps_hat = read_vector(j.at("eps_hat"));
    fit.converged = j.at("converged").get<bool>();
    fit.degenerate = j.at("degenerate").get<bool>();
    fit.optimizer = j.at("optimizer").get<std::string>();
    fit.iterations = j.at("iterations").get<int>();
    return fit;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit record: ") + e.what());
  }
}

void write_coefficients_header(std::ostream& out) { out << "period,structure,term,estimate,se,p_value\n"; }

void write_coefficients(std::ostream& out, const SemFit& fit) {
  using csv::format_double;
  for (std::size_t k = 0; k < fit.terms.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out << fit.period << ',' << fit.structure << ',' << fit.terms[k] << ',' << format_double(fit.beta_hat(i)) << ','
        << format_double(fit.se_beta(i)) << ',' << format_double(fit.p_values(i)) << '\n';
  }
  if (fit.spatial) {
    out << fit.period << ',' << fit.structure << ",rho," << format_double(fit.rho_hat) << ','
        << format_double(fit.se_rho) << ',' << format_double(fit.p_values(fit.p_values.size() - 1)) << '\n';
  }
}

json to_json(const SelectionReport& report) {
  json j;
  j["structures"] = report.structures;
  j["winner"] = report.winner;
  j["tied"] = report.tied;
  json aggregated = json::array();
  for (std::size_t i = 0; i < report.structures.size(); ++i) {
    aggregated.push_back({{"structure", report.structures[i]},
                          {"aic_sum", number(report.aic_sum[i])},
                          {"delta", number(report.aggregated_delta[i])}});
  }
  j["aggregated"] = aggregated;
  json periods = json::array();
  for (const auto& [t, row] : report.per_period) {
    json entry{{"period", t}, {"best", row.best}};
    json rows = json::array();
    for (std::size_t i = 0; i < report.structures.size(); ++i) {
      rows.push_back({{"structure", report.structures[i]},
                      {"aic", number(row.aic[i])},
                      {"delta", number(row.delta[i])},
                      {"weight", number(row.weight[i])}});
    }
    entry["models"] = rows;
    periods.push_back(entry);
  }
  j["per_period"] = periods;
  json excluded = json::array();
  for (const auto& [t, reason] : report.excluded) excluded.push_back({{"period", t}, {"reason", reason}});
  j["excluded"] = excluded;
  return j;
}

void write_aggregated_csv(std::ostream& out, const SelectionReport& report) {
  out << "structure,aic_sum,delta\n";
  for (std::size_t i = 0; i < report.structures.size(); ++i) {
    out << report.structures[i] << ',' << csv::format_double(report.aic_sum[i]) << ','
        << csv::format_double(report.aggregated_delta[i]) << '\n';
  }
}

void write_weights_csv(std::ostream& out, const SelectionReport& report) {
  out << "period,structure,weight\n";
  for (const auto& [t, row] : report.per_period) {
    for (std::size_t i = 0; i < report.structures.size(); ++i) {
      out << t << ',' << report.structures[i] << ',' << csv::format_double(row.weight[i]) << '\n';
    }
  }
}

void write_smoothed_weights_csv(std::ostream& out, const SelectionReport& report, int window) {
  out << "period,structure,weight_smoothed\n";
  for (const auto& [t, weights] : smooth_weights(report, window)) {
    for (std::size_t i = 0; i < report.structures.size(); ++i) {
      out << t << ',' << report.structures[i] << ',' << csv::format_double(weights[i]) << '\n';
    }
  }
}

json to_json(const CutoffScan& scan) {
  json j;
  j["direction"] = to_string(scan.direction);
  j["best_cutoff_km"] = scan.best_cutoff;
  j["best_morans_i"] = number(scan.best_value);
  j["tie"] = scan.tie;
  j["grid_points"] = scan.grid.size();
  std::size_t undefined = 0;
  for (bool d : scan.defined) undefined += d ? 0 : 1;
  j["undefined_points"] = undefined;
  return j;
}

void write_scan_csv(std::ostream& out, const CutoffScan& scan) {
  out << "cutoff_km,morans_i,defined\n";
  for (std::size_t i = 0; i < scan.grid.size(); ++i) {
    out << csv::format_double(scan.grid[i]) << ',' << csv::format_double(scan.moran_values[i]) << ','
        << (scan.defined[i] ? "true" : "false") << '\n';
  }
}

void write_qq_csv(std::ostream& out, std::span<const QqPoint> points) {
  out << "theoretical,empirical\n";
  for (const auto& p : points) out << csv::format_double(p.theoretical) << ',' << csv::format_double(p.empirical) << '\n';
}

void write_histogram_csv(std::ostream& out, std::span<const HistogramBin> bins) {
  out << "bin_left,bin_right,count,normal_ref\n";
  for (const auto& b : bins) {
    out << csv::format_double(b.left) << ',' << csv::format_double(b.right) << ',' << b.count << ','
        << csv::format_double(b.normal_reference) << '\n';
  }
}

void write_kde_csv(std::ostream& out, std::span<const DensityCurve> curves) {
  out << "node,x,density\n";
  for (const auto& c : curves) {
    for (std::size_t g = 0; g < c.grid.size(); ++g) {
      out << c.node << ',' << csv::format_double(c.grid[g]) << ',' << csv::format_double(c.density[g]) << '\n';
    }
  }
}

void write_tradecorr_csv(std::ostream& out, std::span<const TradecorrelationResiduals> periods) {
  out << "period,sender,receiver,value\n";
  for (const auto& p : periods) {
    for (std::size_t a = 0; a < p.index.size(); ++a) {
      out << p.period << ',' << p.index[a].sender << ',' << p.index[a].receiver << ','
          << csv::format_double(p.values(static_cast<Eigen::Index>(a))) << '\n';
    }
  }
}

json to_json(const SimSpec& spec, std::span<const PeriodTruth> truth) {
  json j;
  j["n_nodes"] = spec.n_nodes;
  j["n_periods"] = spec.n_periods;
  j["first_period"] = spec.first_period;
  j["density"] = spec.density;
  j["flows_per_period"] = spec.flows_per_period ? json(*spec.flows_per_period) : json(nullptr);
  j["structure"] = spec.structure.id();
  j["rho"] = spec.rho;
  j["beta"] = spec.beta;
  j["terms"] = spec.recipe.column_names();
  j["sigma"] = spec.sigma;
  j["seed"] = spec.seed;
  j["lag"] = spec.lag;
  j["alliance_probability"] = spec.alliance_probability;
  j["disk_radius_km"] = spec.disk_radius_km;
  json periods = json::array();
  for (const auto& t : truth) {
    periods.push_back({{"period", t.period}, {"n", t.n}, {"rho_lower", t.rho_lower}, {"rho_upper", t.rho_upper}});
  }
  j["periods"] = periods;
  return j;
}

void write_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

}  // namespace ndm
