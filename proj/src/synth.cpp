#include "ndm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include <Eigen/Dense>

#include "ndm/error.hpp"
#include "ndm/sem.hpp"

namespace ndm {

CovariateRecipe SimSpec::default_recipe() {
  CovariateRecipe recipe;
  recipe.intercept = true;
  recipe.terms = {{"x1_sender", "x1", TermRole::Sender, Transform::Identity},
                  {"x2_receiver", "x2", TermRole::Receiver, Transform::Identity}};
  return recipe;
}

void SimSpec::validate() const {
  if (n_nodes < 2) throw ConfigError("simulation: n_nodes must be at least 2");
  if (n_periods < 1) throw ConfigError("simulation: n_periods must be at least 1");
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("simulation: density must lie in (0, 1]");
  if (flows_per_period) {
    const long pairs = static_cast<long>(n_nodes) * (n_nodes - 1);
    if (*flows_per_period < 1 || *flows_per_period > pairs) {
      throw ConfigError("simulation: flows_per_period must lie in [1, " + std::to_string(pairs) + "]");
    }
  }
  if (!(sigma > 0.0)) throw ConfigError("simulation: sigma must be positive");
  if (lag < 0) throw ConfigError("simulation: lag must be nonnegative");
  if (!(alliance_probability >= 0.0 && alliance_probability <= 1.0)) {
    throw ConfigError("simulation: alliance_probability must lie in [0, 1]");
  }
  if (!(disk_radius_km > 0.0)) throw ConfigError("simulation: disk_radius_km must be positive");
  if (beta.size() != recipe.columns()) {
    throw ConfigError("simulation: beta has " + std::to_string(beta.size()) + " entries but the recipe has " +
                      std::to_string(recipe.columns()) + " columns");
  }
  for (const auto& term : recipe.terms) {
    if (term.role == TermRole::Dyad && term.series != kAllianceSeries && term.series != kDistanceSeries) {
      throw ConfigError("simulation: dyadic term " + term.name + " must use the alliance or distance series");
    }
  }
}

Eigen::VectorXd draw_disturbance(const Eigen::MatrixXd& w, double rho, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::VectorXd eps(w.rows());
  for (Eigen::Index a = 0; a < eps.size(); ++a) eps(a) = normal(rng);
  if (rho == 0.0) return eps;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(w.rows(), w.cols()) - rho * w;
  return a.partialPivLu().solve(eps);
}

namespace {

std::string node_code(int k, int width) {
  std::string digits = std::to_string(k);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return "N" + digits;
}

}  // namespace

SimPanel simulate(const SimSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const int width = std::max(3, static_cast<int>(std::to_string(spec.n_nodes).size()));
  std::vector<NodeId> nodes;
  for (int k = 1; k <= spec.n_nodes; ++k) nodes.push_back(node_code(k, width));
  const Period last_period = spec.first_period + spec.n_periods - 1;
  const Period covariate_start = spec.first_period - spec.lag;

  SimPanel out;
  std::vector<RosterEntry> roster;
  for (const auto& node : nodes) roster.push_back({node, covariate_start, last_period});
  out.panel.roster = NodeRoster(roster);

  // Nodal series in order of first use by the recipe.
  std::vector<std::pair<std::string, bool>> nodal;  // name, positive (log-transformed)
  for (const auto& term : spec.recipe.terms) {
    if (term.role == TermRole::Dyad) continue;
    auto it = std::find_if(nodal.begin(), nodal.end(), [&](const auto& e) { return e.first == term.series; });
    if (it == nodal.end()) {
      nodal.emplace_back(term.series, term.transform == Transform::Log);
    } else {
      it->second = it->second || term.transform == Transform::Log;
    }
  }
  for (const auto& [name, positive] : nodal) {
    NodalSeries series(name);
    for (Period t = covariate_start; t <= last_period; ++t) {
      for (const auto& node : nodes) {
        const double z = normal(rng);
        series.set(node, t, positive ? std::exp(z) : z);
      }
    }
    out.covariates.nodal.push_back(std::move(series));
  }

  DyadicSeries alliance(kAllianceSeries, true);
  DyadicSeries distance(kDistanceSeries, true);
  std::vector<std::pair<double, double>> position;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double r = spec.disk_radius_km * std::sqrt(uniform(rng));
    const double theta = 2.0 * std::numbers::pi * uniform(rng);
    position.emplace_back(r * std::cos(theta), r * std::sin(theta));
  }
  for (std::size_t x = 0; x < nodes.size(); ++x) {
    for (std::size_t y = x + 1; y < nodes.size(); ++y) {
      alliance.set(nodes[x], nodes[y], covariate_start, uniform(rng) < spec.alliance_probability ? 1.0 : 0.0);
      const double dx = position[x].first - position[y].first;
      const double dy = position[x].second - position[y].second;
      distance.set(nodes[x], nodes[y], covariate_start, std::hypot(dx, dy));
    }
  }
  out.covariates.dyadic.push_back(std::move(alliance));
  out.covariates.dyadic.push_back(std::move(distance));
  const StructuralRelations relations{&out.covariates.dyadic[0], &out.covariates.dyadic[1]};

  const Eigen::Map<const Eigen::VectorXd> beta(spec.beta.data(), static_cast<Eigen::Index>(spec.beta.size()));
  const long pair_count = static_cast<long>(spec.n_nodes) * (spec.n_nodes - 1);
  for (Period t = spec.first_period; t <= last_period; ++t) {
    std::vector<long> chosen;
    if (spec.flows_per_period) {
      // Partial Fisher-Yates over the ordered pairs.
      std::vector<long> pairs(static_cast<std::size_t>(pair_count));
      for (long k = 0; k < pair_count; ++k) pairs[static_cast<std::size_t>(k)] = k;
      for (long k = 0; k < *spec.flows_per_period; ++k) {
        std::uniform_int_distribution<long> pick(k, pair_count - 1);
        std::swap(pairs[static_cast<std::size_t>(k)], pairs[static_cast<std::size_t>(pick(rng))]);
      }
      chosen.assign(pairs.begin(), pairs.begin() + *spec.flows_per_period);
    } else {
      for (long k = 0; k < pair_count; ++k) {
        if (uniform(rng) < spec.density) chosen.push_back(k);
      }
    }
    if (chosen.empty()) continue;
    std::vector<Flow> flows;
    for (long k : chosen) {
      const auto sender = static_cast<std::size_t>(k / (spec.n_nodes - 1));
      auto receiver = static_cast<std::size_t>(k % (spec.n_nodes - 1));
      if (receiver >= sender) ++receiver;
      flows.push_back({nodes[sender], nodes[receiver], 1.0});
    }
    NetworkSnapshot skeleton(t, flows, out.panel.roster);
    const FlowIndex index = index_flows(skeleton);
    const DesignMatrix design = build_design(index, out.covariates, spec.recipe, spec.lag);
    const WeightMatrix w = build_weight_matrix(spec.structure, index, relations);
    const Spectrum bounds = spectrum(w);
    if (!(bounds.rho_lower < spec.rho && spec.rho < bounds.rho_upper)) {
      throw DataError("simulation: rho=" + std::to_string(spec.rho) + " outside the admissible interval (" +
                      std::to_string(bounds.rho_lower) + ", " + std::to_string(bounds.rho_upper) +
                      ") of the realized W in period " + std::to_string(t) + "; use a smaller |rho|");
    }
    const Eigen::VectorXd u = draw_disturbance(w.entries, spec.rho, spec.sigma, rng);
    const Eigen::VectorXd y = design.rows * beta + u;
    std::vector<Flow> valued;
    for (std::size_t a = 0; a < index.size(); ++a) {
      valued.push_back({index[a].sender, index[a].receiver, std::exp(y(static_cast<Eigen::Index>(a)))});
    }
    out.panel.snapshots.emplace_back(t, std::move(valued), out.panel.roster);
    out.truth.push_back({t, static_cast<int>(index.size()), bounds.rho_lower, bounds.rho_upper});
  }
  return out;
}

}  // namespace ndm
