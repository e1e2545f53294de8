#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "ndm/covariates.hpp"
#include "ndm/panel.hpp"
#include "ndm/weights.hpp"

namespace ndm {

/// Generative setup for synthetic panels.
///
/// Covariate distributions:
///   - every nodal series in the recipe is N(0, 1) per node and period
///     (exp of N(0, 1) when the recipe takes its log);
///   - alliances: each unordered node pair allied with `alliance_probability`,
///     constant over time;
///   - distances: Euclidean, nodes uniform on a disk of radius `disk_radius_km`.
/// Networks are directed Erdos-Renyi: each ordered pair present with
/// probability `density`, or exactly `flows_per_period` pairs when set.
struct SimSpec {
  int n_nodes = 40;
  int n_periods = 1;
  Period first_period = 2000;
  double density = 0.2;
  std::optional<int> flows_per_period;
  NeighborhoodSpec structure{NeighborhoodKind::FullActivity};
  double rho = 0.5;
  std::vector<double> beta{1.0, 2.0, -1.0};
  double sigma = 1.0;
  std::uint64_t seed = 1;
  int lag = 2;
  double alliance_probability = 0.1;
  double disk_radius_km = 5000.0;
  CovariateRecipe recipe = default_recipe();

  /// intercept, x1 (sender), x2 (receiver).
  static CovariateRecipe default_recipe();

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

struct PeriodTruth {
  Period period = 0;
  int n = 0;
  double rho_lower = -1.0;
  double rho_upper = 1.0;
};

struct SimPanel {
  Panel panel;
  CovariateSources covariates;
  std::vector<PeriodTruth> truth;
};

/// u = (I - rho W)^{-1} eps with eps ~ N(0, sigma^2 I).
Eigen::VectorXd draw_disturbance(const Eigen::MatrixXd& w, double rho, double sigma, std::mt19937_64& rng);

/// Fully determined by `spec.seed`. Throws DataError when rho falls outside the
/// admissible interval of a realized W.
SimPanel simulate(const SimSpec& spec);

/// Alliance and distance series produced by simulate().
inline constexpr const char* kAllianceSeries = "alliance";
inline constexpr const char* kDistanceSeries = "distance";

}  // namespace ndm
