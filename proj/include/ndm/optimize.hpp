#pragma once

#include <functional>

namespace ndm {

struct ScalarOptimum {
  double x = 0.0;
  double value = 0.0;  // objective at x
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

struct SimplexOptions {
  int max_iterations = 500;
  double x_tolerance = 1e-9;  // stop when the simplex is narrower than this
};

/// Nelder-Mead on a scalar argument restricted to the closed interval [lower, upper].
/// Minimizes `objective`; the two starting vertices must lie inside the interval.
/// Trial points are clamped to the interval.
ScalarOptimum nelder_mead_1d(const std::function<double(double)>& objective, double start_a, double start_b,
                             double lower, double upper, const SimplexOptions& options = {});

/// Golden-section search for a minimum on [lower, upper].
ScalarOptimum golden_section(const std::function<double(double)>& objective, double lower, double upper,
                             double x_tolerance = 1e-9, int max_iterations = 200);

}  // namespace ndm
