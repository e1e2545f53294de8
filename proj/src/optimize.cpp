#include "ndm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "ndm/error.hpp"

namespace ndm {

namespace {

struct Vertex {
  double x;
  double f;
};

}  // namespace

ScalarOptimum nelder_mead_1d(const std::function<double(double)>& objective, double start_a, double start_b,
                             double lower, double upper, const SimplexOptions& options) {
  if (!(lower < upper)) throw NumericError("nelder_mead_1d: empty interval");
  if (start_a < lower || start_a > upper || start_b < lower || start_b > upper) {
    throw NumericError("nelder_mead_1d: starting vertices outside the interval");
  }
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  ScalarOptimum result;
  auto eval = [&](double x) {
    ++result.evaluations;
    const double f = objective(x);
    return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
  };
  auto clamp = [&](double x) { return std::clamp(x, lower, upper); };

  if (start_a == start_b) start_b = clamp(start_a + 0.05 * (upper - lower));
  if (start_a == start_b) start_b = clamp(start_a - 0.05 * (upper - lower));
  Vertex best{start_a, eval(start_a)};
  Vertex worst{start_b, eval(start_b)};

  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    if (worst.f < best.f) std::swap(best, worst);
    const double width = std::abs(worst.x - best.x);
    if (width <= options.x_tolerance ||
        width <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(best.x))) {
      result.converged = true;
      break;
    }
    // The centroid of the remaining vertices is just the best one.
    const double centroid = best.x;
    const Vertex reflected{clamp(centroid + kReflect * (centroid - worst.x)), 0.0};
    const double fr = eval(reflected.x);
    if (fr < best.f) {
      const double xe = clamp(centroid + kExpand * (reflected.x - centroid));
      const double fe = eval(xe);
      worst = fe < fr ? Vertex{xe, fe} : Vertex{reflected.x, fr};
      continue;
    }
    // With one remaining vertex, "worse than all but the worst" is fr >= best.f.
    if (fr < worst.f) {
      const double xc = centroid + kContract * (reflected.x - centroid);
      const double fc = eval(xc);
      if (fc <= fr) {
        worst = {xc, fc};
        continue;
      }
    } else {
      const double xc = centroid + kContract * (worst.x - centroid);
      const double fc = eval(xc);
      if (fc < worst.f) {
        worst = {xc, fc};
        continue;
      }
    }
    const double xs = best.x + kShrink * (worst.x - best.x);
    worst = {xs, eval(xs)};
  }
  if (worst.f < best.f) std::swap(best, worst);
  result.x = best.x;
  result.value = best.f;
  return result;
}

ScalarOptimum golden_section(const std::function<double(double)>& objective, double lower, double upper,
                             double x_tolerance, int max_iterations) {
  if (!(lower < upper)) throw NumericError("golden_section: empty interval");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  ScalarOptimum result;
  auto eval = [&](double x) {
    ++result.evaluations;
    const double f = objective(x);
    return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
  };
  double a = lower;
  double b = upper;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  for (result.iterations = 0; result.iterations < max_iterations; ++result.iterations) {
    if (b - a <= x_tolerance) {
      result.converged = true;
      break;
    }
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  if (fc < fd) {
    result.x = c;
    result.value = fc;
  } else {
    result.x = d;
    result.value = fd;
  }
  return result;
}

}  // namespace ndm
