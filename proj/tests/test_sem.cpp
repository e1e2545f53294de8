#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "ndm/error.hpp"
#include "ndm/optimize.hpp"
#include "ndm/sem.hpp"
#include "ndm/synth.hpp"

using namespace ndm;

namespace {

Eigen::MatrixXd swap2() {
  Eigen::MatrixXd w(2, 2);
  w << 0, 1, 1, 0;
  return w;
}

struct Instance {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  Eigen::MatrixXd w;
};

// y = X beta + (I - rho W)^{-1} eps with an intercept and two standard normal regressors.
Instance draw_instance(std::mt19937_64& rng, int n, double rho, double density = 0.1) {
  std::normal_distribution<double> z;
  Instance in;
  in.w = oracle::random_row_normalized(rng, n, density);
  in.x.resize(n, 3);
  for (int a = 0; a < n; ++a) in.x.row(a) << 1.0, z(rng), z(rng);
  Eigen::VectorXd eps(n);
  for (int a = 0; a < n; ++a) eps(a) = z(rng);
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - rho * in.w;
  in.y = in.x * Eigen::Vector3d(1.0, 2.0, -1.0) + oracle::solve(A, eps);
  return in;
}

}  // namespace

TEST_CASE("spectrum of small matrices") {
  const Spectrum s = spectrum(swap2());
  std::vector<double> re;
  for (auto l : s.eigenvalues) re.push_back(l.real());
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-1.0));
  CHECK(re[1] == doctest::Approx(1.0));
  CHECK(s.rho_lower == doctest::Approx(-1.0));
  CHECK(s.rho_upper == doctest::Approx(1.0));

  const Spectrum zero = spectrum(Eigen::MatrixXd::Zero(4, 4));
  for (auto l : zero.eigenvalues) CHECK(std::abs(l) == 0.0);
  CHECK(zero.rho_lower == -1.0);
  CHECK(zero.rho_upper == 1.0);
}

TEST_CASE("row-stochastic matrices have upper bound one") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) w(a, (a + 1) % n) = 1.0;  // a cycle keeps every row nonempty
    w += oracle::random_row_normalized(rng, n, 0.5);
    for (int a = 0; a < n; ++a) w.row(a) /= w.row(a).sum();
    const Spectrum s = spectrum(w);
    double radius = 0.0;
    for (auto l : s.eigenvalues) radius = std::max(radius, std::abs(l));
    CHECK(radius <= 1.0 + 1e-12);
    CHECK(s.rho_upper == doctest::Approx(1.0).epsilon(1e-12));
    // rho = 1 is a root of det(I - rho W).
    CHECK(oracle::log_abs_det(Eigen::MatrixXd::Identity(n, n) - 0.999999 * w) < std::log(1e-5));
  }
}

TEST_CASE("log determinant") {
  const Spectrum s = spectrum(swap2());
  CHECK(log_det(0.0, s) == 0.0);
  CHECK(log_det(0.5, s) == doctest::Approx(std::log(0.75)).epsilon(1e-14));
  CHECK_THROWS_AS(log_det(1.0, s), NumericError);

  std::mt19937_64 rng(12);
  const Eigen::MatrixXd w = oracle::random_row_normalized(rng, 6, 0.4);
  const double direct = oracle::log_abs_det(Eigen::MatrixXd::Identity(6, 6) - 0.3 * w);
  CHECK(std::abs(log_det(0.3, spectrum(w)) - direct) < 1e-10);
}

TEST_CASE("symmetric route agrees with the general solver") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const FlowIndex index = oracle::random_index(rng, 6, 20);
    const WeightMatrix w = build_weight_matrix(NeighborhoodSpec::parse("n3"), index);
    const Spectrum s = spectrum(w);
    CHECK(s.symmetrized);
    for (double rho : {-0.9, -0.3, 0.2, 0.7, 0.95}) {
      const double direct = oracle::log_abs_det(Eigen::MatrixXd::Identity(w.n(), w.n()) - rho * w.entries);
      CHECK(std::abs(log_det(rho, s) - direct) < 1e-10);
    }
  }
}

TEST_CASE("rho interval policies") {
  Eigen::MatrixXd w(3, 3);  // eigenvalues 1, -1/2, -1/2
  w << 0, 0.5, 0.5, 0.5, 0, 0.5, 0.5, 0.5, 0;
  FitOptions o;
  const Spectrum unit = spectrum(w, RhoInterval::Unit);
  CHECK(unit.rho_lower == -1.0);
  const Spectrum intersect = spectrum(w, RhoInterval::Intersect);
  CHECK(intersect.rho_lower == -1.0);
  CHECK(intersect.rho_upper == doctest::Approx(1.0));
  const Spectrum spectral = spectrum(w, RhoInterval::Spectral);
  CHECK(spectral.rho_lower == doctest::Approx(-2.0));
  CHECK(parse_rho_interval("spectral") == RhoInterval::Spectral);
  CHECK_THROWS_AS(parse_rho_interval("wide"), ConfigError);
}

TEST_CASE("profile likelihood at zero is ordinary least squares") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Instance in = draw_instance(rng, 30, 0.4);
    const SemProblem p = oracle::problem(in.y, in.x, in.w);
    const Spectrum s = spectrum(in.w);
    const ProfilePoint at0 = profile_loglik(0.0, p, s);
    const oracle::Ols ref = oracle::ols(in.y, in.x);
    CHECK(std::abs(at0.loglik - ref.loglik) < 1e-8);
    CHECK(std::abs(at0.sigma2 - ref.sigma2) < 1e-8);
    CHECK((at0.beta - ref.beta).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("profile likelihood equals the dense normal density") {
  std::mt19937_64 rng(22);
  const Instance in = draw_instance(rng, 4, 0.3, 0.6);
  const SemProblem p = oracle::problem(in.y, in.x.leftCols(2), in.w);
  const Spectrum s = spectrum(in.w);
  for (double rho : {-0.5, 0.0, 0.25, 0.6}) {
    const ProfilePoint pt = profile_loglik(rho, p, s);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4) - rho * in.w;
    const Eigen::MatrixXd Ainv = oracle::solve(A, Eigen::MatrixXd::Identity(4, 4));
    const Eigen::MatrixXd cov = pt.sigma2 * Ainv * Ainv.transpose();
    const double dense = oracle::mvn_log_density(in.y, in.x.leftCols(2) * pt.beta, cov);
    CHECK(std::abs(pt.loglik - dense) < 1e-9);
  }
}

TEST_CASE("profile likelihood is continuous inside the interval") {
  std::mt19937_64 rng(23);
  const Instance in = draw_instance(rng, 40, 0.5);
  const SemProblem p = oracle::problem(in.y, in.x, in.w);
  const Spectrum s = spectrum(in.w);
  ProfileLikelihood f(p, s);
  double prev = f.loglik(s.rho_lower + 1e-3);
  for (double rho = s.rho_lower + 2e-3; rho < s.rho_upper - 1e-3; rho += 1e-3) {
    const double v = f.loglik(rho);
    CHECK(std::isfinite(v));
    CHECK(std::abs(v - prev) < 0.5);
    prev = v;
  }
}

TEST_CASE("rank deficiency names the collinear column") {
  std::mt19937_64 rng(24);
  Instance in = draw_instance(rng, 20, 0.2);
  Eigen::MatrixXd x(20, 4);
  x << in.x, in.x.col(1) * 2.0;
  const SemProblem p = oracle::problem(in.y, x, in.w);
  CHECK_THROWS_WITH_AS(fit(p), doctest::Contains("x1, x3"), NumericError);
}

TEST_CASE("fit matches a dense grid search") {
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 3; ++rep) {
    const Instance in = draw_instance(rng, 50, 0.5);
    const SemProblem p = oracle::problem(in.y, in.x, in.w);
    const Spectrum s = spectrum(in.w);
    const SemFit f = fit(p, s);
    CHECK(f.converged);
    ProfileLikelihood lik(p, s);
    const auto [rho_grid, best] =
        oracle::grid_argmax([&](double r) { return lik.loglik(r); }, std::ceil((s.rho_lower + 1e-6) * 1e4) / 1e4,
                            s.rho_upper - 1e-6, 1e-4);
    CHECK(std::abs(f.rho_hat - rho_grid) < 1e-3);
    CHECK(f.loglik >= best - 1e-9);
    CHECK(f.aic == doctest::Approx(-2.0 * f.loglik + 2.0 * (3 + 2)).epsilon(1e-14));
    CHECK(f.parameters == 5);
    CHECK(f.se_rho > 0.0);
    CHECK(f.p_values.size() == 4);
    // Disturbance round trip.
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(50, 50) - f.rho_hat * in.w;
    CHECK((oracle::solve(A, f.eps_hat) - f.u_hat).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((f.u_hat - (in.y - in.x * f.beta_hat)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("independent-error fit") {
  std::mt19937_64 rng(26);
  const Instance in = draw_instance(rng, 60, 0.0);
  SUBCASE("aic by hand") {
    const SemFit f = fit_ols(oracle::problem(in.y, in.x, in.w));
    CHECK(std::abs(f.aic - (-2.0 * f.loglik + 2.0 * 4)) < 1e-12);
    CHECK(f.rho_hat == 0.0);
    CHECK(std::isnan(f.se_rho));
    CHECK_FALSE(f.spatial);
    CHECK(f.structure == "rho0");
    const oracle::Ols ref = oracle::ols(in.y, in.x);
    CHECK(std::abs(f.loglik - ref.loglik) < 1e-8);
  }
  SUBCASE("zero W differs only in the parameter count") {
    const SemProblem p = oracle::problem(in.y, in.x, Eigen::MatrixXd::Zero(60, 60));
    const SemFit ols = fit_ols(p);
    const SemFit sem = fit(p);
    CHECK(std::abs(sem.loglik - ols.loglik) < 1e-10);
    CHECK((sem.beta_hat - ols.beta_hat).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(sem.aic - ols.aic == doctest::Approx(2.0));
  }
  SUBCASE("exact fit is flagged degenerate") {
    const Eigen::VectorXd y = in.x * Eigen::Vector3d(1.0, 2.0, -1.0);
    const SemFit f = fit_ols(oracle::problem(y, in.x, in.w));
    CHECK(f.degenerate);
    CHECK((f.beta_hat - Eigen::Vector3d(1.0, 2.0, -1.0)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("normal p-values") {
  CHECK(normal_p_value(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(normal_p_value(1.959963984540054, 1.0) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(normal_p_value(-1.959963984540054, 1.0) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("scalar optimizers") {
  auto parabola = [](double x) { return (x - 0.3) * (x - 0.3); };
  const ScalarOptimum nm = nelder_mead_1d(parabola, 0.0, 0.5, -1.0, 1.0);
  CHECK(nm.converged);
  CHECK(nm.x == doctest::Approx(0.3).epsilon(1e-7));
  const ScalarOptimum gs = golden_section(parabola, -1.0, 1.0);
  CHECK(gs.x == doctest::Approx(0.3).epsilon(1e-7));

  // Minimum on the boundary is approached, never crossed.
  auto slope = [](double x) { return -x; };
  const ScalarOptimum edge = nelder_mead_1d(slope, 0.0, 0.5, -1.0, 0.9);
  CHECK(edge.x <= 0.9);
  CHECK(edge.x == doctest::Approx(0.9).epsilon(1e-7));

  SimplexOptions tight;
  tight.max_iterations = 2;
  CHECK_FALSE(nelder_mead_1d(parabola, -0.9, -0.8, -1.0, 1.0, tight).converged);
}

TEST_CASE("spectrum falls back when the symmetric solver stalls") {
  // This seed produces a distance-structure W on which Eigen's self-adjoint
  // solver does not converge.
  SimSpec spec;
  spec.n_nodes = 40;
  spec.n_periods = 20;
  spec.flows_per_period = 300;
  spec.structure = NeighborhoodSpec::parse("n5_import:800");
  spec.seed = 90005;
  SimPanel sim;
  REQUIRE_NOTHROW(sim = simulate(spec));
  const StructuralRelations rel{sim.covariates.find_dyadic(kAllianceSeries), sim.covariates.find_dyadic(kDistanceSeries)};
  for (const auto& snapshot : sim.panel.snapshots) {
    const FlowIndex index = index_flows(snapshot);
    const WeightMatrix w = build_weight_matrix(spec.structure, index, rel);
    const Spectrum s = spectrum(w);
    REQUIRE(s.eigenvalues.size() == index.size());
    const double direct = oracle::log_abs_det(Eigen::MatrixXd::Identity(w.n(), w.n()) - 0.5 * w.entries);
    CHECK(std::abs(log_det(0.5, s) - direct) < 1e-9);
  }
}
