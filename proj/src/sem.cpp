#include "ndm/sem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "ndm/error.hpp"

namespace ndm {

void SemProblem::validate() const {
  const Eigen::Index n = y.size();
  if (X.rows.rows() != n) {
    throw DataError("problem: y has " + std::to_string(n) + " entries but X has " + std::to_string(X.rows.rows()) +
                    " rows");
  }
  if (W.entries.rows() != n || W.entries.cols() != n) {
    throw DataError("problem: W is " + std::to_string(W.entries.rows()) + "x" + std::to_string(W.entries.cols()) +
                    ", expected " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (n <= X.rows.cols()) {
    throw DataError("problem: need more observations (" + std::to_string(n) + ") than regressors (" +
                    std::to_string(X.rows.cols()) + ")");
  }
  if (!y.allFinite() || !X.rows.allFinite() || !W.entries.allFinite()) throw DataError("problem: non-finite input");
}

RhoInterval parse_rho_interval(const std::string& text) {
  if (text == "intersect") return RhoInterval::Intersect;
  if (text == "unit") return RhoInterval::Unit;
  if (text == "spectral") return RhoInterval::Spectral;
  throw ConfigError("unknown rho interval policy '" + text + "' (expected intersect, unit or spectral)");
}

std::string to_string(RhoInterval policy) {
  switch (policy) {
    case RhoInterval::Intersect: return "intersect";
    case RhoInterval::Unit: return "unit";
    case RhoInterval::Spectral: return "spectral";
  }
  return "?";
}

namespace {

// Returns the symmetric matrix D^{1/2} W D^{-1/2} restricted to nonzero rows
// when D W is symmetric for D = diag(nonzeros per row).
bool symmetrize(const Eigen::MatrixXd& w, Eigen::MatrixXd& s, Eigen::Index& zero_rows) {
  const Eigen::Index n = w.rows();
  Eigen::VectorXd degree(n);
  for (Eigen::Index a = 0; a < n; ++a) degree(a) = static_cast<double>((w.row(a).array() != 0.0).count());
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double lhs = degree(a) * w(a, b);
      const double rhs = degree(b) * w(b, a);
      if (std::abs(lhs - rhs) > 1e-12 * std::max(std::abs(lhs), std::abs(rhs))) return false;
      if ((w(a, b) == 0.0) != (w(b, a) == 0.0)) return false;
    }
    if (w(a, a) != 0.0) return false;
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index a = 0; a < n; ++a) {
    if (degree(a) > 0) keep.push_back(a);
  }
  zero_rows = n - static_cast<Eigen::Index>(keep.size());
  const auto m = static_cast<Eigen::Index>(keep.size());
  s.resize(m, m);
  for (Eigen::Index x = 0; x < m; ++x) {
    for (Eigen::Index y = 0; y < m; ++y) {
      const Eigen::Index a = keep[static_cast<std::size_t>(x)];
      const Eigen::Index b = keep[static_cast<std::size_t>(y)];
      s(x, y) = std::sqrt(degree(a) / degree(b)) * w(a, b);
    }
  }
  // Exact symmetry for the self-adjoint solver, which reads one triangle only.
  s = 0.5 * (s + s.transpose()).eval();
  return true;
}

}  // namespace

Spectrum spectrum(const Eigen::MatrixXd& w, RhoInterval policy) {
  if (w.rows() != w.cols()) throw DataError("spectrum: matrix is not square");
  if (!w.allFinite()) throw DataError("spectrum: matrix has non-finite entries");
  Spectrum out;
  const Eigen::Index n = w.rows();
  out.eigenvalues.reserve(static_cast<std::size_t>(n));

  Eigen::MatrixXd s;
  Eigen::Index zero_rows = 0;
  if (n > 0 && symmetrize(w, s, zero_rows)) {
    out.symmetrized = true;
    if (s.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
      if (solver.info() == Eigen::Success) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) out.eigenvalues.emplace_back(solver.eigenvalues()(i), 0.0);
      } else {
        // Eigen 3.4.0's tridiagonal QR occasionally stalls on matrices with
        // many identical rows; the general route below handles them.
        out.symmetrized = false;
      }
    }
    if (out.symmetrized) {
      for (Eigen::Index i = 0; i < zero_rows; ++i) out.eigenvalues.emplace_back(0.0, 0.0);
    }
  }
  if (n > 0 && !out.symmetrized) {
    out.eigenvalues.clear();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(w, false);
    if (solver.info() != Eigen::Success) {
      throw NumericError("spectrum: QR iteration did not converge for n=" + std::to_string(n) +
                         " (max " + std::to_string(solver.getMaxIterations()) + " iterations per eigenvalue)");
    }
    for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues.push_back(solver.eigenvalues()(i));
  }

  double lambda_min = 0.0;
  double lambda_max = 0.0;
  for (const auto& lambda : out.eigenvalues) {
    if (std::abs(lambda.imag()) > 1e-9 * std::max(1.0, std::abs(lambda))) continue;
    lambda_min = std::min(lambda_min, lambda.real());
    lambda_max = std::max(lambda_max, lambda.real());
  }
  const double spectral_lower = lambda_min < -1e-12 ? 1.0 / lambda_min : -1.0;
  const double spectral_upper = lambda_max > 1e-12 ? 1.0 / lambda_max : 1.0;
  switch (policy) {
    case RhoInterval::Intersect:
      out.rho_lower = std::max(-1.0, spectral_lower);
      out.rho_upper = std::min(1.0, spectral_upper);
      break;
    case RhoInterval::Unit:
      out.rho_lower = -1.0;
      out.rho_upper = 1.0;
      break;
    case RhoInterval::Spectral:
      out.rho_lower = spectral_lower;
      out.rho_upper = spectral_upper;
      break;
  }
  return out;
}

// Eigenvalues carry rounding error, so an exact zero test would miss poles.
constexpr double kPoleTolerance = 1e-12;

double log_det(double rho, const Spectrum& spectrum) {
  double sum = 0.0;
  for (const auto& lambda : spectrum.eigenvalues) {
    const double magnitude = std::abs(std::complex<double>(1.0, 0.0) - rho * lambda);
    if (!(magnitude > kPoleTolerance)) {
      throw NumericError("log_det: I - rho W is singular at rho=" + std::to_string(rho) +
                         " (eigenvalue " + std::to_string(lambda.real()) + ")");
    }
    sum += std::log(magnitude);
  }
  return sum;
}

namespace {

void check_rank(const DesignMatrix& X) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.rows);
  if (qr.rank() == X.rows.cols()) return;
  // Columns taking part in a linear dependence are the support of the null space.
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(X.rows);
  const Eigen::MatrixXd kernel = lu.kernel();
  std::string names;
  for (Eigen::Index col = 0; col < X.rows.cols(); ++col) {
    if (kernel.row(col).cwiseAbs().maxCoeff() <= 1e-8 * kernel.cwiseAbs().maxCoeff()) continue;
    if (!names.empty()) names += ", ";
    const auto c = static_cast<std::size_t>(col);
    names += c < X.column_names.size() ? X.column_names[c] : "column " + std::to_string(col);
  }
  if (names.empty()) names = "(near-dependence below LU tolerance)";
  throw NumericError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                     std::to_string(X.rows.cols()) + "): collinear column(s) " + names);
}

constexpr double kLog2Pi = 1.8378770664093454836;

double concentrated(double n, double sigma2, double logdet) {
  return -0.5 * n * (kLog2Pi + 1.0) - 0.5 * n * std::log(sigma2) + logdet;
}

}  // namespace

ProfileLikelihood::ProfileLikelihood(const SemProblem& problem, const Spectrum& spectrum)
    : problem_(problem), spectrum_(spectrum) {
  problem.validate();
  check_rank(problem.X);
  wy_ = problem.W.entries * problem.y;
  wx_ = problem.W.entries * problem.X.rows;
}

ProfilePoint ProfileLikelihood::at(double rho) const {
  const Eigen::VectorXd ay = problem_.y - rho * wy_;
  const Eigen::MatrixXd ax = problem_.X.rows - rho * wx_;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ax);
  ProfilePoint point;
  point.beta = qr.solve(ay);
  const Eigen::VectorXd e = ay - ax * point.beta;
  const auto n = static_cast<double>(problem_.y.size());
  point.sigma2 = e.squaredNorm() / n;
  point.loglik = concentrated(n, point.sigma2, log_det(rho, spectrum_));
  return point;
}

Eigen::MatrixXd ProfileLikelihood::beta_covariance(double rho, double sigma2) const {
  const Eigen::MatrixXd ax = problem_.X.rows - rho * wx_;
  const Eigen::MatrixXd gram = ax.transpose() * ax;
  return sigma2 * gram.ldlt().solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
}

ProfilePoint profile_loglik(double rho, const SemProblem& problem, const Spectrum& spectrum) {
  return ProfileLikelihood(problem, spectrum).at(rho);
}

double normal_p_value(double estimate, double se) {
  if (!(se > 0.0) || !std::isfinite(se)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::abs(estimate / se) / std::numbers::sqrt2);
}

namespace {

// Negative inverse of the second derivative of the profile log-likelihood.
double curvature_se(const ProfileLikelihood& profile, double rho, double lower, double upper) {
  const double h = 1e-4 * (upper - lower);
  double d2 = 0.0;
  if (rho - h > lower && rho + h < upper) {
    d2 = (profile.loglik(rho + h) - 2.0 * profile.loglik(rho) + profile.loglik(rho - h)) / (h * h);
  } else if (rho - h <= lower) {
    d2 = (profile.loglik(rho) - 2.0 * profile.loglik(rho + h) + profile.loglik(rho + 2.0 * h)) / (h * h);
  } else {
    d2 = (profile.loglik(rho) - 2.0 * profile.loglik(rho - h) + profile.loglik(rho - 2.0 * h)) / (h * h);
  }
  if (!(d2 < 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(-1.0 / d2);
}

}  // namespace

SemFit fit(const SemProblem& problem, const FitOptions& options) {
  const Spectrum spec = spectrum(problem.W, options.interval);
  return fit(problem, spec, options);
}

SemFit fit(const SemProblem& problem, const Spectrum& spec, const FitOptions& options) {
  const ProfileLikelihood profile(problem, spec);
  const double lower = spec.rho_lower + options.boundary_margin;
  const double upper = spec.rho_upper - options.boundary_margin;
  if (!(lower < 0.0 && 0.0 < upper)) throw NumericError("fit: rho interval does not contain 0");

  auto objective = [&](double rho) { return -profile.loglik(rho); };
  ScalarOptimum best = nelder_mead_1d(objective, 0.0, 0.5 * upper, lower, upper, options.simplex);
  std::string optimizer = "nelder-mead";
  if (!best.converged) {
    const ScalarOptimum fallback = golden_section(objective, lower, upper, options.simplex.x_tolerance,
                                                  options.simplex.max_iterations);
    if (fallback.value <= best.value || fallback.converged) {
      best = fallback;
      optimizer = "golden-section";
    }
  }

  SemFit out;
  out.period = problem.X.index.period();
  out.structure = problem.W.spec.id();
  out.terms = problem.X.column_names;
  out.spatial = true;
  out.rho_lower = spec.rho_lower;
  out.rho_upper = spec.rho_upper;
  out.rho_hat = best.x;
  out.converged = best.converged;
  out.optimizer = optimizer;
  out.iterations = best.iterations;

  const ProfilePoint point = profile.at(out.rho_hat);
  const auto n = problem.y.size();
  const auto p = problem.X.rows.cols();
  out.n = static_cast<int>(n);
  out.beta_hat = point.beta;
  out.sigma2_hat = point.sigma2;
  out.loglik = point.loglik;
  out.parameters = static_cast<int>(p) + 2;
  out.aic = -2.0 * out.loglik + 2.0 * out.parameters;
  out.u_hat = problem.y - problem.X.rows * out.beta_hat;
  out.eps_hat = out.u_hat - out.rho_hat * (problem.W.entries * out.u_hat);

  out.se_beta = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  out.p_values = Eigen::VectorXd::Constant(p + 1, std::numeric_limits<double>::quiet_NaN());
  out.degenerate = !(out.sigma2_hat >= options.degenerate_sigma2);
  if (!out.degenerate) {
    out.se_beta = profile.beta_covariance(out.rho_hat, out.sigma2_hat).diagonal().cwiseSqrt();
    out.se_rho = curvature_se(profile, out.rho_hat, lower, upper);
    for (Eigen::Index k = 0; k < p; ++k) out.p_values(k) = normal_p_value(out.beta_hat(k), out.se_beta(k));
    out.p_values(p) = normal_p_value(out.rho_hat, out.se_rho);
  }
  return out;
}

SemFit fit_ols(const Eigen::VectorXd& y, const DesignMatrix& X, const FitOptions& options) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = X.rows.cols();
  if (X.rows.rows() != n) throw DataError("fit_ols: y and X disagree in length");
  if (n <= p) throw DataError("fit_ols: need more observations than regressors");
  check_rank(X);

  SemFit out;
  out.period = X.index.period();
  out.structure = "rho0";
  out.terms = X.column_names;
  out.spatial = false;
  out.rho_hat = 0.0;
  out.converged = true;
  out.optimizer = "none";
  out.n = static_cast<int>(n);

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X.rows);
  out.beta_hat = qr.solve(y);
  out.u_hat = y - X.rows * out.beta_hat;
  out.eps_hat = out.u_hat;
  out.sigma2_hat = out.u_hat.squaredNorm() / static_cast<double>(n);
  out.loglik = concentrated(static_cast<double>(n), out.sigma2_hat, 0.0);
  out.parameters = static_cast<int>(p) + 1;
  out.aic = -2.0 * out.loglik + 2.0 * out.parameters;

  out.se_beta = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  out.p_values = Eigen::VectorXd::Constant(p + 1, std::numeric_limits<double>::quiet_NaN());
  out.degenerate = !(out.sigma2_hat >= options.degenerate_sigma2);
  if (!out.degenerate) {
    const Eigen::MatrixXd gram = X.rows.transpose() * X.rows;
    const Eigen::MatrixXd cov =
        out.sigma2_hat * gram.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    out.se_beta = cov.diagonal().cwiseSqrt();
    for (Eigen::Index k = 0; k < p; ++k) out.p_values(k) = normal_p_value(out.beta_hat(k), out.se_beta(k));
  }
  return out;
}

}  // namespace ndm
