#pragma once

#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ndm/covariates.hpp"
#include "ndm/optimize.hpp"
#include "ndm/weights.hpp"

namespace ndm {

/// log(Y) = X beta + u,  u = rho W u + eps,  eps ~ N(0, sigma^2 I).
struct SemProblem {
  Eigen::VectorXd y;
  DesignMatrix X;
  WeightMatrix W;

  /// Throws DataError unless y, X and W agree in size and n > p.
  void validate() const;
};

/// Admissible rho interval.
///   Intersect  (-1, 1) intersected with (1/lambda_min, 1/lambda_max)
///   Unit       (-1, 1)
///   Spectral   (1/lambda_min, 1/lambda_max), falling back to -1 / 1 on a side
///              without real eigenvalues
enum class RhoInterval { Intersect, Unit, Spectral };

RhoInterval parse_rho_interval(const std::string& text);
std::string to_string(RhoInterval policy);

struct Spectrum {
  std::vector<std::complex<double>> eigenvalues;
  double rho_lower = -1.0;
  double rho_upper = 1.0;
  /// True when W was diagonally similar to a symmetric matrix and the
  /// eigenvalues came from the symmetric solver.
  bool symmetrized = false;
};

/// All eigenvalues of a dense real matrix and the resulting rho bounds.
/// If D W is symmetric for D = diag(nonzeros per row) the symmetric
/// similarity transform is used, otherwise the general real Schur route.
Spectrum spectrum(const Eigen::MatrixXd& w, RhoInterval policy = RhoInterval::Intersect);
inline Spectrum spectrum(const WeightMatrix& w, RhoInterval policy = RhoInterval::Intersect) {
  return spectrum(w.entries, policy);
}

/// log|det(I - rho W)| = sum_i log|1 - rho lambda_i|. Throws NumericError at a pole.
double log_det(double rho, const Spectrum& spectrum);

struct ProfilePoint {
  double loglik = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
};

/// Concentrated log-likelihood of rho with beta and sigma^2 profiled out by
/// least squares on the transformed data (I - rho W) y, (I - rho W) X.
class ProfileLikelihood {
 public:
  /// Throws NumericError naming the collinear columns if X is rank deficient.
  ProfileLikelihood(const SemProblem& problem, const Spectrum& spectrum);

  ProfilePoint at(double rho) const;
  double loglik(double rho) const { return at(rho).loglik; }

  /// sigma^2 ((AX)'(AX))^{-1} with A = I - rho W.
  Eigen::MatrixXd beta_covariance(double rho, double sigma2) const;

  const Spectrum& spectrum() const { return spectrum_; }

 private:
  const SemProblem& problem_;
  const Spectrum& spectrum_;
  Eigen::VectorXd wy_;
  Eigen::MatrixXd wx_;
};

ProfilePoint profile_loglik(double rho, const SemProblem& problem, const Spectrum& spectrum);

struct FitOptions {
  RhoInterval interval = RhoInterval::Intersect;
  SimplexOptions simplex{};
  double boundary_margin = 1e-6;
  double degenerate_sigma2 = 1e-12;
};

struct SemFit {
  Period period = 0;
  std::string structure;  // neighborhood id, or "rho0" for the independent-error model
  std::vector<std::string> terms;
  bool spatial = true;

  double rho_hat = 0.0;
  double rho_lower = -1.0;
  double rho_upper = 1.0;
  Eigen::VectorXd beta_hat;
  double sigma2_hat = 0.0;
  Eigen::VectorXd se_beta;
  double se_rho = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd p_values;  // beta terms followed by rho
  double loglik = 0.0;
  double aic = 0.0;
  int n = 0;
  int parameters = 0;  // count entering the AIC

  Eigen::VectorXd u_hat;    // y - X beta_hat
  Eigen::VectorXd eps_hat;  // (I - rho_hat W) u_hat

  bool converged = false;
  bool degenerate = false;  // sigma2_hat below FitOptions::degenerate_sigma2; SEs suppressed
  std::string optimizer;
  int iterations = 0;
};

/// Two-sided normal-approximation p-value for estimate / se.
double normal_p_value(double estimate, double se);

/// Maximum likelihood fit: 1-D Nelder-Mead over rho (starts 0 and rho_upper/2),
/// golden-section fallback when the simplex does not converge.
SemFit fit(const SemProblem& problem, const FitOptions& options = {});
SemFit fit(const SemProblem& problem, const Spectrum& spectrum, const FitOptions& options = {});

/// Independent-error model (rho fixed at 0); AIC counts p + 1 parameters.
SemFit fit_ols(const Eigen::VectorXd& y, const DesignMatrix& X, const FitOptions& options = {});
inline SemFit fit_ols(const SemProblem& problem, const FitOptions& options = {}) {
  return fit_ols(problem.y, problem.X, options);
}

}  // namespace ndm
