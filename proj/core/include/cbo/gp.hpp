#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "cbo/kernel.hpp"

namespace cbo {

/// Observations of one experiment: design points (one per row) with the
/// objective value y and constraint value z recorded at each row.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd z;

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }

  /// Throws std::invalid_argument unless X is non-empty and y, z are finite
  /// vectors with one entry per design row.
  void validate() const;
};

/// Gaussian-process posterior at one point.
struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// A fitted constant-mean Gaussian process with squared-exponential
/// correlation.  The process mean and variance are the closed-form
/// generalized-least-squares estimates under the given correlation
/// hyperparameters; prediction accounts for the estimated mean, so the
/// predictive variance includes the mean-estimation inflation term.
struct UniGpModel {
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  KernelParams kernel;
  Eigen::MatrixXd X;
  Eigen::VectorXd obs;
  CorrMatrix R;
  Eigen::VectorXd alpha;       ///< R^{-1} (obs - mu_hat 1)
  Eigen::VectorXd r_inv_one;   ///< R^{-1} 1
  double one_r_one = 0.0;      ///< 1^T R^{-1} 1
  double loglik = 0.0;         ///< profile log-likelihood at the fit

  /// Number of posterior evaluations whose variance factor had to be clamped
  /// up to zero (a numerical-roundoff diagnostic shared by copies).
  std::int64_t clamp_count() const { return clamp_counter ? clamp_counter->load() : 0; }

  std::shared_ptr<std::atomic<std::int64_t>> clamp_counter;
};

/// Fits the constant-mean GP to observations `obs` at design rows X under
/// fixed correlation hyperparameters:
///   mu_hat    = 1^T R^{-1} obs / 1^T R^{-1} 1,
///   sigma2_hat = (obs - mu_hat 1)^T R^{-1} (obs - mu_hat 1) / n.
/// A single row is allowed (mu_hat = obs_1, sigma2_hat = 0); throws
/// std::invalid_argument on shape or finiteness violations and
/// IllConditionedError if R cannot be factorized.
UniGpModel fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& obs,
                  const KernelParams& kernel);

/// The dimensionless predictive-variance factor
///   k(x) = 1 - r^T R^{-1} r + (1 - 1^T R^{-1} r)^2 / (1^T R^{-1} 1),
/// clamped below at zero.  The second term inflates the variance for the
/// estimated process mean.  Both the univariate and the bivariate posteriors
/// scale their variances by this same factor.  Increments `clamps` when the
/// raw value was negative (roundoff near interpolation points).
double variance_factor(const CorrMatrix& R, const Eigen::VectorXd& r,
                       const Eigen::VectorXd& r_inv_one, double one_r_one,
                       std::atomic<std::int64_t>* clamps);

/// Posterior mean and variance at x:
///   mean = mu_hat + r(x)^T R^{-1} (obs - mu_hat 1),
///   variance = sigma2_hat * k(x).
/// Safe to call concurrently on a shared fitted model.
Posterior gp_posterior(const UniGpModel& model, const Eigen::VectorXd& x);

/// Result of hyperparameter search: the selected rates, whether the search
/// had to fall back to the isotropic default, and the profile log-likelihood
/// achieved.
struct KernelEstimate {
  KernelParams kernel;
  bool fallback = false;
  double loglik = 0.0;
};

/// The fixed multi-start schedule used by the rate searches: isotropic
/// log10-rate starting points.
const std::vector<double>& default_rate_starts();

/// Maximum-profile-likelihood estimate of the correlation rates for a single
/// output.  The process mean and variance are concentrated out in closed
/// form, leaving a d-dimensional search over log10-rates in [-3, 3]^d, run
/// as deterministic coordinate descent from the fixed isotropic start
/// schedule.  Requires at least d + 2 rows.  If every candidate
/// factorization fails, falls back to isotropic rates of 1.0 with the
/// fallback flag set, never throwing for search failures.  The overload
/// taking `log10_starts` substitutes a custom start schedule (chiefly for
/// robustness testing of the search itself).
KernelEstimate estimate_kernel(const Eigen::MatrixXd& X, const Eigen::VectorXd& obs);
KernelEstimate estimate_kernel(const Eigen::MatrixXd& X, const Eigen::VectorXd& obs,
                               const std::vector<double>& log10_starts);

/// Like estimate_kernel, but selects one shared set of rates for two outputs
/// observed on the same design by maximizing the sum of their per-output
/// profile log-likelihoods (each output keeps its own concentrated mean and
/// variance; only the correlation structure is tied).
KernelEstimate estimate_kernel_shared(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& z);
KernelEstimate estimate_kernel_shared(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& z,
                                      const std::vector<double>& log10_starts);

}  // namespace cbo
