#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <memory>

#include "cbo/gp.hpp"
#include "cbo/kernel.hpp"

namespace cbo {

/// Moment parameters of the separable bivariate process: per-output means
/// and variances plus the cross-output correlation.
struct BiGpParams {
  double mu_y = 0.0;
  double mu_z = 0.0;
  double sigma2_y = 1.0;
  double sigma2_z = 1.0;
  double rho = 0.0;

  /// Throws std::invalid_argument unless the variances are positive and
  /// finite and |rho| < 1.
  void validate() const;
};

/// Joint posterior of (y, z) at one point: a bivariate normal.
struct BiPosterior {
  double mean_y = 0.0;
  double mean_z = 0.0;
  double var_y = 0.0;
  double var_z = 0.0;
  double cov_yz = 0.0;

  /// Posterior correlation, 0 when either variance vanishes.
  double rho() const;
};

/// A fitted bivariate Gaussian process in which objective and constraint
/// share one spatial correlation structure and are coupled through a single
/// cross-correlation rho.  The joint covariance of the 2n stacked
/// observations is the separable product of the 2 x 2 output covariance and
/// the n x n spatial correlation matrix, which is what makes every formula
/// below reduce to univariate-sized linear algebra.
struct BiGpModel {
  double mu_y_hat = 0.0;
  double mu_z_hat = 0.0;
  double sigma2_y_hat = 0.0;
  double sigma2_z_hat = 0.0;
  double rho_hat = 0.0;
  KernelParams kernel;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  CorrMatrix R;
  Eigen::VectorXd alpha_y;     ///< R^{-1} (y - mu_y_hat 1)
  Eigen::VectorXd alpha_z;     ///< R^{-1} (z - mu_z_hat 1)
  Eigen::VectorXd r_inv_one;   ///< R^{-1} 1
  double one_r_one = 0.0;      ///< 1^T R^{-1} 1
  double loglik = 0.0;         ///< joint log-likelihood at the fitted parameters
  bool rho_fallback = false;   ///< rho_hat forced to 0 (degenerate residuals)

  std::int64_t clamp_count() const { return clamp_counter ? clamp_counter->load() : 0; }

  std::shared_ptr<std::atomic<std::int64_t>> clamp_counter;
};

/// Full log-likelihood of the stacked observations (y, z) under the
/// separable bivariate model with the given moment parameters and factorized
/// spatial correlation.  Uses the determinant and quadratic-form identities
/// of the separable structure, so cost is two solves, never a 2n x 2n
/// factorization.  At rho = 0 this equals the sum of the two univariate GP
/// log-likelihoods.
double joint_loglik(const BiGpParams& params, const CorrMatrix& R,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& z);

/// Closed-form stationary point of the likelihood in rho with all other
/// parameters held at the supplied values:
///   rho_tilde = (y_res^T R^{-1} z_res / n) / (sigma_y sigma_z).
/// With the concentrated variance estimates plugged in, this is exactly the
/// normalized cross quadratic form C / sqrt(A B) and is the unique interior
/// maximizer of the rho-likelihood.  The value is not clamped; callers
/// decide how to fold it into the search interval.
double rho_closed_form(const Dataset& data, double mu_y, double mu_z,
                       double sigma2_y, double sigma2_z, const CorrMatrix& R);

/// Fits the bivariate model on a shared correlation structure:
/// per-output generalized-least-squares means and maximum-likelihood
/// variances in closed form, then rho_hat by maximizing the joint
/// log-likelihood over [-0.999, 0.999] with a 41-point grid seed refined by
/// golden-section search.  Degenerate residuals (either output constant)
/// force rho_hat = 0 with rho_fallback set.  Throws std::invalid_argument on
/// malformed data and IllConditionedError when the correlation matrix cannot
/// be factorized.
BiGpModel fit_bigp(const Dataset& data, const KernelParams& kernel);

/// Joint posterior at x.  Because both outputs share one correlation
/// structure, the posterior means are the two univariate GP means, the
/// variances are the per-output process variances scaled by the shared
/// variance factor k(x), and the cross-covariance is rho_hat sigma_y sigma_z
/// times that same k(x) — so the posterior correlation equals rho_hat
/// wherever the posterior variance is positive.
BiPosterior bigp_posterior(const BiGpModel& model, const Eigen::VectorXd& x);

}  // namespace cbo
