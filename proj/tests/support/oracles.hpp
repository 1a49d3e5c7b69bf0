#pragma once

// Brute-force reference computations for the test suites: dense-inverse
// kriging algebra and full 2n x 2n joint-covariance conditioning, written
// with none of the structured shortcuts the library uses.  Slow and direct
// on purpose.

#include <Eigen/Dense>
#include <cstdint>

#include "cbo/bigp.hpp"
#include "cbo/gp.hpp"
#include "cbo/kernel.hpp"
#include "cbo/rng.hpp"

namespace oracles {

struct DenseGpResult {
  double mu_hat = 0.0;
  double sigma2_hat = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Constant-mean kriging at x by explicit dense inversion of the jittered
/// correlation matrix (taken from the fitted model so both sides condition
/// on the identical matrix).
inline DenseGpResult dense_gp_posterior(const Eigen::MatrixXd& R_jittered,
                                        const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& obs,
                                        const cbo::KernelParams& kernel,
                                        const Eigen::VectorXd& x) {
  const int n = static_cast<int>(X.rows());
  const Eigen::MatrixXd Rinv = R_jittered.inverse();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd r = cbo::cross_corr_vec(x, X, kernel);

  DenseGpResult out;
  out.mu_hat = ones.dot(Rinv * obs) / ones.dot(Rinv * ones);
  const Eigen::VectorXd resid = obs - out.mu_hat * ones;
  out.sigma2_hat = resid.dot(Rinv * resid) / n;
  out.mean = out.mu_hat + r.dot(Rinv * resid);
  const double one_r_r = ones.dot(Rinv * r);
  const double defect = 1.0 - one_r_r;
  const double k = 1.0 - r.dot(Rinv * r) + defect * defect / ones.dot(Rinv * ones);
  out.variance = out.sigma2_hat * k;
  return out;
}

struct DenseBiResult {
  double mean_y = 0.0;
  double mean_z = 0.0;
  Eigen::Matrix2d cov;
};

/// Joint posterior of (Y(x), Z(x)) under the separable bivariate model with
/// the given fitted moments, conditioning on the full 2n-vector of stacked
/// observations through the explicit 2n x 2n joint covariance — generalized
/// least squares mean correction included, all by dense inversion.
inline DenseBiResult dense_bigp_posterior(const Eigen::MatrixXd& R_jittered,
                                          const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& z,
                                          const cbo::KernelParams& kernel,
                                          double mu_y, double mu_z, double sigma2_y,
                                          double sigma2_z, double rho,
                                          const Eigen::VectorXd& x) {
  const int n = static_cast<int>(X.rows());
  const double sy = std::sqrt(sigma2_y);
  const double sz = std::sqrt(sigma2_z);

  const Eigen::MatrixXd C = cbo::kron_cov(sigma2_y, sigma2_z, rho, R_jittered);
  const Eigen::MatrixXd Cinv = C.inverse();

  // Cross covariance of (Y(x), Z(x)) with the stacked observations, and the
  // prior covariance of (Y(x), Z(x)).
  const Eigen::VectorXd r = cbo::cross_corr_vec(x, X, kernel);
  Eigen::MatrixXd cross(2, 2 * n);
  cross.block(0, 0, 1, n) = sigma2_y * r.transpose();
  cross.block(0, n, 1, n) = rho * sy * sz * r.transpose();
  cross.block(1, 0, 1, n) = rho * sy * sz * r.transpose();
  cross.block(1, n, 1, n) = sigma2_z * r.transpose();
  Eigen::Matrix2d prior;
  prior << sigma2_y, rho * sy * sz, rho * sy * sz, sigma2_z;

  // Mean basis: each output has its own constant mean.
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(2 * n, 2);
  F.block(0, 0, n, 1).setOnes();
  F.block(n, 1, n, 1).setOnes();
  const Eigen::Matrix2d m = Eigen::Matrix2d::Identity();  // basis at the new point

  Eigen::VectorXd stacked(2 * n);
  stacked.head(n) = y;
  stacked.tail(n) = z;
  Eigen::VectorXd mean_vec(2 * n);
  mean_vec.head(n).setConstant(mu_y);
  mean_vec.tail(n).setConstant(mu_z);

  DenseBiResult out;
  const Eigen::Vector2d cond =
      Eigen::Vector2d(mu_y, mu_z) + cross * Cinv * (stacked - mean_vec);
  out.mean_y = cond[0];
  out.mean_z = cond[1];

  const Eigen::Matrix2d plain = prior - cross * Cinv * cross.transpose();
  const Eigen::Matrix2d defect = m - F.transpose() * Cinv * cross.transpose();
  const Eigen::Matrix2d gls = (F.transpose() * Cinv * F).inverse();
  out.cov = plain + defect.transpose() * gls * defect;
  return out;
}

/// Log-density of the stacked observations under the separable bivariate
/// model, evaluated on the full 2n x 2n covariance with a dense
/// factorization.
inline double dense_joint_loglik(const Eigen::MatrixXd& R_jittered,
                                 const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                                 double mu_y, double mu_z, double sigma2_y,
                                 double sigma2_z, double rho) {
  const int n = static_cast<int>(y.size());
  const Eigen::MatrixXd C = cbo::kron_cov(sigma2_y, sigma2_z, rho, R_jittered);
  Eigen::VectorXd resid(2 * n);
  resid.head(n) = y.array() - mu_y;
  resid.tail(n) = z.array() - mu_z;

  const Eigen::LLT<Eigen::MatrixXd> llt(C);
  const Eigen::MatrixXd L = llt.matrixL();
  double log_det = 0.0;
  for (int i = 0; i < 2 * n; ++i) {
    log_det += 2.0 * std::log(L(i, i));
  }
  const double quad = resid.dot(llt.solve(resid));
  constexpr double kLog2Pi = 1.8378770664093454836;
  return -0.5 * (2 * n * kLog2Pi + log_det + quad);
}

/// Deterministic random design in the unit cube (one point per row).
inline Eigen::MatrixXd random_design(int n, int d, std::uint64_t seed) {
  cbo::Rng rng(seed, "test_design");
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      X(i, j) = rng.uniform();
    }
  }
  return X;
}

/// Smooth deterministic test response: a seeded random quadratic-plus-cosine
/// surface, distinct per seed.
inline Eigen::VectorXd smooth_response(const Eigen::MatrixXd& X, std::uint64_t seed) {
  cbo::Rng rng(seed, "test_response");
  const int d = static_cast<int>(X.cols());
  Eigen::VectorXd center(d);
  Eigen::VectorXd linear(d);
  for (int j = 0; j < d; ++j) {
    center[j] = rng.uniform();
    linear[j] = 2.0 * rng.uniform() - 1.0;
  }
  const double wave = 1.0 + 4.0 * rng.uniform();
  const double amp = 0.5 + rng.uniform();
  Eigen::VectorXd out(X.rows());
  for (int i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd xi = X.row(i).transpose();
    out[i] = amp * (xi - center).squaredNorm() + linear.dot(xi) +
             0.25 * std::cos(wave * xi.sum());
  }
  return out;
}

/// Random kernel rates in [0.5, 3.5] per coordinate.
inline cbo::KernelParams random_kernel(int d, std::uint64_t seed) {
  cbo::Rng rng(seed, "test_kernel");
  cbo::KernelParams params;
  params.rates = Eigen::VectorXd(d);
  for (int j = 0; j < d; ++j) {
    params.rates[j] = 0.5 + 3.0 * rng.uniform();
  }
  return params;
}

}  // namespace oracles
