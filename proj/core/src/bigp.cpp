#include "cbo/bigp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbo {
namespace {

constexpr double kLog2Pi = 1.837877066409345483560659472811235279;
constexpr double kRhoBound = 0.999;
constexpr int kRhoGridPoints = 41;
constexpr int kRhoGoldenIters = 60;

/// Log-likelihood in rho with means and variances fixed, written in terms of
/// the cached quadratic forms A = y_res^T R^{-1} y_res, B likewise for z,
/// and C the cross form.  Each evaluation is O(1), which is what lets the
/// grid-plus-golden search run at negligible cost.
double rho_loglik_cached(double A, double B, double C, double sigma2_y,
                         double sigma2_z, double rho, int n, double log_det_r) {
  const double omr2 = (1.0 - rho) * (1.0 + rho);
  const double quad =
      (A / sigma2_y - 2.0 * rho * C / std::sqrt(sigma2_y * sigma2_z) + B / sigma2_z) /
      omr2;
  return -n * kLog2Pi - 0.5 * n * std::log(sigma2_y * sigma2_z * omr2) - log_det_r -
         0.5 * quad;
}

}  // namespace

void BiGpParams::validate() const {
  if (!std::isfinite(mu_y) || !std::isfinite(mu_z)) {
    throw std::invalid_argument("BiGpParams: means must be finite");
  }
  if (!(sigma2_y > 0.0) || !(sigma2_z > 0.0) || !std::isfinite(sigma2_y) ||
      !std::isfinite(sigma2_z)) {
    throw std::invalid_argument("BiGpParams: variances must be positive and finite");
  }
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("BiGpParams: correlation must satisfy |rho| < 1");
  }
}

double joint_loglik(const BiGpParams& params, const CorrMatrix& R,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
  params.validate();
  const int n = R.n();
  if (y.size() != n || z.size() != n) {
    throw std::invalid_argument("joint_loglik: observation length must match R");
  }
  const Eigen::VectorXd y_res = (y.array() - params.mu_y).matrix();
  const Eigen::VectorXd z_res = (z.array() - params.mu_z).matrix();
  const Eigen::VectorXd r_inv_y = R.solve(y_res);
  const Eigen::VectorXd r_inv_z = R.solve(z_res);
  const double A = y_res.dot(r_inv_y);
  const double B = z_res.dot(r_inv_z);
  const double C = y_res.dot(r_inv_z);
  return rho_loglik_cached(A, B, C, params.sigma2_y, params.sigma2_z, params.rho, n,
                           R.log_det);
}

double rho_closed_form(const Dataset& data, double mu_y, double mu_z,
                       double sigma2_y, double sigma2_z, const CorrMatrix& R) {
  data.validate();
  if (!(sigma2_y > 0.0) || !(sigma2_z > 0.0)) {
    throw std::invalid_argument("rho_closed_form: variances must be positive");
  }
  if (R.n() != data.n()) {
    throw std::invalid_argument("rho_closed_form: R does not match the data");
  }
  const Eigen::VectorXd y_res = (data.y.array() - mu_y).matrix();
  const Eigen::VectorXd z_res = (data.z.array() - mu_z).matrix();
  const double C = y_res.dot(R.solve(z_res));
  return C / (static_cast<double>(data.n()) * std::sqrt(sigma2_y) * std::sqrt(sigma2_z));
}

BiGpModel fit_bigp(const Dataset& data, const KernelParams& kernel) {
  data.validate();
  kernel.validate();
  if (data.n() < 3) {
    throw std::invalid_argument("fit_bigp: at least three design rows are required");
  }
  if (data.dim() != kernel.rates.size()) {
    throw std::invalid_argument("fit_bigp: design dimension does not match rates");
  }

  BiGpModel model;
  model.kernel = kernel;
  model.X = data.X;
  model.y = data.y;
  model.z = data.z;
  model.R = corr_matrix(data.X, kernel);

  const int n = data.n();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  model.r_inv_one = model.R.solve(ones);
  model.one_r_one = ones.dot(model.r_inv_one);

  // Generalized-least-squares means per output on the shared structure.
  model.mu_y_hat = model.r_inv_one.dot(data.y) / model.one_r_one;
  model.mu_z_hat = model.r_inv_one.dot(data.z) / model.one_r_one;

  const Eigen::VectorXd y_res = (data.y.array() - model.mu_y_hat).matrix();
  const Eigen::VectorXd z_res = (data.z.array() - model.mu_z_hat).matrix();
  const Eigen::VectorXd r_inv_y = model.R.solve(y_res);
  const Eigen::VectorXd r_inv_z = model.R.solve(z_res);
  const double A = y_res.dot(r_inv_y);
  const double B = z_res.dot(r_inv_z);
  const double C = y_res.dot(r_inv_z);

  model.sigma2_y_hat = std::max(A, 0.0) / n;
  model.sigma2_z_hat = std::max(B, 0.0) / n;
  model.alpha_y = r_inv_y;
  model.alpha_z = r_inv_z;
  model.clamp_counter = std::make_shared<std::atomic<std::int64_t>>(0);

  if (!(model.sigma2_y_hat > 0.0) || !(model.sigma2_z_hat > 0.0)) {
    // An output with zero residual variance carries no correlation signal;
    // the likelihood is degenerate in rho, so take the uncorrelated value.
    model.rho_hat = 0.0;
    model.rho_fallback = true;
    model.loglik = -std::numeric_limits<double>::infinity();
    return model;
  }

  // Maximize the likelihood in rho alone over [-0.999, 0.999]: coarse grid
  // seed, then golden-section refinement of the winning bracket.  With the
  // concentrated variances the evaluations reduce to arithmetic on A, B, C.
  const auto objective = [&](double rho) {
    return rho_loglik_cached(A, B, C, model.sigma2_y_hat, model.sigma2_z_hat, rho, n,
                             model.R.log_det);
  };
  int best_idx = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kRhoGridPoints; ++i) {
    const double rho = -kRhoBound + 2.0 * kRhoBound * i / (kRhoGridPoints - 1);
    const double val = objective(rho);
    if (val > best_val) {
      best_val = val;
      best_idx = i;
    }
  }
  const double step = 2.0 * kRhoBound / (kRhoGridPoints - 1);
  double lo = -kRhoBound + step * std::max(0, best_idx - 1);
  double hi = -kRhoBound + step * std::min(kRhoGridPoints - 1, best_idx + 1);
  constexpr double kInvPhi = 0.618033988749894848204586834365638118;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  for (int i = 0; i < kRhoGoldenIters; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = objective(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = objective(x1);
    }
  }
  model.rho_hat = f1 >= f2 ? x1 : x2;
  model.loglik = std::max(f1, f2);
  model.rho_fallback = false;
  return model;
}

double BiPosterior::rho() const {
  if (!(var_y > 0.0) || !(var_z > 0.0)) return 0.0;
  const double raw = cov_yz / std::sqrt(var_y * var_z);
  return std::clamp(raw, -1.0, 1.0);
}

BiPosterior bigp_posterior(const BiGpModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.X.cols()) {
    throw std::invalid_argument("bigp_posterior: point dimension mismatch");
  }
  const Eigen::VectorXd r = cross_corr_vec(x, model.X, model.kernel);
  const double k = variance_factor(model.R, r, model.r_inv_one, model.one_r_one,
                                   model.clamp_counter.get());
  BiPosterior post;
  post.mean_y = model.mu_y_hat + r.dot(model.alpha_y);
  post.mean_z = model.mu_z_hat + r.dot(model.alpha_z);
  post.var_y = model.sigma2_y_hat * k;
  post.var_z = model.sigma2_z_hat * k;
  post.cov_yz = model.rho_hat *
                std::sqrt(model.sigma2_y_hat * model.sigma2_z_hat) * k;
  return post;
}

}  // namespace cbo
