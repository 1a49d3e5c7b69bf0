#include "cbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cbo/errors.hpp"

namespace cbo {
namespace {

constexpr double kLog2Pi = 1.837877066409345483560659472811235279;

// Hyperparameter search box and schedule (log10 of the rates).
constexpr double kLogRateMin = -3.0;
constexpr double kLogRateMax = 3.0;
constexpr int kScanPoints = 7;
constexpr int kGoldenIters = 10;
constexpr int kSweeps = 2;

/// Concentrated (profile) log-likelihood pieces for one output on a fixed
/// factorized correlation matrix: the GLS mean and the MLE variance.
struct ProfileFit {
  double mu = 0.0;
  double sigma2 = 0.0;
};

ProfileFit profile_fit(const CorrMatrix& R, const Eigen::VectorXd& obs,
                       const Eigen::VectorXd& r_inv_one, double one_r_one) {
  const Eigen::VectorXd r_inv_obs = R.solve(obs);
  const double one_r_obs = r_inv_one.dot(obs);
  ProfileFit fit;
  fit.mu = one_r_obs / one_r_one;
  // (obs - mu 1)^T R^{-1} (obs - mu 1) expanded so only the two solves above
  // are needed.
  const double quad = obs.dot(r_inv_obs) - one_r_obs * one_r_obs / one_r_one;
  fit.sigma2 = std::max(quad, 0.0) / static_cast<double>(obs.size());
  return fit;
}

/// Profile log-likelihood of one output given the factorized correlation:
///   -n/2 (log 2pi + 1) - n/2 log sigma2_hat - 1/2 log|R|.
double profile_loglik_term(const CorrMatrix& R, double sigma2, int n) {
  if (!(sigma2 > 0.0)) return -std::numeric_limits<double>::infinity();
  return -0.5 * n * (kLog2Pi + 1.0) - 0.5 * n * std::log(sigma2) - 0.5 * R.log_det;
}

/// Objective for rate search: summed profile log-likelihood of the outputs
/// under one shared correlation matrix.  Returns -inf when the candidate is
/// numerically unusable.
double rates_objective(const SquaredDistances& dist,
                       const std::vector<const Eigen::VectorXd*>& outputs,
                       const Eigen::VectorXd& log10_rates) {
  const Eigen::VectorXd rates = Eigen::pow(10.0, log10_rates.array());
  CorrMatrix R;
  try {
    R = factorize_corr(corr_from_distances(dist, rates), 1e-10);
  } catch (const IllConditionedError&) {
    return -std::numeric_limits<double>::infinity();
  }
  const int n = dist.n;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd r_inv_one = R.solve(ones);
  const double one_r_one = ones.dot(r_inv_one);
  if (!(one_r_one > 0.0)) return -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const Eigen::VectorXd* obs : outputs) {
    const ProfileFit fit = profile_fit(R, *obs, r_inv_one, one_r_one);
    total += profile_loglik_term(R, fit.sigma2, n);
  }
  return total;
}

/// Golden-section maximization of f on [lo, hi]; returns the best abscissa.
template <typename F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, int iters) {
  constexpr double kInvPhi = 0.618033988749894848204586834365638118;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

KernelEstimate search_rates(const Eigen::MatrixXd& X,
                            const std::vector<const Eigen::VectorXd*>& outputs,
                            const std::vector<double>& starts) {
  if (X.rows() < X.cols() + 2) {
    throw std::invalid_argument("kernel estimation requires at least d + 2 design rows");
  }
  if (starts.empty()) {
    throw std::invalid_argument("kernel estimation requires at least one start point");
  }
  for (const Eigen::VectorXd* obs : outputs) {
    if (obs->size() != X.rows()) {
      throw std::invalid_argument("kernel estimation: observation length mismatch");
    }
    if (!obs->allFinite()) {
      throw std::invalid_argument("kernel estimation: observations must be finite");
    }
  }
  const SquaredDistances dist = squared_distances(X);
  const int d = static_cast<int>(X.cols());

  Eigen::VectorXd best_v;
  double best_f = -std::numeric_limits<double>::infinity();

  for (double start : starts) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(d, start);
    double fv = rates_objective(dist, outputs, v);
    for (int sweep = 0; sweep < kSweeps; ++sweep) {
      for (int k = 0; k < d; ++k) {
        auto slice = [&](double t) {
          Eigen::VectorXd probe = v;
          probe[k] = t;
          return rates_objective(dist, outputs, probe);
        };
        // Coarse scan of the full range, seeded with the incumbent, then a
        // golden-section polish of the winning neighbourhood.
        double scan_best_t = v[k];
        double scan_best_f = fv;
        for (int s = 0; s < kScanPoints; ++s) {
          const double t = kLogRateMin + (kLogRateMax - kLogRateMin) * s /
                                             static_cast<double>(kScanPoints - 1);
          const double ft = slice(t);
          if (ft > scan_best_f) {
            scan_best_f = ft;
            scan_best_t = t;
          }
        }
        const double lo = std::max(kLogRateMin, scan_best_t - 1.0);
        const double hi = std::min(kLogRateMax, scan_best_t + 1.0);
        const auto [t_ref, f_ref] = golden_max(slice, lo, hi, kGoldenIters);
        if (f_ref >= scan_best_f) {
          scan_best_t = t_ref;
          scan_best_f = f_ref;
        }
        if (scan_best_f > fv) {
          v[k] = scan_best_t;
          fv = scan_best_f;
        }
      }
    }
    if (fv > best_f) {
      best_f = fv;
      best_v = v;
    }
  }

  KernelEstimate out;
  if (!std::isfinite(best_f)) {
    // Nothing factorized anywhere on the grid: fall back to the isotropic
    // default so the caller can still proceed (flagged).
    out.kernel.rates = Eigen::VectorXd::Ones(d);
    out.fallback = true;
    out.loglik = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.kernel.rates = Eigen::pow(10.0, best_v.array());
  out.fallback = false;
  out.loglik = best_f;
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (X.rows() == 0 || X.cols() == 0) {
    throw std::invalid_argument("Dataset: design matrix must be non-empty");
  }
  if (y.size() != X.rows() || z.size() != X.rows()) {
    throw std::invalid_argument("Dataset: y and z must have one entry per design row");
  }
  if (!X.allFinite() || !y.allFinite() || !z.allFinite()) {
    throw std::invalid_argument("Dataset: entries must be finite");
  }
}

UniGpModel fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& obs,
                  const KernelParams& kernel) {
  kernel.validate();
  if (X.rows() < 1) {
    throw std::invalid_argument("fit_gp: at least one design row is required");
  }
  if (obs.size() != X.rows()) {
    throw std::invalid_argument("fit_gp: observation length must match design rows");
  }
  if (X.cols() != kernel.rates.size()) {
    throw std::invalid_argument("fit_gp: design dimension does not match rates");
  }
  if (!X.allFinite() || !obs.allFinite()) {
    throw std::invalid_argument("fit_gp: design and observations must be finite");
  }

  UniGpModel model;
  model.kernel = kernel;
  model.X = X;
  model.obs = obs;
  model.R = corr_matrix(X, kernel);

  const int n = static_cast<int>(X.rows());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  model.r_inv_one = model.R.solve(ones);
  model.one_r_one = ones.dot(model.r_inv_one);
  const ProfileFit fit = profile_fit(model.R, obs, model.r_inv_one, model.one_r_one);
  model.mu_hat = fit.mu;
  model.sigma2_hat = fit.sigma2;
  const Eigen::VectorXd residual = obs.array() - fit.mu;
  model.alpha = model.R.solve(residual);
  model.loglik = profile_loglik_term(model.R, fit.sigma2, n);
  model.clamp_counter = std::make_shared<std::atomic<std::int64_t>>(0);
  return model;
}

double variance_factor(const CorrMatrix& R, const Eigen::VectorXd& r,
                       const Eigen::VectorXd& r_inv_one, double one_r_one,
                       std::atomic<std::int64_t>* clamps) {
  // One forward-triangular solve gives r^T R^{-1} r; the mean-estimation
  // term reuses the cached R^{-1} 1.
  const Eigen::VectorXd u = R.factor.matrixL().solve(r);
  const double r_r_r = u.squaredNorm();
  const double one_r_r = r_inv_one.dot(r);
  const double defect = 1.0 - one_r_r;
  const double k = 1.0 - r_r_r + defect * defect / one_r_one;
  if (k < 0.0) {
    if (clamps != nullptr) clamps->fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  return k;
}

Posterior gp_posterior(const UniGpModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.X.cols()) {
    throw std::invalid_argument("gp_posterior: point dimension mismatch");
  }
  const Eigen::VectorXd r = cross_corr_vec(x, model.X, model.kernel);
  Posterior post;
  post.mean = model.mu_hat + r.dot(model.alpha);
  const double k = variance_factor(model.R, r, model.r_inv_one, model.one_r_one,
                                   model.clamp_counter.get());
  post.variance = model.sigma2_hat * k;
  return post;
}

const std::vector<double>& default_rate_starts() {
  static const std::vector<double> starts = {-2.5, -1.5, -0.75, -0.25,
                                             0.25,  0.75, 1.5,   2.5};
  return starts;
}

KernelEstimate estimate_kernel(const Eigen::MatrixXd& X, const Eigen::VectorXd& obs) {
  return search_rates(X, {&obs}, default_rate_starts());
}

KernelEstimate estimate_kernel(const Eigen::MatrixXd& X, const Eigen::VectorXd& obs,
                               const std::vector<double>& log10_starts) {
  return search_rates(X, {&obs}, log10_starts);
}

KernelEstimate estimate_kernel_shared(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& z) {
  return search_rates(X, {&y, &z}, default_rate_starts());
}

KernelEstimate estimate_kernel_shared(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& z,
                                      const std::vector<double>& log10_starts) {
  return search_rates(X, {&y, &z}, log10_starts);
}

}  // namespace cbo
