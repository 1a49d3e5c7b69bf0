#include "cbo/kernel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "cbo/errors.hpp"

namespace cbo {

Domain::Domain(Eigen::VectorXd lo, Eigen::VectorXd up)
    : lower(std::move(lo)), upper(std::move(up)) {
  validate();
}

Domain Domain::unit(int dim) {
  if (dim <= 0) throw std::invalid_argument("Domain::unit: dimension must be positive");
  return Domain(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

void Domain::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size()) {
    throw std::invalid_argument("Domain: bounds must be non-empty and equally sized");
  }
  if (!lower.allFinite() || !upper.allFinite()) {
    throw std::invalid_argument("Domain: bounds must be finite");
  }
  if (!((upper.array() - lower.array()) > 0.0).all()) {
    throw std::invalid_argument("Domain: lower bound must be strictly below upper bound");
  }
}

bool Domain::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lower.size()) return false;
  return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
}

Eigen::VectorXd Domain::to_unit(const Eigen::VectorXd& x) const {
  if (x.size() != lower.size()) {
    throw std::invalid_argument("Domain::to_unit: dimension mismatch");
  }
  return (x - lower).cwiseQuotient(upper - lower);
}

Eigen::VectorXd Domain::from_unit(const Eigen::VectorXd& u) const {
  if (u.size() != lower.size()) {
    throw std::invalid_argument("Domain::from_unit: dimension mismatch");
  }
  return lower + u.cwiseProduct(upper - lower);
}

void KernelParams::validate() const {
  if (rates.size() == 0) {
    throw std::invalid_argument("KernelParams: at least one rate is required");
  }
  if (!rates.allFinite() || !(rates.array() >= 0.0).all()) {
    throw std::invalid_argument("KernelParams: rates must be non-negative and finite");
  }
  if (!std::isfinite(jitter) || jitter < 0.0 || jitter > 1e-4) {
    throw std::invalid_argument("KernelParams: jitter must lie in [0, 1e-4]");
  }
}

double corr(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
            const KernelParams& params) {
  params.validate();
  if (x1.size() != x2.size() || x1.size() != params.rates.size()) {
    throw std::invalid_argument("corr: dimension mismatch between points and rates");
  }
  const Eigen::ArrayXd diff = (x1 - x2).array();
  return std::exp(-(params.rates.array() * diff.square()).sum());
}

SquaredDistances squared_distances(const Eigen::MatrixXd& X) {
  if (X.rows() == 0 || X.cols() == 0) {
    throw std::invalid_argument("squared_distances: design matrix must be non-empty");
  }
  SquaredDistances out;
  out.n = static_cast<int>(X.rows());
  out.per_dim.reserve(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    const Eigen::VectorXd col = X.col(k);
    Eigen::MatrixXd diff = col.replicate(1, out.n) - col.transpose().replicate(out.n, 1);
    out.per_dim.push_back(diff.array().square().matrix());
  }
  return out;
}

Eigen::MatrixXd corr_from_distances(const SquaredDistances& dist,
                                    const Eigen::VectorXd& rates) {
  if (static_cast<std::size_t>(rates.size()) != dist.per_dim.size()) {
    throw std::invalid_argument("corr_from_distances: rate count does not match cache");
  }
  Eigen::MatrixXd weighted = rates[0] * dist.per_dim[0];
  for (Eigen::Index k = 1; k < rates.size(); ++k) {
    weighted.noalias() += rates[k] * dist.per_dim[static_cast<std::size_t>(k)];
  }
  return (-weighted.array()).exp().matrix();
}

CorrMatrix factorize_corr(Eigen::MatrixXd R, double start_jitter) {
  const int n = static_cast<int>(R.rows());
  constexpr double kLadderBase = 1e-10;
  constexpr double kLadderCap = 1e-4;
  double jitter = start_jitter > 0.0 ? start_jitter : 0.0;
  double applied = 0.0;
  for (;;) {
    if (jitter > 0.0) {
      R.diagonal().array() += (jitter - applied);
      applied = jitter;
    }
    CorrMatrix out;
    out.factor.compute(R);
    if (out.factor.info() == Eigen::Success) {
      out.matrix = std::move(R);
      out.jitter_used = applied;
      const auto& L = out.factor.matrixLLT();
      double log_det = 0.0;
      for (int i = 0; i < n; ++i) log_det += std::log(L(i, i));
      out.log_det = 2.0 * log_det;
      return out;
    }
    if (jitter >= kLadderCap) {
      std::ostringstream msg;
      msg << "correlation matrix is numerically singular even with diagonal jitter "
          << jitter << " (n = " << n << ")";
      throw IllConditionedError(msg.str(), jitter);
    }
    jitter = jitter < kLadderBase ? kLadderBase : jitter * 10.0;
    if (jitter > kLadderCap) jitter = kLadderCap;
  }
}

CorrMatrix corr_matrix(const Eigen::MatrixXd& X, const KernelParams& params) {
  params.validate();
  if (X.cols() != params.rates.size()) {
    throw std::invalid_argument("corr_matrix: design dimension does not match rates");
  }
  const SquaredDistances dist = squared_distances(X);
  return factorize_corr(corr_from_distances(dist, params.rates), params.jitter);
}

Eigen::VectorXd cross_corr_vec(const Eigen::VectorXd& x, const Eigen::MatrixXd& X,
                               const KernelParams& params) {
  params.validate();
  if (x.size() != X.cols() || x.size() != params.rates.size()) {
    throw std::invalid_argument("cross_corr_vec: dimension mismatch");
  }
  Eigen::ArrayXXd diff = X.array().rowwise() - x.transpose().array();
  return (-(diff.square().matrix() * params.rates).array()).exp().matrix();
}

Eigen::MatrixXd kron_cov(double sigma2_y, double sigma2_z, double rho,
                         const Eigen::MatrixXd& R) {
  if (!(sigma2_y > 0.0) || !(sigma2_z > 0.0) || !std::isfinite(sigma2_y) ||
      !std::isfinite(sigma2_z)) {
    throw std::invalid_argument("kron_cov: variances must be positive and finite");
  }
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("kron_cov: correlation must satisfy |rho| < 1");
  }
  const Eigen::Index n = R.rows();
  if (n == 0 || R.cols() != n) {
    throw std::invalid_argument("kron_cov: R must be square and non-empty");
  }
  const double cross = rho * std::sqrt(sigma2_y) * std::sqrt(sigma2_z);
  Eigen::MatrixXd out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = sigma2_y * R;
  out.topRightCorner(n, n) = cross * R;
  out.bottomLeftCorner(n, n) = cross * R;
  out.bottomRightCorner(n, n) = sigma2_z * R;
  return out;
}

}  // namespace cbo
