#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

namespace cbo {

/// Hyper-rectangular design region [lower_1, upper_1] x ... x [lower_d, upper_d].
/// Surrogate models operate on the unit-cube image of the region; the
/// to_unit/from_unit maps are the bridge between model space and the space in
/// which objective and constraint are evaluated.
struct Domain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Domain() = default;
  Domain(Eigen::VectorXd lo, Eigen::VectorXd up);

  /// The unit cube [0, 1]^d.
  static Domain unit(int dim);

  int dim() const { return static_cast<int>(lower.size()); }

  /// Throws std::invalid_argument unless both bounds are finite, equally
  /// sized, non-empty, and lower < upper holds coordinate-wise.
  void validate() const;

  /// True when x lies inside the region, allowing `tol` slack per coordinate.
  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

  /// Affine map of x into the unit cube.
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;

  /// Inverse of to_unit.
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
};

/// Squared-exponential correlation hyperparameters: one non-negative rate
/// (inverse-squared-lengthscale weight) per input coordinate plus the
/// starting diagonal jitter for factorization.  A zero rate makes the kernel
/// constant along that coordinate.
struct KernelParams {
  Eigen::VectorXd rates;
  double jitter = 1e-10;

  /// Throws std::invalid_argument unless every rate is non-negative and
  /// finite and the jitter lies in [0, 1e-4].
  void validate() const;
};

/// Squared-exponential correlation of two points:
///   exp(-sum_k rates_k * (x1_k - x2_k)^2).
/// Throws std::invalid_argument on dimension mismatch or invalid params.
double corr(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
            const KernelParams& params);

/// A factorized n x n correlation matrix.  `matrix` already contains the
/// jitter that made the Cholesky succeed, so matrix = L L^T exactly.
struct CorrMatrix {
  Eigen::MatrixXd matrix;
  Eigen::LLT<Eigen::MatrixXd> factor;
  double jitter_used = 0.0;
  double log_det = 0.0;

  int n() const { return static_cast<int>(matrix.rows()); }

  /// Solves (R + jitter I) x = rhs.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return factor.solve(rhs); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return factor.solve(rhs); }

  /// Quadratic form a^T R^{-1} b.
  double quad_form(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(factor.solve(b));
  }
};

/// Builds and factorizes the correlation matrix of the rows of X (one design
/// point per row).  If the Cholesky factorization fails, the diagonal jitter
/// escalates tenfold per attempt, from max(params.jitter, 1e-10) up to 1e-4;
/// exhausting the ladder throws IllConditionedError.  The jitter that
/// succeeded is recorded in the result.
CorrMatrix corr_matrix(const Eigen::MatrixXd& X, const KernelParams& params);

/// Correlation vector between one point and each row of X:
///   r_i = corr(x, X.row(i)).
Eigen::VectorXd cross_corr_vec(const Eigen::VectorXd& x, const Eigen::MatrixXd& X,
                               const KernelParams& params);

/// Dense 2n x 2n separable covariance
///   [ sigma2_y R          rho sy sz R ]
///   [ rho sy sz R         sigma2_z R  ]
/// with sy = sqrt(sigma2_y), sz = sqrt(sigma2_z).  Exposed for exact dense
/// cross-checks of the structured bivariate computations.  Throws
/// std::invalid_argument unless both variances are positive and |rho| < 1.
Eigen::MatrixXd kron_cov(double sigma2_y, double sigma2_z, double rho,
                         const Eigen::MatrixXd& R);

/// Per-coordinate matrices of squared coordinate differences of the rows of
/// X.  Hyperparameter search refits the same design under many candidate
/// rates; precomputing these once turns each correlation-matrix rebuild into
/// a weighted sum plus one exp() pass.
struct SquaredDistances {
  std::vector<Eigen::MatrixXd> per_dim;
  int n = 0;
};

SquaredDistances squared_distances(const Eigen::MatrixXd& X);

/// Correlation matrix (without jitter) from cached squared distances.
Eigen::MatrixXd corr_from_distances(const SquaredDistances& dist,
                                    const Eigen::VectorXd& rates);

/// Factorizes a correlation matrix produced by corr_from_distances, applying
/// the same jitter-escalation ladder as corr_matrix.
CorrMatrix factorize_corr(Eigen::MatrixXd R, double start_jitter);

}  // namespace cbo
