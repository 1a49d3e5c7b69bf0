#pragma once

#include <cstdint>
#include <optional>

namespace cbo::stats {

/// Standard normal density phi(u).
double norm_pdf(double u);

/// Standard normal distribution function Phi(u), computed through the
/// complementary error function so both tails keep full relative accuracy.
double norm_cdf(double u);

/// Standard bivariate normal orthant-style probability
///   P(X >= h, Y >= k)  with  corr(X, Y) = rho,
/// by Gauss-Legendre quadrature over the correlation parameter (6, 12 or 20
/// nodes chosen by |rho|), with a tail-difference expansion for |rho| close
/// to 1.  Accurate to about 5e-16 absolute over the full parameter range.
/// This is the preferred entry point when the upper-right rectangle
/// probability is wanted directly, since it avoids the cancellation that
/// Phi(a) - bvn_cdf(a, ...) would incur.
///
/// Infinite arguments are honoured exactly; |rho| = 1 uses the degenerate
/// closed forms.  Throws std::invalid_argument if rho is outside [-1, 1].
double bvn_upper(double h, double k, double rho);

/// Standard bivariate normal CDF  P(X <= a, Y <= b)  with corr(X, Y) = rho.
/// Same algorithm and accuracy as bvn_upper (the two are reflections).
double bvn_cdf(double a, double b, double rho);

/// Upper Mills ratio  phi(b) / (1 - Phi(b)).
///
/// For b <= 8 the ratio is formed directly from the erfc-based tail; above 8
/// the tail probability underflows relative accuracy faster than the ratio
/// does, so an asymptotic expansion in inverse odd powers,
///   b + 1/b - 2/b^3 + 10/b^5 - 74/b^7,
/// takes over.  The expansion is carried to the b^-7 term so the relative
/// error at the switch point stays below 1e-6 (5.5e-7 at b = 8, and
/// decreasing in b).  The result is strictly greater than max(0, b) and
/// increasing in b.
double mills_upper(double b);

/// Parameters of a bivariate normal pair (W, V):
/// means, standard deviations, and correlation.
struct BvnParams {
  double mu_w = 0.0;
  double mu_v = 0.0;
  double sigma_w = 1.0;
  double sigma_v = 1.0;
  double rho = 0.0;

  /// Throws std::invalid_argument unless sigma_w > 0, sigma_v > 0, and
  /// |rho| < 1 (the degenerate |rho| = 1 case is rejected), all finite.
  void validate() const;
};

/// Closed-form approximation to the one-sided truncated mean
///   E[ W | W <= w, V >= v ]
/// built from two univariate truncation steps: first V is truncated below at
/// v, shifting W's mean through the regression coefficient and the Mills
/// ratio; then W is truncated above at w as if it were still Gaussian.  The
/// construction is exact at rho = 0 and degrades smoothly as |rho| grows;
/// it is a deliberate single-pass surrogate for the exact doubly-truncated
/// mean, not an unbiased estimator of it.
///
/// Returns an empty optional when the truncation region is so improbable
/// that the final Gaussian factor underflows (Phi(q) < 1e-300); the value is
/// meaningless there and callers must treat the region as numerically empty.
/// Throws std::invalid_argument on invalid parameters or non-finite w, v.
std::optional<double> trunc_bvn_mean(const BvnParams& params, double w, double v);

/// A Monte Carlo estimate with its standard error and the number of samples
/// that landed in the conditioning region.
struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t accepted = 0;
};

/// Monte Carlo reference for the exact truncated mean E[W | W <= w, V >= v]:
/// draws `samples` pairs from the bivariate normal and averages W over the
/// accepted region (rejection sampling).  Deterministic for a fixed
/// (samples, seed) pair on a given platform.  Requires samples >= 10^4.
/// Throws std::runtime_error if the acceptance probability comes out below
/// 1e-6 — the truncation region is then effectively empty and no meaningful
/// estimate exists.
McEstimate mc_trunc_bvn_mean(const BvnParams& params, double w, double v,
                             std::uint64_t samples, std::uint64_t seed);

}  // namespace cbo::stats
