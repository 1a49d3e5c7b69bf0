#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "cbo/bigp.hpp"
#include "cbo/gp.hpp"
#include "cbo/kernel.hpp"
#include "cbo/stats.hpp"

namespace cbo {

/// Context shared by all acquisition evaluations at one optimization step:
/// the incumbent objective value and the constraint threshold.  y_min is the
/// minimum objective among feasible observations; when no feasible
/// observation exists yet, callers pass the all-observations minimum and
/// track that state separately.
struct AcqContext {
  double y_min = 0.0;
  double c = 0.0;

  /// Throws std::invalid_argument unless both fields are finite.
  void validate() const;
};

/// Expected improvement of a Gaussian posterior below the incumbent:
///   EI = (y_min - mean) Phi(u) + s phi(u),  u = (y_min - mean)/s,
/// with the degenerate s = 0 limit max(0, y_min - mean).  Always >= 0.
double ei(double mean, double variance, double y_min);

/// Independent-model expected constrained improvement: plain EI on the
/// objective posterior times the probability that the constraint posterior
/// clears the threshold.  A zero-variance constraint posterior contributes
/// an indicator factor.
double eci_independent(const Posterior& post_y, const Posterior& post_z,
                       const AcqContext& ctx);

/// Closed-form expected constrained improvement of the joint bivariate
/// posterior, the product (t1 + t2) * t3 with
///   a  = (y_min - mu_y)/sigma_y,   b = (c - mu_z)/sigma_z,
///   t1 = y_min - mu_y - rho sigma_y mills_upper(b),
///   t2 = sigma_y sqrt(1-rho^2) phi(q)/Phi(q),  q = t1/(sigma_y sqrt(1-rho^2)),
///   t3 = Phi(a) - Phi2(a, b; rho)  (the feasible-improvement rectangle,
///        computed as one upper-rectangle probability so no cancellation),
/// where rho is the posterior correlation.  Stability limits: once b exceeds
/// the Mills switch (8), t1 uses the asymptotic replacement
/// mills_upper(b) -> b; and when q < -8 the value is exactly 0.  Degenerate
/// zero variances reduce to the independent/indicator limits.  The result is
/// clamped at 0.
///
/// At rho = 0 the product factorizes algebraically into eci_independent.
/// For rho != 0, (t1 + t2) inherits the one-pass truncation approximation of
/// trunc_bvn_mean while t3 stays exact; eci_mc_oracle quantifies the gap.
double eci_bivariate(const BiPosterior& post, const AcqContext& ctx);

/// Monte Carlo estimate of the defining expectation
///   E[ max(0, y_min - y) 1{z >= c} ]
/// by direct sampling of the bivariate posterior.  `accepted` counts the
/// draws satisfying the constraint.  Requires samples >= 10^4; deterministic
/// given seed.
stats::McEstimate eci_mc_oracle(const BiPosterior& post, const AcqContext& ctx,
                                std::uint64_t samples, std::uint64_t seed);

/// Settings for maximize_acquisition.  `feasibility`, when provided, guides
/// the fallback taken on an uninformative (constant) acquisition surface:
/// the candidate with the highest feasibility value is returned instead.
/// Without it the fallback returns the first candidate.
struct OptimizerSettings {
  int candidates = 2048;
  int refine_top = 5;
  int refine_budget = 60;
  std::function<double(const Eigen::VectorXd&)> feasibility;

  /// Throws std::invalid_argument unless counts are positive and
  /// refine_top <= candidates.
  void validate() const;
};

/// Result of an acquisition maximization: the chosen point, the acquisition
/// value there, and whether the uninformative-surface fallback fired.
struct AcqOptimum {
  Eigen::VectorXd x;
  double value = 0.0;
  bool fallback = false;
};

/// Maximizes an acquisition over the domain: scores a Latin-hypercube
/// candidate set (default 2048 points), then refines the best `refine_top`
/// candidates by coordinate-wise pattern search with a fixed evaluation
/// budget each, returning the best point seen anywhere.  Deterministic given
/// the seed; ties break toward the earliest-scored point.  If every
/// candidate scores the same value (an uninformative surface — in the ECI
/// use case, identically zero), the feasibility-guided fallback fires
/// instead and the flag is set.
AcqOptimum maximize_acquisition(
    const std::function<double(const Eigen::VectorXd&)>& acq, const Domain& domain,
    const OptimizerSettings& settings, std::uint64_t seed);

/// Plain Latin hypercube sample of `size` points in the domain: each
/// coordinate is stratified into `size` equal bins, hit once each in a
/// seed-determined random order at a random position within the bin.
Eigen::MatrixXd lhs_sample(const Domain& domain, int size, std::uint64_t seed,
                           const char* stream_label = "lhs");

}  // namespace cbo
