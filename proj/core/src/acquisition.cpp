#include "cbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cbo/rng.hpp"

namespace cbo {
namespace {

// Stability thresholds for the closed-form ECI (both tails sit at ~1e-16
// eight standard deviations out).
constexpr double kMillsSwitch = 8.0;
constexpr double kUnderflowCut = -8.0;
// The formula needs |rho| strictly inside (-1, 1); the model-side estimate
// is already clamped to this bound.
constexpr double kRhoCap = 0.999;

}  // namespace

void AcqContext::validate() const {
  if (!std::isfinite(y_min) || !std::isfinite(c)) {
    throw std::invalid_argument("AcqContext: y_min and c must be finite");
  }
}

double ei(double mean, double variance, double y_min) {
  if (!(variance >= 0.0) || !std::isfinite(mean) || !std::isfinite(y_min)) {
    throw std::invalid_argument("ei: variance must be >= 0 and inputs finite");
  }
  const double gap = y_min - mean;
  const double s = std::sqrt(variance);
  if (s <= 0.0) return std::max(gap, 0.0);
  const double u = gap / s;
  const double value = gap * stats::norm_cdf(u) + s * stats::norm_pdf(u);
  return std::max(value, 0.0);
}

double eci_independent(const Posterior& post_y, const Posterior& post_z,
                       const AcqContext& ctx) {
  ctx.validate();
  if (!(post_z.variance >= 0.0)) {
    throw std::invalid_argument("eci_independent: variances must be >= 0");
  }
  const double improvement = ei(post_y.mean, post_y.variance, ctx.y_min);
  double feasibility;
  if (post_z.variance <= 0.0) {
    feasibility = post_z.mean >= ctx.c ? 1.0 : 0.0;
  } else {
    feasibility = stats::norm_cdf((post_z.mean - ctx.c) / std::sqrt(post_z.variance));
  }
  return improvement * feasibility;
}

double eci_bivariate(const BiPosterior& post, const AcqContext& ctx) {
  ctx.validate();
  if (!(post.var_y >= 0.0) || !(post.var_z >= 0.0)) {
    throw std::invalid_argument("eci_bivariate: variances must be >= 0");
  }
  const double sy = std::sqrt(post.var_y);
  const double sz = std::sqrt(post.var_z);
  const double gap = ctx.y_min - post.mean_y;

  // Degenerate posteriors reduce to indicator/marginal limits.
  if (sy <= 0.0 && sz <= 0.0) {
    return post.mean_z >= ctx.c ? std::max(gap, 0.0) : 0.0;
  }
  if (sz <= 0.0) {
    return post.mean_z >= ctx.c ? ei(post.mean_y, post.var_y, ctx.y_min) : 0.0;
  }
  const double b = (ctx.c - post.mean_z) / sz;
  if (sy <= 0.0) {
    return std::max(gap, 0.0) * stats::norm_cdf(-b);
  }

  const double rho = std::clamp(post.rho(), -kRhoCap, kRhoCap);
  const double a = gap / sy;
  // t3 = Phi(a) - Phi2(a, b; rho) is the probability of the
  // improvement-and-feasible rectangle {A <= a, B >= b}; forming it as one
  // upper-rectangle call avoids cancellation between two CDF values.
  const double t3 = stats::bvn_upper(-a, b, -rho);

  // Past the Mills switch the constraint is almost surely satisfied and the
  // ratio is replaced by its leading asymptote b.
  const double mills = b > kMillsSwitch ? b : stats::mills_upper(b);
  const double t1 = gap - rho * sy * mills;
  const double sigma_res = sy * std::sqrt((1.0 - rho) * (1.0 + rho));
  const double q = t1 / sigma_res;
  if (q < kUnderflowCut) return 0.0;
  const double t2 = sigma_res * stats::norm_pdf(q) / stats::norm_cdf(q);
  return std::max((t1 + t2) * t3, 0.0);
}

stats::McEstimate eci_mc_oracle(const BiPosterior& post, const AcqContext& ctx,
                                std::uint64_t samples, std::uint64_t seed) {
  ctx.validate();
  if (!(post.var_y >= 0.0) || !(post.var_z >= 0.0)) {
    throw std::invalid_argument("eci_mc_oracle: variances must be >= 0");
  }
  if (samples < 10000) {
    throw std::invalid_argument("eci_mc_oracle: at least 10^4 samples are required");
  }
  const double sy = std::sqrt(post.var_y);
  const double sz = std::sqrt(post.var_z);
  const double rho = post.rho();
  const double resid = std::sqrt(std::max(0.0, (1.0 - rho) * (1.0 + rho)));

  Rng rng(seed, "eci_mc");
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t accepted = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const auto [u1, u2] = rng.normal_pair();
    const double y_draw = post.mean_y + sy * u1;
    const double z_draw = post.mean_z + sz * (rho * u1 + resid * u2);
    double value = 0.0;
    if (z_draw >= ctx.c) {
      ++accepted;
      value = std::max(0.0, ctx.y_min - y_draw);
    }
    const double count = static_cast<double>(i + 1);
    const double delta = value - mean;
    mean += delta / count;
    m2 += delta * (value - mean);
  }
  stats::McEstimate out;
  out.accepted = accepted;
  out.estimate = mean;
  const double var = samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
  out.std_error = std::sqrt(var / static_cast<double>(samples));
  return out;
}

void OptimizerSettings::validate() const {
  if (candidates < 1 || refine_top < 0 || refine_budget < 0) {
    throw std::invalid_argument(
        "OptimizerSettings: candidates must be >= 1, refine counts >= 0");
  }
  if (refine_top > candidates) {
    throw std::invalid_argument("OptimizerSettings: refine_top must be <= candidates");
  }
}

Eigen::MatrixXd lhs_sample(const Domain& domain, int size, std::uint64_t seed,
                           const char* stream_label) {
  domain.validate();
  if (size < 1) throw std::invalid_argument("lhs_sample: size must be >= 1");
  const int d = domain.dim();
  Rng rng(seed, stream_label);
  Eigen::MatrixXd unit(size, d);
  std::vector<int> strata(static_cast<std::size_t>(size));
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < size; ++i) strata[static_cast<std::size_t>(i)] = i;
    // Fisher-Yates with the shared stream keeps the design reproducible.
    for (int i = size - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i + 1)));
      std::swap(strata[static_cast<std::size_t>(i)], strata[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < size; ++i) {
      unit(i, k) = (static_cast<double>(strata[static_cast<std::size_t>(i)]) +
                    rng.uniform()) /
                   static_cast<double>(size);
    }
  }
  Eigen::MatrixXd points(size, d);
  for (int i = 0; i < size; ++i) {
    points.row(i) = domain.from_unit(unit.row(i).transpose()).transpose();
  }
  return points;
}

AcqOptimum maximize_acquisition(
    const std::function<double(const Eigen::VectorXd&)>& acq, const Domain& domain,
    const OptimizerSettings& settings, std::uint64_t seed) {
  domain.validate();
  settings.validate();
  if (!acq) throw std::invalid_argument("maximize_acquisition: acq must be callable");

  const int d = domain.dim();
  const Eigen::MatrixXd candidates = lhs_sample(domain, settings.candidates, seed,
                                                "acq_candidates");
  Eigen::VectorXd scores(settings.candidates);
  for (int i = 0; i < settings.candidates; ++i) {
    scores[i] = acq(candidates.row(i).transpose());
  }

  // A surface with no variation across the candidate set carries no signal
  // to climb; take the feasibility-guided fallback.
  const double score_min = scores.minCoeff();
  const double score_max = scores.maxCoeff();
  if (!(score_max > score_min)) {
    int pick = 0;
    if (settings.feasibility) {
      double best_feas = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < settings.candidates; ++i) {
        const double f = settings.feasibility(candidates.row(i).transpose());
        if (f > best_feas) {
          best_feas = f;
          pick = i;
        }
      }
    }
    AcqOptimum out;
    out.x = candidates.row(pick).transpose();
    out.value = scores[pick];
    out.fallback = true;
    return out;
  }

  // Rank candidates by score, ties toward the lower index, and keep the top
  // refine_top as polish seeds.
  std::vector<int> order(static_cast<std::size_t>(settings.candidates));
  for (int i = 0; i < settings.candidates; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int lhs, int rhs) { return scores[lhs] > scores[rhs]; });

  AcqOptimum best;
  best.x = candidates.row(order[0]).transpose();
  best.value = scores[order[0]];
  best.fallback = false;

  const Eigen::VectorXd range = domain.upper - domain.lower;
  const int seeds = std::min(settings.refine_top, settings.candidates);
  for (int s = 0; s < seeds; ++s) {
    Eigen::VectorXd point = candidates.row(order[static_cast<std::size_t>(s)]).transpose();
    double value = scores[order[static_cast<std::size_t>(s)]];
    double step = 0.05;
    int evals = 0;
    while (evals < settings.refine_budget && step > 1e-7) {
      bool improved = false;
      for (int k = 0; k < d && evals < settings.refine_budget; ++k) {
        for (double direction : {1.0, -1.0}) {
          if (evals >= settings.refine_budget) break;
          Eigen::VectorXd trial = point;
          trial[k] = std::clamp(point[k] + direction * step * range[k],
                                domain.lower[k], domain.upper[k]);
          if (trial[k] == point[k]) continue;
          const double f = acq(trial);
          ++evals;
          if (f > value) {
            point = trial;
            value = f;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (value > best.value) {
      best.x = point;
      best.value = value;
    }
  }
  return best;
}

}  // namespace cbo
