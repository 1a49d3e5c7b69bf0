#include "cbo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "cbo/rng.hpp"

namespace cbo::stats {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kSqrt2 = 1.414213562373095048801688724209698079;
constexpr double kSqrt2Pi = 2.506628274631000502415765284811045253;

/// Gauss-Legendre rules over half the nodes (weights, |abscissae|); each
/// entry is mirrored across the interval midpoint during integration.
struct GlPair {
  double weight;
  double abscissa;
};

constexpr GlPair kGl6[] = {
    {0.1713244923791704, 0.9324695142031521},
    {0.3607615730481386, 0.6612093864662645},
    {0.4679139345726910, 0.2386191860831969},
};

constexpr GlPair kGl12[] = {
    {0.04717533638651183, 0.9815606342467192},
    {0.1069393259953184, 0.9041172563704749},
    {0.1600783285433462, 0.7699026741943047},
    {0.2031674267230659, 0.5873179542866175},
    {0.2334925365383548, 0.3678314989981802},
    {0.2491470458134028, 0.1252334085114689},
};

constexpr GlPair kGl20[] = {
    {0.01761400713915212, 0.9931285991850949},
    {0.04060142980038694, 0.9639719272779138},
    {0.06267204833410906, 0.9122344282513259},
    {0.08327674157670475, 0.8391169718222188},
    {0.1019301198172404, 0.7463319064601508},
    {0.1181945319615184, 0.6360536807265150},
    {0.1316886384491766, 0.5108670019508271},
    {0.1420961093183820, 0.3737060887154195},
    {0.1491729864726037, 0.2277858511416451},
    {0.1527533871307258, 0.0765265211334973},
};

}  // namespace

double norm_pdf(double u) {
  return std::exp(-0.5 * u * u) / kSqrt2Pi;
}

double norm_cdf(double u) {
  if (std::isinf(u)) return u > 0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-u / kSqrt2);
}

double bvn_upper(double h, double k, double r) {
  if (!(std::abs(r) <= 1.0)) {
    throw std::invalid_argument("bvn_upper: correlation must lie in [-1, 1]");
  }
  if (std::isnan(h) || std::isnan(k)) return std::numeric_limits<double>::quiet_NaN();
  // Degenerate and half-infinite rectangles have exact values.
  const double inf = std::numeric_limits<double>::infinity();
  if (h == inf || k == inf) return 0.0;
  if (h == -inf) return norm_cdf(-k);
  if (k == -inf) return norm_cdf(-h);

  const GlPair* rule = kGl6;
  int rule_size = 3;
  if (std::abs(r) >= 0.75) {
    rule = kGl20;
    rule_size = 10;
  } else if (std::abs(r) >= 0.3) {
    rule = kGl12;
    rule_size = 6;
  }

  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    // Quadrature in the angle variable of the correlation path from 0 to r.
    if (std::abs(r) > 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < rule_size; ++i) {
        for (double sign : {-1.0, 1.0}) {
          const double sn = std::sin(asr * (sign * rule[i].abscissa + 1.0) / 2.0);
          bvn += rule[i].weight * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn = bvn * asr / (4.0 * kPi);
    }
    bvn += norm_cdf(-h) * norm_cdf(-k);
    return bvn;
  }

  // |r| >= 0.925: expand about the perfectly correlated limit.  Negative r
  // is reduced to positive r via (Y, k) -> (-Y, -k).
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    double asr = -(bs / as + hk) / 2.0;
    if (asr > -100.0) {
      bvn = a * std::exp(asr) *
            (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    }
    if (-hk < 100.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * kSqrt2Pi * norm_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (int i = 0; i < rule_size; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double xs_root = a * (sign * rule[i].abscissa + 1.0);
        const double xs = xs_root * xs_root;
        const double rs = std::sqrt(1.0 - xs);
        asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          bvn += a * rule[i].weight * std::exp(asr) *
                 (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                  (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
    }
    bvn = -bvn / (2.0 * kPi);
  }
  if (r > 0.0) {
    bvn += norm_cdf(-std::max(h, k));
  } else {
    bvn = -bvn;
    if (k > h) bvn += norm_cdf(k) - norm_cdf(h);
  }
  return std::max(0.0, std::min(1.0, bvn));
}

double bvn_cdf(double a, double b, double rho) {
  return bvn_upper(-a, -b, rho);
}

double mills_upper(double b) {
  if (std::isnan(b)) return b;
  if (b == std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return 0.0;
  if (b <= 8.0) {
    // Tail probability via erfc keeps relative accuracy for all b <= 8.
    return norm_pdf(b) / (0.5 * std::erfc(b / kSqrt2));
  }
  const double inv = 1.0 / b;
  const double inv2 = inv * inv;
  // Asymptotic expansion of the ratio; successive terms alternate and decay
  // like (2j-1)!!/b^(2j+1), so truncation error at b = 8 is below 1e-6
  // relative and shrinks rapidly beyond.
  return b + inv * (1.0 + inv2 * (-2.0 + inv2 * (10.0 - 74.0 * inv2)));
}

void BvnParams::validate() const {
  const bool finite = std::isfinite(mu_w) && std::isfinite(mu_v) &&
                      std::isfinite(sigma_w) && std::isfinite(sigma_v) &&
                      std::isfinite(rho);
  if (!finite) {
    throw std::invalid_argument("BvnParams: parameters must be finite");
  }
  if (!(sigma_w > 0.0) || !(sigma_v > 0.0)) {
    throw std::invalid_argument("BvnParams: standard deviations must be positive");
  }
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("BvnParams: correlation must satisfy |rho| < 1");
  }
}

std::optional<double> trunc_bvn_mean(const BvnParams& params, double w, double v) {
  params.validate();
  if (!std::isfinite(w) || !std::isfinite(v)) {
    throw std::invalid_argument("trunc_bvn_mean: truncation bounds must be finite");
  }
  // Step one: truncating V below at v shifts W's conditional mean through
  // the regression slope rho*sigma_w times the Mills ratio of V's tail.
  const double m = mills_upper((v - params.mu_v) / params.sigma_v);
  const double shifted_mean = params.mu_w + params.rho * params.sigma_w * m;
  // Step two: truncate W above at w, treating the shifted W as Gaussian with
  // the residual standard deviation.
  const double sigma_res = params.sigma_w * std::sqrt(1.0 - params.rho * params.rho);
  const double q = (w - shifted_mean) / sigma_res;
  const double tail = norm_cdf(q);
  if (tail < 1e-300) return std::nullopt;
  return shifted_mean - sigma_res * norm_pdf(q) / tail;
}

McEstimate mc_trunc_bvn_mean(const BvnParams& params, double w, double v,
                             std::uint64_t samples, std::uint64_t seed) {
  params.validate();
  if (!std::isfinite(w) || !std::isfinite(v)) {
    throw std::invalid_argument("mc_trunc_bvn_mean: truncation bounds must be finite");
  }
  if (samples < 10000) {
    throw std::invalid_argument("mc_trunc_bvn_mean: at least 10^4 samples are required");
  }
  Rng rng(seed, "mc_trunc_bvn");
  const double slope = params.rho;
  const double resid = std::sqrt(1.0 - params.rho * params.rho);
  // Accumulate in a numerically stable streaming form (Welford).
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t accepted = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const auto [u1, u2] = rng.normal_pair();
    const double draw_w = params.mu_w + params.sigma_w * u1;
    const double draw_v = params.mu_v + params.sigma_v * (slope * u1 + resid * u2);
    if (draw_w <= w && draw_v >= v) {
      ++accepted;
      const double delta = draw_w - mean;
      mean += delta / static_cast<double>(accepted);
      m2 += delta * (draw_w - mean);
    }
  }
  if (static_cast<double>(accepted) <
      1e-6 * static_cast<double>(samples)) {
    throw std::runtime_error(
        "mc_trunc_bvn_mean: acceptance probability below 1e-6; "
        "the truncation region is effectively empty");
  }
  McEstimate out;
  out.accepted = accepted;
  out.estimate = mean;
  const double var = accepted > 1 ? m2 / static_cast<double>(accepted - 1) : 0.0;
  out.std_error = std::sqrt(var / static_cast<double>(accepted));
  return out;
}

}  // namespace cbo::stats
