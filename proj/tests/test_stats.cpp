#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "cbo/rng.hpp"
#include "cbo/stats.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace cbo::stats;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Exact mean of W | W <= w, V >= v for the bivariate normal, via the
/// closed-form first partial moment (reference for the one-pass
/// approximation and the MC estimator).
double exact_trunc_mean(const BvnParams& p, double w, double v) {
  const double a = (w - p.mu_w) / p.sigma_w;
  const double b = (v - p.mu_v) / p.sigma_v;
  const double s = std::sqrt(1.0 - p.rho * p.rho);
  const double prob = bvn_upper(-a, b, -p.rho);
  const double partial = -norm_pdf(a) * (1.0 - norm_cdf((b - p.rho * a) / s)) +
                         p.rho * norm_pdf(b) * norm_cdf((a - p.rho * b) / s);
  return p.mu_w + p.sigma_w * partial / prob;
}
}  // namespace

TEST_CASE("normal pdf and cdf reference values", "[stats]") {
  CHECK_THAT(norm_pdf(0.0), WithinAbs(0.3989422804014327, 1e-16));
  CHECK_THAT(norm_pdf(1.0), WithinAbs(0.24197072451914335, 1e-16));
  CHECK(norm_cdf(0.0) == 0.5);
  CHECK_THAT(norm_cdf(1.96), WithinAbs(0.9750021048517796, 1e-15));
  CHECK_THAT(norm_cdf(-1.96), WithinAbs(1.0 - 0.9750021048517796, 1e-15));

  SECTION("tails and limits") {
    CHECK(norm_cdf(-kInf) == 0.0);
    CHECK(norm_cdf(kInf) == 1.0);
    CHECK(norm_pdf(40.0) == 0.0);  // underflows cleanly
    CHECK(norm_cdf(-37.0) > 0.0);  // erfc keeps the far tail alive
    CHECK(norm_cdf(-37.0) < 1e-290);
    CHECK(norm_cdf(-40.0) == 0.0);  // below the smallest subnormal
  }

  SECTION("symmetry") {
    for (double u : {0.1, 0.7, 1.3, 2.9, 5.5}) {
      CHECK_THAT(norm_cdf(u) + norm_cdf(-u), WithinAbs(1.0, 1e-15));
      CHECK(norm_pdf(u) == norm_pdf(-u));
    }
  }
}

TEST_CASE("bivariate normal cdf reference values", "[stats]") {
  // Frozen from a 50-digit numerical integration of the density.
  CHECK_THAT(bvn_cdf(0.5, -0.3, 0.7), WithinAbs(0.3567836347968547, 5e-15));
  CHECK_THAT(bvn_cdf(1.2, 0.4, -0.6), WithinAbs(0.5455316189362326, 5e-15));
  CHECK_THAT(bvn_cdf(-0.75, 0.6, 0.95), WithinAbs(0.22662708550876256, 5e-15));
  CHECK_THAT(bvn_cdf(2.0, 2.0, 0.99), WithinAbs(0.9742113787523105, 5e-15));
  CHECK_THAT(bvn_cdf(0.3, -0.3, 0.5), WithinAbs(0.3096009976964691, 5e-15));

  SECTION("arcsine identity at the origin") {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (double rho : {-0.95, -0.5, 0.0, 0.5, 0.95}) {
      const double expected = 0.25 + std::asin(rho) / kTwoPi;
      CHECK_THAT(bvn_cdf(0.0, 0.0, rho), WithinAbs(expected, 1e-13));
    }
  }

  SECTION("independence factorizes exactly") {
    for (double a : {-2.0, -0.3, 0.0, 0.8, 2.5}) {
      for (double b : {-1.7, 0.0, 0.4, 3.0}) {
        CHECK(bvn_cdf(a, b, 0.0) == norm_cdf(a) * norm_cdf(b));
      }
    }
  }

  SECTION("perfect correlation limits") {
    for (double a : {-1.5, -0.2, 0.6, 2.0}) {
      for (double b : {-0.9, 0.3, 1.8}) {
        CHECK_THAT(bvn_cdf(a, b, 1.0), WithinAbs(norm_cdf(std::min(a, b)), 1e-15));
        const double lower = std::max(0.0, norm_cdf(a) + norm_cdf(b) - 1.0);
        CHECK_THAT(bvn_cdf(a, b, -1.0), WithinAbs(lower, 1e-15));
      }
    }
  }

  SECTION("infinite arguments") {
    CHECK(bvn_cdf(kInf, kInf, 0.4) == 1.0);
    CHECK(bvn_cdf(-kInf, 0.3, 0.4) == 0.0);
    CHECK(bvn_cdf(kInf, 0.3, -0.8) == norm_cdf(0.3));
    CHECK(bvn_upper(-kInf, -kInf, 0.2) == 1.0);
    CHECK(bvn_upper(0.7, -kInf, 0.2) == norm_cdf(-0.7));
  }

  SECTION("upper rectangle complements the cdf") {
    cbo::Rng rng(20240817, "bvn_complement");
    for (int i = 0; i < 200; ++i) {
      const double a = 6.0 * rng.uniform() - 3.0;
      const double b = 6.0 * rng.uniform() - 3.0;
      const double rho = 1.98 * rng.uniform() - 0.99;
      // P(X<=a) + P(Y<=b) - P(both<=) + P(both>) = 1
      const double total =
          norm_cdf(a) + norm_cdf(b) - bvn_cdf(a, b, rho) + bvn_upper(a, b, rho);
      CHECK_THAT(total, WithinAbs(1.0, 1e-13));
    }
  }

  SECTION("Frechet bounds on randomized arguments") {
    cbo::Rng rng(911, "bvn_frechet");
    for (int i = 0; i < 500; ++i) {
      const double a = 8.0 * rng.uniform() - 4.0;
      const double b = 8.0 * rng.uniform() - 4.0;
      const double rho = 2.0 * rng.uniform() - 1.0;
      const double p = bvn_cdf(a, b, rho);
      const double lo = std::max(0.0, norm_cdf(a) + norm_cdf(b) - 1.0);
      const double hi = std::min(norm_cdf(a), norm_cdf(b));
      CHECK(p >= lo - 1e-13);
      CHECK(p <= hi + 1e-13);
    }
  }

  SECTION("rejects correlation outside [-1, 1] and propagates NaN") {
    CHECK_THROWS_AS(bvn_cdf(0.0, 0.0, 1.0000001), std::invalid_argument);
    CHECK_THROWS_AS(bvn_upper(0.0, 0.0, -1.5), std::invalid_argument);
    CHECK(std::isnan(bvn_cdf(kNaN, 0.0, 0.3)));
    CHECK(std::isnan(bvn_cdf(0.2, kNaN, 0.3)));
  }
}

TEST_CASE("mills ratio accuracy and tails", "[stats]") {
  CHECK_THAT(mills_upper(0.0), WithinAbs(0.7978845608028654, 1e-15));
  CHECK_THAT(mills_upper(8.0), WithinRel(8.121368112236113, 1e-12));
  CHECK_THAT(mills_upper(10.0), WithinRel(10.098093233962512, 1e-6));
  CHECK_THAT(mills_upper(-2.0), WithinRel(norm_pdf(2.0) / norm_cdf(2.0), 1e-13));

  SECTION("continuity across the asymptotic switch") {
    const double below = mills_upper(8.0 - 1e-9);
    const double above = mills_upper(8.0 + 1e-9);
    CHECK_THAT(above, WithinRel(below, 1e-6));
  }

  SECTION("dominates b and increases") {
    double prev = 0.0;
    for (double b = -6.0; b <= 12.0; b += 0.25) {
      const double m = mills_upper(b);
      CHECK(m > std::max(0.0, b));
      CHECK(m > prev);
      prev = m;
    }
  }

  SECTION("limits") {
    CHECK(mills_upper(-kInf) == 0.0);
    CHECK(mills_upper(kInf) == kInf);
  }
}

TEST_CASE("one-pass truncated mean formula", "[stats]") {
  SECTION("frozen standard-normal fixtures") {
    BvnParams p{0.0, 0.0, 1.0, 1.0, 0.5};
    const auto v1 = trunc_bvn_mean(p, 0.5, -0.2);
    REQUIRE(v1.has_value());
    CHECK_THAT(*v1, WithinAbs(-0.2534554522834222, 1e-13));

    p.rho = 0.8;
    const auto v2 = trunc_bvn_mean(p, 1.0, 0.0);
    REQUIRE(v2.has_value());
    CHECK_THAT(*v2, WithinAbs(0.36364169798935394, 1e-13));
  }

  SECTION("exact when the outputs are uncorrelated") {
    const BvnParams p{0.0, 3.0, 1.0, 2.0, 0.0};
    const auto v = trunc_bvn_mean(p, 0.0, 1.0);
    REQUIRE(v.has_value());
    // Reduces to the one-dimensional truncated mean -phi(0)/Phi(0).
    CHECK_THAT(*v, WithinAbs(-0.7978845608028654, 1e-14));
    CHECK_THAT(*v, WithinAbs(exact_trunc_mean(p, 0.0, 1.0), 1e-13));
  }

  SECTION("approximation gap grows with |rho| and stays bounded") {
    cbo::Rng rng(4451, "trunc_gap");
    for (int i = 0; i < 50; ++i) {
      BvnParams p;
      p.mu_w = 2.0 * rng.uniform() - 1.0;
      p.mu_v = 2.0 * rng.uniform() - 1.0;
      p.sigma_w = 0.5 + rng.uniform();
      p.sigma_v = 0.5 + rng.uniform();
      p.rho = 1.8 * rng.uniform() - 0.9;
      const double w = p.mu_w + (2.0 * rng.uniform() - 0.5) * p.sigma_w;
      const double v = p.mu_v + (1.0 * rng.uniform() - 0.5) * p.sigma_v;
      const auto approx = trunc_bvn_mean(p, w, v);
      REQUIRE(approx.has_value());
      const double exact = exact_trunc_mean(p, w, v);
      CHECK_THAT(*approx, WithinAbs(exact, 0.5 * std::abs(p.rho) * p.sigma_w + 1e-9));
    }
  }

  SECTION("far-tail conditioning reports no mass") {
    const BvnParams p{0.0, 0.0, 1.0, 1.0, 0.3};
    CHECK_FALSE(trunc_bvn_mean(p, -40.0, 0.0).has_value());
  }

  SECTION("validation") {
    BvnParams bad{0.0, 0.0, -1.0, 1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = BvnParams{0.0, 0.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    const BvnParams ok{0.0, 0.0, 1.0, 1.0, 0.0};
    CHECK_THROWS_AS(trunc_bvn_mean(ok, kNaN, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(trunc_bvn_mean(ok, 0.0, kInf), std::invalid_argument);
  }
}

TEST_CASE("monte carlo truncated mean estimator", "[stats]") {
  const BvnParams p{0.2, -0.3, 1.69, 0.64, 0.5};

  SECTION("agrees with the exact moment within four standard errors") {
    const double w = 0.6;
    const double v = -0.5;
    const auto mc = mc_trunc_bvn_mean(p, w, v, 200000, 99);
    CHECK(mc.accepted > 0);
    const double exact = exact_trunc_mean(p, w, v);
    CHECK_THAT(mc.estimate, WithinAbs(exact, 4.0 * mc.std_error));
  }

  SECTION("deterministic given the seed") {
    const auto a = mc_trunc_bvn_mean(p, 0.6, -0.5, 20000, 7);
    const auto b = mc_trunc_bvn_mean(p, 0.6, -0.5, 20000, 7);
    CHECK(a.estimate == b.estimate);
    CHECK(a.accepted == b.accepted);
    const auto c = mc_trunc_bvn_mean(p, 0.6, -0.5, 20000, 8);
    CHECK(a.estimate != c.estimate);
  }

  SECTION("requires a sample budget and some acceptance mass") {
    CHECK_THROWS_AS(mc_trunc_bvn_mean(p, 0.6, -0.5, 9999, 1), std::invalid_argument);
    // Conditioning event with essentially zero probability.
    CHECK_THROWS_AS(mc_trunc_bvn_mean(p, -60.0, -0.5, 10000, 1), std::runtime_error);
  }
}
