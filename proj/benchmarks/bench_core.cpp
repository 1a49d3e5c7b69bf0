// Microbenchmarks for the numeric hot path: correlation-matrix assembly and
// factorization, surrogate fits (including the correlation line search),
// posterior evaluation, and the closed-form acquisition.  Build sizes track
// the sequential-design regime the harness actually runs in (tens to a few
// hundred observations).

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cstdint>

#include "cbo/acquisition.hpp"
#include "cbo/bigp.hpp"
#include "cbo/gp.hpp"
#include "cbo/kernel.hpp"
#include "cbo/rng.hpp"
#include "cbo/stats.hpp"

namespace {

constexpr int kDim = 2;

Eigen::MatrixXd bench_design(int n, std::uint64_t seed) {
  cbo::Rng rng(seed, "bench_design");
  Eigen::MatrixXd X(n, kDim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kDim; ++j) {
      X(i, j) = rng.uniform();
    }
  }
  return X;
}

Eigen::VectorXd bench_response(const Eigen::MatrixXd& X, double shift) {
  Eigen::VectorXd out(X.rows());
  for (int i = 0; i < X.rows(); ++i) {
    const double x0 = X(i, 0);
    const double x1 = X(i, 1);
    out[i] = (x0 - 0.4) * (x0 - 0.4) + 0.6 * (x1 - shift) * (x1 - shift) +
             0.25 * std::cos(3.0 * (x0 + x1));
  }
  return out;
}

cbo::KernelParams bench_kernel() {
  cbo::KernelParams params;
  params.rates = Eigen::VectorXd::Constant(kDim, 2.0);
  return params;
}

cbo::Dataset bench_dataset(int n) {
  const Eigen::MatrixXd X = bench_design(n, 17);
  return cbo::Dataset{X, bench_response(X, 0.7), bench_response(X, 0.2)};
}

void bm_corr_factor(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd X = bench_design(n, 17);
  const cbo::KernelParams kernel = bench_kernel();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cbo::corr_matrix(X, kernel));
  }
}
BENCHMARK(bm_corr_factor)->Arg(25)->Arg(50)->Arg(100)->Arg(200);

void bm_fit_gp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const cbo::Dataset data = bench_dataset(n);
  const cbo::KernelParams kernel = bench_kernel();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cbo::fit_gp(data.X, data.y, kernel));
  }
}
BENCHMARK(bm_fit_gp)->Arg(25)->Arg(50)->Arg(100)->Arg(200);

void bm_fit_bigp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const cbo::Dataset data = bench_dataset(n);
  const cbo::KernelParams kernel = bench_kernel();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cbo::fit_bigp(data, kernel));
  }
}
BENCHMARK(bm_fit_bigp)->Arg(25)->Arg(50)->Arg(100)->Arg(200);

void bm_rate_search(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const cbo::Dataset data = bench_dataset(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cbo::estimate_kernel_shared(data.X, data.y, data.z));
  }
}
BENCHMARK(bm_rate_search)->Arg(25)->Arg(50);

void bm_gp_posterior(benchmark::State& state) {
  const cbo::Dataset data = bench_dataset(80);
  const cbo::UniGpModel model = cbo::fit_gp(data.X, data.y, bench_kernel());
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(kDim, 0.31);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cbo::gp_posterior(model, x));
  }
}
BENCHMARK(bm_gp_posterior);

void bm_bigp_posterior(benchmark::State& state) {
  const cbo::Dataset data = bench_dataset(80);
  const cbo::BiGpModel model = cbo::fit_bigp(data, bench_kernel());
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(kDim, 0.31);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cbo::bigp_posterior(model, x));
  }
}
BENCHMARK(bm_bigp_posterior);

void bm_bvn_upper(benchmark::State& state) {
  double h = 0.0;
  for (auto _ : state) {
    h += 1e-9;
    benchmark::DoNotOptimize(cbo::stats::bvn_upper(0.3 + h, -0.4, 0.6));
  }
}
BENCHMARK(bm_bvn_upper);

void bm_eci_bivariate(benchmark::State& state) {
  cbo::BiPosterior post;
  post.mean_y = 0.2;
  post.mean_z = 0.4;
  post.var_y = 0.8;
  post.var_z = 0.5;
  post.cov_yz = 0.3;
  const cbo::AcqContext ctx{0.1, 0.25};
  for (auto _ : state) {
    benchmark::DoNotOptimize(cbo::eci_bivariate(post, ctx));
  }
}
BENCHMARK(bm_eci_bivariate);

void bm_maximize_acquisition(benchmark::State& state) {
  const cbo::Dataset data = bench_dataset(40);
  const cbo::BiGpModel model = cbo::fit_bigp(data, bench_kernel());
  const cbo::Domain domain = cbo::Domain::unit(kDim);
  const cbo::AcqContext ctx{data.y.minCoeff(), 0.3};
  cbo::OptimizerSettings settings;
  settings.candidates = 512;
  const auto score = [&](const Eigen::VectorXd& x) {
    return cbo::eci_bivariate(cbo::bigp_posterior(model, x), ctx);
  };
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cbo::maximize_acquisition(score, domain, settings, seed++));
  }
}
BENCHMARK(bm_maximize_acquisition);

}  // namespace

BENCHMARK_MAIN();
