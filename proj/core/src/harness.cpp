#include "cbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "cbo/bigp.hpp"
#include "cbo/errors.hpp"
#include "cbo/gp.hpp"
#include "cbo/rng.hpp"
#include "cbo/stats.hpp"

namespace cbo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Number of candidate Latin hypercube draws scored for the maximin design.
constexpr int kMaximinDraws = 16;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  const auto now = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(now - since).count();
}

/// The surrogate models of one replication, with the fit-failure ladder:
/// freshly searched hyperparameters first, then the previous
/// hyperparameters, then (only while a fitted model exists) keeping the
/// previous model untouched.  A run therefore never aborts on a
/// conditioning failure after its first successful fit.
class SurrogateState {
 public:
  SurrogateState(Method method, double threshold) : method_(method), threshold_(threshold) {}

  /// Fits the surrogate(s) to `data`; `search_hp` additionally re-searches
  /// the correlation rates (always forced for the very first fit).
  void refit(const Dataset& data, bool search_hp) {
    fit_fell_back_ = false;
    if (method_ == Method::bivariate) {
      refit_bivariate(data, search_hp);
    } else {
      refit_independent(data, search_hp);
    }
  }

  double acquisition(const Eigen::VectorXd& u, const AcqContext& ctx) const {
    if (method_ == Method::bivariate) {
      return eci_bivariate(bigp_posterior(*bi_, u), ctx);
    }
    return eci_independent(gp_posterior(*uni_y_, u), gp_posterior(*uni_z_, u), ctx);
  }

  /// Posterior probability that the constraint output clears the threshold;
  /// the fallback ranking on an uninformative acquisition surface.
  double feasibility(const Eigen::VectorXd& u) const {
    double mean = 0.0;
    double variance = 0.0;
    if (method_ == Method::bivariate) {
      const BiPosterior post = bigp_posterior(*bi_, u);
      mean = post.mean_z;
      variance = post.var_z;
    } else {
      const Posterior post = gp_posterior(*uni_z_, u);
      mean = post.mean;
      variance = post.variance;
    }
    if (variance <= 0.0) {
      return mean >= threshold_ ? 1.0 : 0.0;
    }
    return stats::norm_cdf((mean - threshold_) / std::sqrt(variance));
  }

  double rho_hat() const {
    return method_ == Method::bivariate ? bi_->rho_hat : kNaN;
  }
  bool rate_fallback() const {
    return method_ == Method::bivariate ? rate_fb_shared_ : (rate_fb_y_ || rate_fb_z_);
  }
  bool rho_fallback() const {
    return method_ == Method::bivariate ? bi_->rho_fallback : false;
  }
  bool fit_fell_back() const { return fit_fell_back_; }

 private:
  void refit_bivariate(const Dataset& data, bool search_hp) {
    KernelParams cand = kernel_;
    bool cand_fb = rate_fb_shared_;
    const bool fresh = search_hp || !have_kernel_;
    if (fresh) {
      const KernelEstimate est = estimate_kernel_shared(data.X, data.y, data.z);
      cand = est.kernel;
      cand_fb = est.fallback;
    }
    try {
      bi_ = fit_bigp(data, cand);
      kernel_ = cand;
      have_kernel_ = true;
      rate_fb_shared_ = cand_fb;
      return;
    } catch (const IllConditionedError&) {
    }
    if (fresh && have_kernel_) {
      try {
        bi_ = fit_bigp(data, kernel_);
        fit_fell_back_ = true;
        return;
      } catch (const IllConditionedError&) {
      }
    }
    if (bi_) {
      fit_fell_back_ = true;  // keep the previous model, one observation behind
      return;
    }
    KernelParams iso;  // last resort before the first successful fit
    iso.rates = Eigen::VectorXd::Ones(data.dim());
    bi_ = fit_bigp(data, iso);
    kernel_ = iso;
    have_kernel_ = true;
    rate_fb_shared_ = true;
    fit_fell_back_ = true;
  }

  void refit_independent(const Dataset& data, bool search_hp) {
    KernelParams cand_y = kernel_y_;
    KernelParams cand_z = kernel_z_;
    bool cand_fb_y = rate_fb_y_;
    bool cand_fb_z = rate_fb_z_;
    const bool fresh = search_hp || !have_kernel_;
    if (fresh) {
      const KernelEstimate est_y = estimate_kernel(data.X, data.y);
      const KernelEstimate est_z = estimate_kernel(data.X, data.z);
      cand_y = est_y.kernel;
      cand_z = est_z.kernel;
      cand_fb_y = est_y.fallback;
      cand_fb_z = est_z.fallback;
    }
    try {
      UniGpModel my = fit_gp(data.X, data.y, cand_y);
      UniGpModel mz = fit_gp(data.X, data.z, cand_z);
      uni_y_ = std::move(my);
      uni_z_ = std::move(mz);
      kernel_y_ = cand_y;
      kernel_z_ = cand_z;
      have_kernel_ = true;
      rate_fb_y_ = cand_fb_y;
      rate_fb_z_ = cand_fb_z;
      return;
    } catch (const IllConditionedError&) {
    }
    if (fresh && have_kernel_) {
      try {
        UniGpModel my = fit_gp(data.X, data.y, kernel_y_);
        UniGpModel mz = fit_gp(data.X, data.z, kernel_z_);
        uni_y_ = std::move(my);
        uni_z_ = std::move(mz);
        fit_fell_back_ = true;
        return;
      } catch (const IllConditionedError&) {
      }
    }
    if (uni_y_ && uni_z_) {
      fit_fell_back_ = true;
      return;
    }
    KernelParams iso;
    iso.rates = Eigen::VectorXd::Ones(data.dim());
    UniGpModel my = fit_gp(data.X, data.y, iso);
    UniGpModel mz = fit_gp(data.X, data.z, iso);
    uni_y_ = std::move(my);
    uni_z_ = std::move(mz);
    kernel_y_ = iso;
    kernel_z_ = iso;
    have_kernel_ = true;
    rate_fb_y_ = rate_fb_z_ = true;
    fit_fell_back_ = true;
  }

  Method method_;
  double threshold_;
  bool have_kernel_ = false;
  bool fit_fell_back_ = false;

  KernelParams kernel_;  // bivariate: the shared rates
  bool rate_fb_shared_ = false;
  std::optional<BiGpModel> bi_;

  KernelParams kernel_y_;
  KernelParams kernel_z_;
  bool rate_fb_y_ = false;
  bool rate_fb_z_ = false;
  std::optional<UniGpModel> uni_y_;
  std::optional<UniGpModel> uni_z_;
};

/// Feasible-minimum incumbent, or the all-observations minimum when nothing
/// is feasible yet (the caller counts those steps).
struct Incumbent {
  double y_min = kNaN;
  bool feasible_exists = false;
};

Incumbent incumbent_of(const std::vector<TraceRow>& rows) {
  Incumbent inc;
  double all_min = kNaN;
  for (const TraceRow& row : rows) {
    if (std::isnan(all_min) || row.y < all_min) {
      all_min = row.y;
    }
    if (row.feasible && (!inc.feasible_exists || row.y < inc.y_min)) {
      inc.y_min = row.y;
      inc.feasible_exists = true;
    }
  }
  if (!inc.feasible_exists) {
    inc.y_min = all_min;
  }
  return inc;
}

/// Mean and the 1.96 * std / sqrt(n) half-width of `values` (n >= 2),
/// accumulated in index order so aggregation is deterministic.
std::pair<double, double> mean_half_width(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= n;
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * sd / std::sqrt(n)};
}

void require_matching_protocols(const ExperimentConfig& a, const ExperimentConfig& b) {
  const bool match = a.problem == b.problem && a.initial_size == b.initial_size &&
                     a.steps == b.steps && a.replications == b.replications &&
                     a.seed == b.seed && a.refit_every == b.refit_every &&
                     a.optimizer.candidates == b.optimizer.candidates &&
                     a.optimizer.refine_top == b.optimizer.refine_top &&
                     a.optimizer.refine_budget == b.optimizer.refine_budget;
  if (!match) {
    throw std::invalid_argument(
        "compare requires identical protocols (problem, initial_size, steps, "
        "replications, seed, refit_every, optimizer counts)");
  }
}

}  // namespace

std::string to_string(Method method) {
  return method == Method::independent ? "independent" : "bivariate";
}

Method method_from_string(const std::string& name) {
  if (name == "independent") {
    return Method::independent;
  }
  if (name == "bivariate") {
    return Method::bivariate;
  }
  throw std::invalid_argument("unknown method `" + name +
                              "`; expected `independent` or `bivariate`");
}

void ExperimentConfig::validate(int dim) const {
  if (dim < 1) {
    throw std::invalid_argument("problem dimension must be positive");
  }
  if (initial_size < dim + 2) {
    throw std::invalid_argument("initial_size must be at least dimension + 2");
  }
  if (steps < 0) {
    throw std::invalid_argument("steps must be non-negative");
  }
  if (replications < 1) {
    throw std::invalid_argument("replications must be at least 1");
  }
  if (refit_every < 1) {
    throw std::invalid_argument("refit_every must be at least 1");
  }
  optimizer.validate();
}

Problem resolve_problem(const std::string& name_or_path) {
  const std::vector<std::string> names = builtin_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin(name_or_path);
  }
  return load_polynomial_problem(name_or_path);
}

double RunTrace::best_feasible_at(int step) const {
  double best = kNaN;
  for (const TraceRow& row : rows) {
    if (row.step > step) {
      break;
    }
    best = row.best_feasible;
  }
  return best;
}

Eigen::MatrixXd initial_design(const Domain& domain, int size, std::uint64_t seed) {
  domain.validate();
  if (size < 2) {
    throw std::invalid_argument("initial_design requires size >= 2");
  }
  Eigen::MatrixXd best;
  double best_score = -1.0;
  for (int draw = 0; draw < kMaximinDraws; ++draw) {
    const Eigen::MatrixXd cand =
        lhs_sample(domain, size, derive_seed(seed, static_cast<std::uint64_t>(draw)),
                   "initial_design");
    // Score by the minimal pairwise squared distance of the unit-cube image,
    // keeping the criterion scale-free across unequal coordinate ranges.
    double min_sq = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size; ++i) {
      const Eigen::VectorXd ui = domain.to_unit(cand.row(i).transpose());
      for (int j = i + 1; j < size; ++j) {
        const Eigen::VectorXd uj = domain.to_unit(cand.row(j).transpose());
        min_sq = std::min(min_sq, (ui - uj).squaredNorm());
      }
    }
    if (min_sq > best_score) {
      best_score = min_sq;
      best = cand;
    }
  }
  return best;
}

RunTrace run_bo(const Problem& problem, const ExperimentConfig& config,
                std::uint64_t replication_seed) {
  const int d = problem.domain.dim();
  config.validate(d);
  const auto run_start = std::chrono::steady_clock::now();

  RunTrace trace;
  trace.seed = replication_seed;
  trace.method = config.method;
  trace.rows.reserve(static_cast<std::size_t>(config.initial_size + config.steps));

  const Domain unit = Domain::unit(d);
  Eigen::MatrixXd design_unit(config.initial_size + config.steps, d);
  Eigen::VectorXd ys(config.initial_size + config.steps);
  Eigen::VectorXd zs(config.initial_size + config.steps);
  int n = 0;

  double best_feasible = kNaN;
  auto append_row = [&](int step, const Eigen::VectorXd& x_phys, const Eigen::VectorXd& x_unit,
                        double acq_value, double rho, bool rate_fb, bool rho_fb,
                        double wall) {
    const auto [y, z] = evaluate(problem, x_phys);
    const bool feasible = z >= problem.threshold_c;
    if (feasible && (std::isnan(best_feasible) || y < best_feasible)) {
      best_feasible = y;
    }
    design_unit.row(n) = x_unit.transpose();
    ys[n] = y;
    zs[n] = z;
    ++n;
    trace.rows.push_back(TraceRow{step, x_phys, y, z, feasible, best_feasible, acq_value,
                                  rho, rate_fb, rho_fb, wall});
  };

  const Eigen::MatrixXd init =
      initial_design(problem.domain, config.initial_size, derive_seed(replication_seed, 0));
  for (int i = 0; i < config.initial_size; ++i) {
    const Eigen::VectorXd x = init.row(i).transpose();
    append_row(0, x, problem.domain.to_unit(x), kNaN, kNaN, false, false, 0.0);
  }

  SurrogateState surrogate(config.method, problem.threshold_c);
  for (int step = 1; step <= config.steps; ++step) {
    const auto step_start = std::chrono::steady_clock::now();

    const Dataset data{design_unit.topRows(n), ys.head(n), zs.head(n)};
    const bool search_hp = (step - 1) % config.refit_every == 0;
    surrogate.refit(data, search_hp);
    if (surrogate.fit_fell_back()) {
      ++trace.fit_fallback_steps;
    }

    const Incumbent inc = incumbent_of(trace.rows);
    if (!inc.feasible_exists) {
      ++trace.infeasible_phase_steps;
    }
    const AcqContext ctx{inc.y_min, problem.threshold_c};

    OptimizerSettings settings = config.optimizer;
    settings.feasibility = [&surrogate](const Eigen::VectorXd& u) {
      return surrogate.feasibility(u);
    };
    const AcqOptimum opt = maximize_acquisition(
        [&surrogate, &ctx](const Eigen::VectorXd& u) { return surrogate.acquisition(u, ctx); },
        unit, settings, derive_seed(replication_seed, static_cast<std::uint64_t>(step)));

    const Eigen::VectorXd x_phys = problem.domain.from_unit(opt.x);
    append_row(step, x_phys, opt.x, opt.value, surrogate.rho_hat(),
               surrogate.rate_fallback(), surrogate.rho_fallback(),
               elapsed_ms(step_start));
  }

  trace.evaluations = n;
  trace.total_wall_ms = elapsed_ms(run_start);

  // Recommendation: best observed feasible point; if the run never saw a
  // feasible point, report the best overall observation with the flag down.
  const TraceRow* pick = nullptr;
  for (const TraceRow& row : trace.rows) {
    if (row.feasible && (pick == nullptr || row.y < pick->y)) {
      pick = &row;
    }
  }
  trace.recommendation_feasible = pick != nullptr;
  if (pick == nullptr) {
    for (const TraceRow& row : trace.rows) {
      if (pick == nullptr || row.y < pick->y) {
        pick = &row;
      }
    }
  }
  trace.recommended_x = pick->x;
  trace.recommended_y = pick->y;
  return trace;
}

StudyResult replicate(const Problem& problem, const ExperimentConfig& config) {
  config.validate(problem.domain.dim());
  if (config.replications < 2) {
    throw std::invalid_argument("replicate requires at least 2 replications");
  }

  StudyResult result;
  result.config = config;
  const int reps = config.replications;
  result.replication_seeds.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    result.replication_seeds.push_back(
        derive_seed(config.seed, static_cast<std::uint64_t>(r)));
  }

  // Replications are independent: each owns its models and generator
  // streams, so they can run on a small worker pool.  traces[r] is the only
  // slot worker r's iteration writes, and aggregation below reads the
  // vector strictly in replication order — results do not depend on
  // scheduling.
  result.traces.resize(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
      try {
        RunTrace trace = run_bo(problem, config, result.replication_seeds[static_cast<std::size_t>(r)]);
        trace.replication = r;
        result.traces[static_cast<std::size_t>(r)] = std::move(trace);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    }
  };
  const unsigned workers = std::min<unsigned>(
      std::max(1u, std::thread::hardware_concurrency()), static_cast<unsigned>(reps));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back(work);
    }
    for (std::thread& t : pool) {
      t.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  result.aggregate.reserve(static_cast<std::size_t>(config.steps + 1));
  std::vector<double> values(static_cast<std::size_t>(reps));
  for (int step = 0; step <= config.steps; ++step) {
    bool defined = true;
    for (int r = 0; r < reps; ++r) {
      values[static_cast<std::size_t>(r)] =
          result.traces[static_cast<std::size_t>(r)].best_feasible_at(step);
      defined = defined && !std::isnan(values[static_cast<std::size_t>(r)]);
    }
    AggregateRow row;
    row.step = step;
    if (defined) {
      const auto [mean, half] = mean_half_width(values);
      row.mean = mean;
      row.lo95 = mean - half;
      row.hi95 = mean + half;
    } else {
      row.mean = row.lo95 = row.hi95 = kNaN;
    }
    result.aggregate.push_back(row);
  }
  return result;
}

StudyResult replicate(const ExperimentConfig& config) {
  return replicate(resolve_problem(config.problem), config);
}

double StudyResult::total_wall_ms() const {
  double total = 0.0;
  for (const RunTrace& trace : traces) {
    total += trace.total_wall_ms;
  }
  return total;
}

ComparisonTable compare(const Problem& problem, const ExperimentConfig& config_a,
                        const ExperimentConfig& config_b) {
  require_matching_protocols(config_a, config_b);
  ComparisonTable table;
  table.study_a = replicate(problem, config_a);
  table.study_b = replicate(problem, config_b);

  const int reps = config_a.replications;
  std::vector<double> diffs(static_cast<std::size_t>(reps));
  table.rows.reserve(static_cast<std::size_t>(config_a.steps + 1));
  for (int step = 0; step <= config_a.steps; ++step) {
    bool defined = true;
    for (int r = 0; r < reps; ++r) {
      const double va = table.study_a.traces[static_cast<std::size_t>(r)].best_feasible_at(step);
      const double vb = table.study_b.traces[static_cast<std::size_t>(r)].best_feasible_at(step);
      diffs[static_cast<std::size_t>(r)] = va - vb;
      defined = defined && !std::isnan(diffs[static_cast<std::size_t>(r)]);
    }
    ComparisonRow row;
    row.step = step;
    if (defined) {
      const auto [mean, half] = mean_half_width(diffs);
      row.mean_diff = mean;
      row.lo95 = mean - half;
      row.hi95 = mean + half;
    } else {
      row.mean_diff = row.lo95 = row.hi95 = kNaN;
    }
    table.rows.push_back(row);
  }

  const double wall_b = table.study_b.total_wall_ms();
  table.wall_ratio = wall_b > 0.0 ? table.study_a.total_wall_ms() / wall_b : kNaN;
  return table;
}

ComparisonTable compare(const ExperimentConfig& config_a, const ExperimentConfig& config_b) {
  require_matching_protocols(config_a, config_b);
  return compare(resolve_problem(config_a.problem), config_a, config_b);
}

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

std::string trace_csv(const std::vector<RunTrace>& traces) {
  if (traces.empty() || traces.front().rows.empty()) {
    throw std::invalid_argument("trace_csv requires at least one non-empty trace");
  }
  const auto d = traces.front().rows.front().x.size();
  std::ostringstream out;
  out << "replication,step";
  for (Eigen::Index k = 0; k < d; ++k) {
    out << ",x_" << (k + 1);
  }
  out << ",y,z,feasible,best_feasible,acq_value,rho_hat,wall_ms\n";
  for (const RunTrace& trace : traces) {
    for (const TraceRow& row : trace.rows) {
      out << trace.replication << ',' << row.step;
      for (Eigen::Index k = 0; k < d; ++k) {
        out << ',' << format_double(row.x[k]);
      }
      out << ',' << format_double(row.y) << ',' << format_double(row.z) << ','
          << (row.feasible ? 1 : 0) << ',' << format_double(row.best_feasible) << ','
          << format_double(row.acq_value) << ',' << format_double(row.rho_hat) << ','
          << format_double(row.wall_ms) << '\n';
    }
  }
  return out.str();
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "step,mean,lo95,hi95\n";
  for (const AggregateRow& row : rows) {
    out << row.step << ',' << format_double(row.mean) << ',' << format_double(row.lo95)
        << ',' << format_double(row.hi95) << '\n';
  }
  return out.str();
}

std::string compare_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "step,mean_diff,lo95,hi95\n";
  for (const ComparisonRow& row : table.rows) {
    out << row.step << ',' << format_double(row.mean_diff) << ','
        << format_double(row.lo95) << ',' << format_double(row.hi95) << '\n';
  }
  return out.str();
}

}  // namespace cbo
