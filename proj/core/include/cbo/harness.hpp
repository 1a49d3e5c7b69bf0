#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "cbo/acquisition.hpp"
#include "cbo/kernel.hpp"
#include "cbo/problems.hpp"

namespace cbo {

/// Which surrogate drives the acquisition: two independently fitted GPs, or
/// the bivariate model with a shared correlation structure.
enum class Method { independent, bivariate };

/// Round-trips with "independent" / "bivariate"; from_string throws
/// std::invalid_argument on anything else.
std::string to_string(Method method);
Method method_from_string(const std::string& name);

/// Full description of one optimization study.
struct ExperimentConfig {
  std::string problem;          ///< built-in name or polynomial-problem file path
  Method method = Method::bivariate;
  int initial_size = 25;
  int steps = 150;
  int replications = 30;
  std::uint64_t seed = 0;
  int refit_every = 1;          ///< hyperparameter re-search cadence in steps
  OptimizerSettings optimizer;

  /// Throws std::invalid_argument unless initial_size >= dim + 2,
  /// steps >= 0, replications >= 1, refit_every >= 1, and the optimizer
  /// settings are valid.  (A zero-step run degenerates to scoring the
  /// initial design, which the trace operations support.)
  void validate(int dim) const;
};

/// Resolves the config's problem field: a built-in name, otherwise a
/// polynomial-problem file path.
Problem resolve_problem(const std::string& name_or_path);

/// One evaluated design point in a trace.  Initial-design points carry
/// step = 0 and have no acquisition value or model diagnostics.
struct TraceRow {
  int step = 0;
  Eigen::VectorXd x;            ///< in problem (physical) coordinates
  double y = 0.0;
  double z = 0.0;
  bool feasible = false;
  double best_feasible = 0.0;   ///< cumulative feasible minimum; NaN before one exists
  double acq_value = 0.0;       ///< acquisition at the chosen point; NaN for initial rows
  double rho_hat = 0.0;         ///< fitted rho of the selecting model; NaN if N/A
  bool rate_fallback = false;   ///< hyperparameter search fell back to isotropic rates
  bool rho_fallback = false;    ///< rho_hat forced to zero by degenerate residuals
  double wall_ms = 0.0;         ///< wall-clock of the full step (fit + optimize + evaluate)
};

/// Complete record of one BO run.
struct RunTrace {
  int replication = 0;
  std::uint64_t seed = 0;
  Method method = Method::bivariate;
  std::vector<TraceRow> rows;   ///< initial_size rows at step 0, then one per step

  Eigen::VectorXd recommended_x;
  double recommended_y = 0.0;
  bool recommendation_feasible = false;

  int evaluations = 0;          ///< always initial_size + steps
  int infeasible_phase_steps = 0;  ///< acquisition steps run without any feasible observation
  int fit_fallback_steps = 0;   ///< steps where fitting fell back to earlier hyperparameters
  double total_wall_ms = 0.0;

  /// Best-feasible value after completing `step` (0 = after the initial
  /// design); NaN while no feasible point has been observed.
  double best_feasible_at(int step) const;
};

/// Maximin-improved Latin hypercube design: the best of a fixed number of
/// seeded LHS draws by minimal pairwise distance, then deterministic given
/// the seed.  One design point per row, in domain coordinates.
/// Requires size >= 2.
Eigen::MatrixXd initial_design(const Domain& domain, int size, std::uint64_t seed);

/// Runs one replication of Algorithm-style constrained BO: initial design,
/// surrogate fit, then `steps` rounds of {refit per cadence, maximize the
/// acquisition, evaluate the problem, absorb the observation}.  The
/// recommendation is the best observed feasible point.  Model-fit failures
/// fall back to the previous hyperparameters (flagged in the trace) and
/// never abort the run.  Deterministic given (config, replication_seed).
RunTrace run_bo(const Problem& problem, const ExperimentConfig& config,
                std::uint64_t replication_seed);

/// Aggregate best-feasible statistics across replications at one step.
struct AggregateRow {
  int step = 0;
  double mean = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

/// Result of a replication study.
struct StudyResult {
  ExperimentConfig config;
  std::vector<std::uint64_t> replication_seeds;
  std::vector<RunTrace> traces;        ///< ordered by replication index
  std::vector<AggregateRow> aggregate; ///< steps 0..steps

  double total_wall_ms() const;
};

/// Runs config.replications independent replications (each with its own
/// derived seed and generator streams; replications may execute
/// concurrently, aggregation is a deterministic reduction ordered by
/// replication index) and aggregates the best-feasible curves: per step,
/// the across-replication mean with the normal-approximation band
/// mean +/- 1.96 * std / sqrt(replications).  Steps at which any
/// replication still lacks a feasible observation aggregate to NaN.
/// Requires replications >= 2.
StudyResult replicate(const Problem& problem, const ExperimentConfig& config);

/// Overload resolving the problem from config.problem.
StudyResult replicate(const ExperimentConfig& config);

/// Paired per-step difference (method A minus method B) at one step.
struct ComparisonRow {
  int step = 0;
  double mean_diff = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

/// Result of a two-config comparison: the per-step paired difference table,
/// the two underlying studies, and the total wall-clock ratio A/B (reported,
/// not asserted — fit cost is the interesting part).
struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  StudyResult study_a;
  StudyResult study_b;
  double wall_ratio = 0.0;
};

/// Runs both studies and pairs their replications by seed.  The protocols
/// must match exactly (problem, sizes, steps, replications, seed, cadence,
/// optimizer counts); comparing a method against itself is allowed and
/// yields a zero difference curve.  Throws std::invalid_argument on a
/// protocol mismatch.
ComparisonTable compare(const ExperimentConfig& config_a, const ExperimentConfig& config_b);
ComparisonTable compare(const Problem& problem, const ExperimentConfig& config_a,
                        const ExperimentConfig& config_b);

/// Shortest round-trip decimal rendering of v ("nan" for NaN); the single
/// formatter used for every CSV number, which is what makes output files
/// byte-reproducible across runs on one platform.
std::string format_double(double v);

/// CSV renderings (header row included, '\n' line endings).  trace_csv
/// columns: replication, step, x_1..x_d, y, z, feasible, best_feasible,
/// acq_value, rho_hat, wall_ms.  aggregate_csv columns: step, mean, lo95,
/// hi95.  compare_csv columns: step, mean_diff, lo95, hi95.  All numeric
/// cells go through format_double; wall_ms is the only column expected to
/// vary between otherwise identical runs.
std::string trace_csv(const std::vector<RunTrace>& traces);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string compare_csv(const ComparisonTable& table);

}  // namespace cbo
