#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cbo/kernel.hpp"

namespace cbo {

/// A recorded optimum for testing: the minimizing point and its objective
/// value (from a dense-grid scan for the built-in problems).
struct KnownOptimum {
  Eigen::VectorXd point;
  double value = 0.0;
};

/// A deterministic constrained test problem: minimize objective(x) subject
/// to constraint(x) >= threshold_c over the domain.  Evaluators are total
/// and pure on the domain, so problems are safe to share across threads.
struct Problem {
  std::string name;
  Domain domain;
  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<double(const Eigen::VectorXd&)> constraint;
  double threshold_c = 0.0;
  std::optional<KnownOptimum> known_optimum;
};

/// Evaluates both outputs at x.  Throws std::invalid_argument when x lies
/// outside the domain (beyond a 1e-9 slack) and std::runtime_error if an
/// evaluator produces a non-finite value.
std::pair<double, double> evaluate(const Problem& problem, const Eigen::VectorXd& x);

/// One monomial: coefficient * prod_k x_k^exponents[k].
struct MonomialTerm {
  std::vector<int> exponents;
  double coefficient = 0.0;
};

/// A polynomial pseudo-simulator specification: both outputs are monomial
/// sums over the same domain.  This is the carrier for user-supplied fitted
/// polynomials standing in for an expensive simulator.
struct PolynomialSpec {
  int dimension = 0;
  Domain domain;
  double threshold_c = 0.96;
  std::vector<MonomialTerm> objective_terms;
  std::vector<MonomialTerm> constraint_terms;

  /// Throws std::invalid_argument naming the offending list and term index
  /// when an exponent vector has the wrong length, a negative entry, or
  /// total degree above 6 (the format cap), or when a coefficient is not
  /// finite.
  void validate() const;
};

/// Parses the JSON polynomial-problem document (fields: `dimension`,
/// `domain` as a list of [lower, upper] pairs, optional `threshold_c`
/// defaulting to 0.96, `objective_terms` and `constraint_terms` as lists of
/// {"exponents": [...], "coefficient": r}).  `context` names the source in
/// error messages.  Throws std::runtime_error with position context on
/// malformed JSON and std::invalid_argument on schema/validation errors.
PolynomialSpec parse_polynomial_spec(const std::string& text, const std::string& context);

/// Builds the evaluating Problem from a validated spec.  Monomials are
/// evaluated by exact repeated multiplication in fixed term order, so
/// identical input bits give identical output bits across runs.
Problem make_polynomial_problem(const PolynomialSpec& spec, const std::string& name);

/// Reads and parses a polynomial-problem file.
Problem load_polynomial_problem(const std::string& path);

/// Built-in synthetic problems: "quad-linear", "sin-cos", "corr-pair".
/// Throws std::invalid_argument for an unknown name.
Problem builtin(const std::string& name);

/// Names of the built-in problems, in registry order.
std::vector<std::string> builtin_names();

}  // namespace cbo
