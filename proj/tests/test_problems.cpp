#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cbo/problems.hpp"
#include "cbo/rng.hpp"

using namespace cbo;

namespace {

/// Runs `fn`, requiring it to throw `Exception` with `needle` somewhere in
/// the message.
template <typename Exception>
void expect_message(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
    FAIL("expected an exception mentioning `" << needle << "`");
  } catch (const Exception& err) {
    const std::string what = err.what();
    INFO("message: " << what);
    CHECK(what.find(needle) != std::string::npos);
  }
}

/// Mirror of the library's monomial evaluation: same term order, same
/// repeated-multiplication powers, so results must agree bit for bit.
double eval_reference(const std::vector<MonomialTerm>& terms, const Eigen::VectorXd& x) {
  double sum = 0.0;
  for (const MonomialTerm& term : terms) {
    double monomial = term.coefficient;
    for (std::size_t k = 0; k < term.exponents.size(); ++k) {
      double power = 1.0;
      for (int i = 0; i < term.exponents[k]; ++i) {
        power *= x[static_cast<Eigen::Index>(k)];
      }
      monomial *= power;
    }
    sum += monomial;
  }
  return sum;
}

std::string render_terms(const std::vector<MonomialTerm>& terms) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0) out << ", ";
    out << "{\"exponents\": [";
    for (std::size_t k = 0; k < terms[i].exponents.size(); ++k) {
      if (k > 0) out << ", ";
      out << terms[i].exponents[k];
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", terms[i].coefficient);
    out << "], \"coefficient\": " << buf << "}";
  }
  out << "]";
  return out.str();
}

const std::string kMinimalSpec = R"({
  "dimension": 1,
  "domain": [[0, 1]],
  "threshold_c": 0.5,
  "objective_terms": [{"exponents": [2], "coefficient": 1.0}],
  "constraint_terms": [{"exponents": [1], "coefficient": 1.0}]
})";

}  // namespace

TEST_CASE("built-in problem registry", "[problems]") {
  const std::vector<std::string> names = builtin_names();
  REQUIRE(names == std::vector<std::string>{"quad-linear", "sin-cos", "corr-pair"});
  for (const std::string& name : names) {
    CHECK(builtin(name).name == name);
  }
  CHECK_THROWS_AS(builtin("does-not-exist"), std::invalid_argument);
}

TEST_CASE("built-in optima are feasible and bit-reproducible", "[problems]") {
  for (const std::string& name : builtin_names()) {
    DYNAMIC_SECTION("problem " << name) {
      const Problem p = builtin(name);
      REQUIRE(p.known_optimum.has_value());
      REQUIRE(p.domain.contains(p.known_optimum->point));
      const auto [y, z] = evaluate(p, p.known_optimum->point);
      CHECK(y == p.known_optimum->value);
      CHECK(z >= p.threshold_c - 1e-9);
    }
  }

  SECTION("quad-linear details") {
    const Problem p = builtin("quad-linear");
    CHECK(p.threshold_c == 1.1);
    CHECK(p.domain.dim() == 2);
    const auto [y, z] = evaluate(p, Eigen::Vector2d(0.3, 0.6));
    CHECK(y == 0.0);  // unconstrained minimum of the bowl
    CHECK(z < p.threshold_c);  // ... which is infeasible
  }

  SECTION("corr-pair optimum sits exactly on the constraint boundary") {
    const Problem p = builtin("corr-pair");
    const auto [y, z] = evaluate(p, p.known_optimum->point);
    CHECK(y == 0.0);
    CHECK(z == p.threshold_c);
  }
}

TEST_CASE("problem evaluation guards", "[problems]") {
  const Problem p = builtin("quad-linear");

  SECTION("points outside the domain are rejected") {
    CHECK_THROWS_AS(evaluate(p, Eigen::Vector2d(1.5, 0.5)), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(p, Eigen::Vector2d(0.5, -0.1)), std::invalid_argument);
    // A whisker beyond the bound stays inside the evaluation slack.
    CHECK_NOTHROW(evaluate(p, Eigen::Vector2d(1.0 + 1e-10, 0.5)));
  }

  SECTION("non-finite outputs are reported") {
    PolynomialSpec spec;
    spec.dimension = 1;
    spec.domain = Domain(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0));
    spec.objective_terms = {{{2}, 1e308}};
    spec.constraint_terms = {{{0}, 1.0}};
    const Problem overflow = make_polynomial_problem(spec, "overflow");
    CHECK_THROWS_AS(evaluate(overflow, Eigen::VectorXd::Constant(1, 2.0)),
                    std::runtime_error);
    CHECK_NOTHROW(evaluate(overflow, Eigen::VectorXd::Constant(1, 1.0)));
  }
}

TEST_CASE("polynomial spec parsing", "[problems]") {
  SECTION("minimal one-dimensional document") {
    const PolynomialSpec spec = parse_polynomial_spec(kMinimalSpec, "inline");
    CHECK(spec.dimension == 1);
    CHECK(spec.threshold_c == 0.5);
    REQUIRE(spec.objective_terms.size() == 1);
    REQUIRE(spec.constraint_terms.size() == 1);

    const Problem p = make_polynomial_problem(spec, "square-vs-line");
    CHECK(p.name == "square-vs-line");
    const auto [y, z] = evaluate(p, Eigen::VectorXd::Constant(1, 0.5));
    CHECK(y == 0.25);
    CHECK(z == 0.5);
  }

  SECTION("threshold defaults when absent") {
    const std::string text = R"({
      "dimension": 1, "domain": [[0, 1]],
      "objective_terms": [{"exponents": [1], "coefficient": 2.0}],
      "constraint_terms": []
    })";
    const PolynomialSpec spec = parse_polynomial_spec(text, "inline");
    CHECK(spec.threshold_c == 0.96);
  }

  SECTION("schema errors name the offending field") {
    expect_message<std::invalid_argument>(
        [] {
          parse_polynomial_spec(
              R"({"domain": [[0, 1]], "objective_terms": [], "constraint_terms": []})",
              "ctx");
        },
        "dimension");
    expect_message<std::invalid_argument>(
        [] {
          parse_polynomial_spec(
              R"({"dimension": 2, "domain": [[0, 1], [0, 1]],
                  "objective_terms": [{"exponents": [1], "coefficient": 1.0}],
                  "constraint_terms": []})",
              "ctx");
        },
        "objective_terms[0]");
    expect_message<std::invalid_argument>(
        [] {
          parse_polynomial_spec(
              R"({"dimension": 1, "domain": [[0, 1]],
                  "objective_terms": [],
                  "constraint_terms": [{"exponents": [-1], "coefficient": 1.0}]})",
              "ctx");
        },
        "negative");
    expect_message<std::invalid_argument>(
        [] {
          parse_polynomial_spec(
              R"({"dimension": 1, "domain": [[0, 1]],
                  "objective_terms": [{"exponents": [7], "coefficient": 1.0}],
                  "constraint_terms": []})",
              "ctx");
        },
        "degree");
    expect_message<std::invalid_argument>(
        [] {
          parse_polynomial_spec(
              R"({"dimension": 1, "domain": [[0, 1]],
                  "objective_terms": [{"exponents": [1.5], "coefficient": 1.0}],
                  "constraint_terms": []})",
              "ctx");
        },
        "integers");
    expect_message<std::invalid_argument>(
        [] {
          parse_polynomial_spec(
              R"({"dimension": 2, "domain": [[0, 1]],
                  "objective_terms": [], "constraint_terms": []})",
              "ctx");
        },
        "domain");
  }

  SECTION("malformed json reports the parse context") {
    expect_message<std::runtime_error>(
        [] { parse_polynomial_spec("{ this is not json", "my-source"); }, "my-source");
  }

  SECTION("non-finite coefficients fail validation") {
    PolynomialSpec spec;
    spec.dimension = 1;
    spec.domain = Domain::unit(1);
    spec.objective_terms = {{{1}, std::numeric_limits<double>::quiet_NaN()}};
    expect_message<std::invalid_argument>([&] { spec.validate(); }, "coefficient");
  }
}

TEST_CASE("polynomial problems round-trip through files", "[problems]") {
  // A four-dimensional cubic with dyadic coefficients: every value written
  // with 17 significant digits reads back as the identical double.
  cbo::Rng rng(6040, "poly_spec");
  const std::vector<std::vector<int>> degree_table = {
      {0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1},
      {2, 0, 0, 0}, {1, 1, 0, 0}, {0, 2, 0, 0}, {0, 0, 1, 1}, {1, 0, 2, 0},
      {3, 0, 0, 0}, {1, 1, 1, 0}, {0, 0, 0, 3}, {0, 1, 0, 2}};
  const auto random_terms = [&](int count) {
    std::vector<MonomialTerm> terms;
    for (int i = 0; i < count; ++i) {
      MonomialTerm term;
      term.exponents = degree_table[static_cast<std::size_t>(
          rng.uniform_below(degree_table.size()))];
      term.coefficient =
          static_cast<double>(static_cast<int>(rng.uniform_below(257)) - 128) / 64.0;
      terms.push_back(std::move(term));
    }
    return terms;
  };
  const std::vector<MonomialTerm> objective_terms = random_terms(8);
  const std::vector<MonomialTerm> constraint_terms = random_terms(6);

  std::ostringstream doc;
  doc << "{\n"
      << "  \"dimension\": 4,\n"
      << "  \"domain\": [[-1, 2], [0, 1], [-3, -1], [0.5, 2.5]],\n"
      << "  \"threshold_c\": 0.25,\n"
      << "  \"objective_terms\": " << render_terms(objective_terms) << ",\n"
      << "  \"constraint_terms\": " << render_terms(constraint_terms) << "\n"
      << "}\n";

  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "cbo_poly_roundtrip.json";
  {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << doc.str();
  }

  const Problem p = load_polynomial_problem(path.string());
  CHECK(p.name == "cbo_poly_roundtrip");
  CHECK(p.threshold_c == 0.25);
  REQUIRE(p.domain.dim() == 4);

  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd u(4);
    for (int k = 0; k < 4; ++k) u[k] = rng.uniform();
    const Eigen::VectorXd x = p.domain.from_unit(u);
    const auto [y, z] = evaluate(p, x);
    CHECK(y == eval_reference(objective_terms, x));
    CHECK(z == eval_reference(constraint_terms, x));
  }

  std::filesystem::remove(path);

  SECTION("missing files are reported by path") {
    expect_message<std::runtime_error>(
        [] { load_polynomial_problem("/nonexistent/nowhere.json"); }, "cannot open");
  }
}
