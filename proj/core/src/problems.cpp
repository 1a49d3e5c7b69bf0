#include "cbo/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cbo {

namespace {

using nlohmann::json;

/// x^e for small non-negative integer e by repeated multiplication; the
/// fixed evaluation order keeps polynomial outputs bit-reproducible.
double int_pow(double x, int e) {
  double out = 1.0;
  for (int i = 0; i < e; ++i) {
    out *= x;
  }
  return out;
}

double eval_terms(const std::vector<MonomialTerm>& terms, const Eigen::VectorXd& x) {
  double sum = 0.0;
  for (const MonomialTerm& term : terms) {
    double monomial = term.coefficient;
    for (std::size_t k = 0; k < term.exponents.size(); ++k) {
      monomial *= int_pow(x[static_cast<Eigen::Index>(k)], term.exponents[k]);
    }
    sum += monomial;
  }
  return sum;
}

const json& require_field(const json& obj, const std::string& name, const std::string& context) {
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw std::invalid_argument(context + ": missing field `" + name + "`");
  }
  return *it;
}

std::vector<MonomialTerm> parse_terms(const json& arr, const std::string& list_name,
                                      const std::string& context) {
  if (!arr.is_array()) {
    throw std::invalid_argument(context + ": field `" + list_name + "` must be an array");
  }
  std::vector<MonomialTerm> terms;
  terms.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& entry = arr[i];
    const std::string label = list_name + "[" + std::to_string(i) + "]";
    if (!entry.is_object()) {
      throw std::invalid_argument(context + ": `" + label + "` must be an object");
    }
    MonomialTerm term;
    const json& exps = require_field(entry, "exponents", context + ": `" + label + "`");
    if (!exps.is_array()) {
      throw std::invalid_argument(context + ": `" + label + ".exponents` must be an array");
    }
    for (const json& e : exps) {
      if (!e.is_number_integer()) {
        throw std::invalid_argument(context + ": `" + label +
                                    ".exponents` entries must be integers");
      }
      term.exponents.push_back(e.get<int>());
    }
    const json& coef = require_field(entry, "coefficient", context + ": `" + label + "`");
    if (!coef.is_number()) {
      throw std::invalid_argument(context + ": `" + label + ".coefficient` must be a number");
    }
    term.coefficient = coef.get<double>();
    terms.push_back(std::move(term));
  }
  return terms;
}

void validate_terms(const std::vector<MonomialTerm>& terms, const std::string& list_name,
                    int dimension) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const MonomialTerm& term = terms[i];
    const std::string label = list_name + "[" + std::to_string(i) + "]";
    if (static_cast<int>(term.exponents.size()) != dimension) {
      throw std::invalid_argument("`" + label + ".exponents` has length " +
                                  std::to_string(term.exponents.size()) + ", expected " +
                                  std::to_string(dimension));
    }
    int degree = 0;
    for (int e : term.exponents) {
      if (e < 0) {
        throw std::invalid_argument("`" + label + ".exponents` contains a negative exponent");
      }
      degree += e;
    }
    if (degree > 6) {
      throw std::invalid_argument("`" + label + "` has total degree " + std::to_string(degree) +
                                  ", exceeding the cap of 6");
    }
    if (!std::isfinite(term.coefficient)) {
      throw std::invalid_argument("`" + label + ".coefficient` must be finite");
    }
  }
}

}  // namespace

std::pair<double, double> evaluate(const Problem& problem, const Eigen::VectorXd& x) {
  if (!problem.domain.contains(x)) {
    std::ostringstream msg;
    msg << "evaluation point lies outside the domain of problem `" << problem.name << "`";
    throw std::invalid_argument(msg.str());
  }
  const double y = problem.objective(x);
  const double z = problem.constraint(x);
  if (!std::isfinite(y) || !std::isfinite(z)) {
    throw std::runtime_error("problem `" + problem.name + "` produced a non-finite output");
  }
  return {y, z};
}

void PolynomialSpec::validate() const {
  if (dimension < 1) {
    throw std::invalid_argument("`dimension` must be a positive integer");
  }
  domain.validate();
  if (domain.dim() != dimension) {
    throw std::invalid_argument("`domain` has " + std::to_string(domain.dim()) +
                                " bounds pairs, expected " + std::to_string(dimension));
  }
  if (!std::isfinite(threshold_c)) {
    throw std::invalid_argument("`threshold_c` must be finite");
  }
  validate_terms(objective_terms, "objective_terms", dimension);
  validate_terms(constraint_terms, "constraint_terms", dimension);
}

PolynomialSpec parse_polynomial_spec(const std::string& text, const std::string& context) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw std::runtime_error(context + ": " + err.what());
  }
  if (!doc.is_object()) {
    throw std::invalid_argument(context + ": top-level value must be an object");
  }

  PolynomialSpec spec;
  const json& dim = require_field(doc, "dimension", context);
  if (!dim.is_number_integer()) {
    throw std::invalid_argument(context + ": field `dimension` must be an integer");
  }
  spec.dimension = dim.get<int>();
  if (spec.dimension < 1) {
    throw std::invalid_argument(context + ": field `dimension` must be positive");
  }

  const json& dom = require_field(doc, "domain", context);
  if (!dom.is_array()) {
    throw std::invalid_argument(context + ": field `domain` must be an array of [lower, upper]");
  }
  Eigen::VectorXd lower(static_cast<Eigen::Index>(dom.size()));
  Eigen::VectorXd upper(static_cast<Eigen::Index>(dom.size()));
  for (std::size_t k = 0; k < dom.size(); ++k) {
    const json& pair = dom[k];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw std::invalid_argument(context + ": `domain[" + std::to_string(k) +
                                  "]` must be a [lower, upper] number pair");
    }
    lower[static_cast<Eigen::Index>(k)] = pair[0].get<double>();
    upper[static_cast<Eigen::Index>(k)] = pair[1].get<double>();
  }
  spec.domain = Domain(std::move(lower), std::move(upper));

  if (auto it = doc.find("threshold_c"); it != doc.end()) {
    if (!it->is_number()) {
      throw std::invalid_argument(context + ": field `threshold_c` must be a number");
    }
    spec.threshold_c = it->get<double>();
  }

  spec.objective_terms = parse_terms(require_field(doc, "objective_terms", context),
                                     "objective_terms", context);
  spec.constraint_terms = parse_terms(require_field(doc, "constraint_terms", context),
                                      "constraint_terms", context);
  try {
    spec.validate();
  } catch (const std::invalid_argument& err) {
    throw std::invalid_argument(context + ": " + err.what());
  }
  return spec;
}

Problem make_polynomial_problem(const PolynomialSpec& spec, const std::string& name) {
  spec.validate();
  Problem problem;
  problem.name = name;
  problem.domain = spec.domain;
  problem.threshold_c = spec.threshold_c;
  problem.objective = [terms = spec.objective_terms](const Eigen::VectorXd& x) {
    return eval_terms(terms, x);
  };
  problem.constraint = [terms = spec.constraint_terms](const Eigen::VectorXd& x) {
    return eval_terms(terms, x);
  };
  return problem;
}

Problem load_polynomial_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open problem file `" + path + "`");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const PolynomialSpec spec = parse_polynomial_spec(buffer.str(), path);
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  if (const auto dot = name.find_last_of('.'); dot != std::string::npos && dot > 0) {
    name = name.substr(0, dot);
  }
  return make_polynomial_problem(spec, name);
}

namespace {

Eigen::VectorXd point2(double a, double b) {
  Eigen::VectorXd x(2);
  x << a, b;
  return x;
}

Problem make_quad_linear() {
  Problem p;
  p.name = "quad-linear";
  p.domain = Domain::unit(2);
  p.threshold_c = 1.1;
  p.objective = [](const Eigen::VectorXd& x) {
    const double u = x[0] - 0.3;
    const double v = x[1] - 0.6;
    return u * u + v * v;
  };
  p.constraint = [](const Eigen::VectorXd& x) { return x[0] + x[1]; };
  // Feasible minimizer sits on the line x1 + x2 = 1.1; point and value are
  // frozen from a 2001x2001 grid scan.
  p.known_optimum = KnownOptimum{point2(0.4, 0.7000000000000001), 0.020000000000000025};
  return p;
}

Problem make_sin_cos() {
  Problem p;
  p.name = "sin-cos";
  p.domain = Domain(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 6.0));
  p.threshold_c = -0.5;
  p.objective = [](const Eigen::VectorXd& x) {
    return std::cos(2.0 * x[0]) * std::cos(x[1]) + std::sin(x[0]);
  };
  p.constraint = [](const Eigen::VectorXd& x) {
    return -(std::cos(x[0]) * std::cos(x[1]) - std::sin(x[0]) * std::sin(x[1]));
  };
  // Frozen from a 2001x2001 grid scan over [0, 6]^2.
  p.known_optimum = KnownOptimum{point2(4.713, 0.0), -1.999999066637673};
  return p;
}

Problem make_corr_pair() {
  Problem p;
  p.name = "corr-pair";
  p.domain = Domain::unit(2);
  p.threshold_c = 0.96;
  p.objective = [](const Eigen::VectorXd& x) {
    const double u = x[0] - 0.5;
    return u * u + x[1];
  };
  p.constraint = [](const Eigen::VectorXd& x) {
    const double u = x[0] - 0.5;
    return 0.96 + u * u - 0.5 * x[1];
  };
  // The minimizer (0.5, 0) is exactly on the constraint boundary z = 0.96.
  p.known_optimum = KnownOptimum{point2(0.5, 0.0), 0.0};
  return p;
}

}  // namespace

Problem builtin(const std::string& name) {
  if (name == "quad-linear") {
    return make_quad_linear();
  }
  if (name == "sin-cos") {
    return make_sin_cos();
  }
  if (name == "corr-pair") {
    return make_corr_pair();
  }
  throw std::invalid_argument("unknown built-in problem `" + name + "`");
}

std::vector<std::string> builtin_names() {
  return {"quad-linear", "sin-cos", "corr-pair"};
}

}  // namespace cbo
