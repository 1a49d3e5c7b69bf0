#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbo/harness.hpp"
#include "cbo/version.hpp"

namespace {

using nlohmann::json;

/// Options shared by the run/replicate/compare subcommands.  Flags override
/// values read from --config.
struct CliOptions {
  std::string problem = "quad-linear";
  std::string problem_file;
  std::string method = "bivariate";
  int initial_size = 25;
  int steps = 150;
  int reps = 30;
  std::uint64_t seed = 0;
  int refit_every = 1;
  int candidates = 2048;
  std::string out_dir = ".";
  std::string config_file;
};

void add_protocol_flags(CLI::App* cmd, CliOptions& opt, bool with_reps) {
  cmd->add_option("--problem", opt.problem, "Built-in problem name");
  cmd->add_option("--problem-file", opt.problem_file,
                  "Polynomial problem file (overrides --problem)");
  cmd->add_option("--initial-size", opt.initial_size, "Initial design size");
  cmd->add_option("--steps", opt.steps, "Optimization steps");
  if (with_reps) {
    cmd->add_option("--reps", opt.reps, "Replications");
  }
  cmd->add_option("--seed", opt.seed, "Base seed");
  cmd->add_option("--refit-every", opt.refit_every, "Hyperparameter refit cadence");
  cmd->add_option("--candidates", opt.candidates, "Acquisition candidate count");
  cmd->add_option("--out", opt.out_dir, "Output directory");
  cmd->add_option("--config", opt.config_file,
                  "JSON config file mirroring the experiment fields; explicit flags override");
}

/// Applies a JSON config file onto the defaults, before flag overrides.
void apply_config_file(const std::string& path, CliOptions& opt) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file `" + path + "`");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw std::runtime_error(path + ": " + err.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error(path + ": top-level value must be an object");
  }
  auto get = [&](const char* field, auto& target) {
    if (auto it = doc.find(field); it != doc.end()) {
      target = it->template get<std::decay_t<decltype(target)>>();
    }
  };
  get("problem", opt.problem);
  get("method", opt.method);
  get("initial_size", opt.initial_size);
  get("steps", opt.steps);
  get("replications", opt.reps);
  get("seed", opt.seed);
  get("refit_every", opt.refit_every);
  if (auto it = doc.find("optimizer"); it != doc.end()) {
    if (!it->is_object()) {
      throw std::runtime_error(path + ": field `optimizer` must be an object");
    }
    if (auto c = it->find("candidates"); c != it->end()) {
      opt.candidates = c->get<int>();
    }
  }
}

cbo::ExperimentConfig to_config(const CliOptions& opt, const std::string& method) {
  cbo::ExperimentConfig config;
  config.problem = opt.problem_file.empty() ? opt.problem : opt.problem_file;
  config.method = cbo::method_from_string(method);
  config.initial_size = opt.initial_size;
  config.steps = opt.steps;
  config.replications = opt.reps;
  config.seed = opt.seed;
  config.refit_every = opt.refit_every;
  config.optimizer.candidates = opt.candidates;
  return config;
}

json config_json(const cbo::ExperimentConfig& config) {
  return json{{"problem", config.problem},
              {"method", cbo::to_string(config.method)},
              {"initial_size", config.initial_size},
              {"steps", config.steps},
              {"replications", config.replications},
              {"seed", config.seed},
              {"refit_every", config.refit_every},
              {"optimizer",
               {{"candidates", config.optimizer.candidates},
                {"refine_top", config.optimizer.refine_top},
                {"refine_budget", config.optimizer.refine_budget}}}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write `" + path.string() + "`");
  }
  out << content;
}

void write_manifest(const std::filesystem::path& dir, json manifest) {
  manifest["version"] = cbo::kVersion;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::filesystem::path prepare_out_dir(const CliOptions& opt) {
  std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int cmd_run(const CliOptions& opt) {
  const cbo::ExperimentConfig config = to_config(opt, opt.method);
  const cbo::Problem problem = cbo::resolve_problem(config.problem);
  cbo::RunTrace trace = cbo::run_bo(problem, config, config.seed);
  const auto dir = prepare_out_dir(opt);
  write_file(dir / "trace.csv", cbo::trace_csv({trace}));
  json manifest = {{"command", "run"},
                   {"config", config_json(config)},
                   {"replication_seeds", {config.seed}}};
  write_manifest(dir, std::move(manifest));
  std::cout << "recommended point " << trace.recommended_x.transpose() << "  objective "
            << cbo::format_double(trace.recommended_y)
            << (trace.recommendation_feasible ? "" : "  (no feasible observation)") << "\n";
  std::cout << "wrote " << (dir / "trace.csv").string() << "\n";
  return 0;
}

int cmd_replicate(const CliOptions& opt) {
  const cbo::ExperimentConfig config = to_config(opt, opt.method);
  const cbo::Problem problem = cbo::resolve_problem(config.problem);
  const cbo::StudyResult study = cbo::replicate(problem, config);
  const auto dir = prepare_out_dir(opt);
  write_file(dir / "trace.csv", cbo::trace_csv(study.traces));
  write_file(dir / "aggregate.csv", cbo::aggregate_csv(study.aggregate));
  json manifest = {{"command", "replicate"},
                   {"config", config_json(config)},
                   {"replication_seeds", study.replication_seeds}};
  write_manifest(dir, std::move(manifest));
  const cbo::AggregateRow& last = study.aggregate.back();
  std::cout << "final mean best-feasible " << cbo::format_double(last.mean) << "  [ "
            << cbo::format_double(last.lo95) << ", " << cbo::format_double(last.hi95)
            << " ]\n";
  std::cout << "wrote " << (dir / "aggregate.csv").string() << "\n";
  return 0;
}

int cmd_compare(const CliOptions& opt, const std::string& method_a,
                const std::string& method_b) {
  const cbo::ExperimentConfig config_a = to_config(opt, method_a);
  const cbo::ExperimentConfig config_b = to_config(opt, method_b);
  const cbo::Problem problem = cbo::resolve_problem(config_a.problem);
  const cbo::ComparisonTable table = cbo::compare(problem, config_a, config_b);
  const auto dir = prepare_out_dir(opt);
  write_file(dir / "compare.csv", cbo::compare_csv(table));
  write_file(dir / "trace_a.csv", cbo::trace_csv(table.study_a.traces));
  write_file(dir / "trace_b.csv", cbo::trace_csv(table.study_b.traces));
  write_file(dir / "aggregate_a.csv", cbo::aggregate_csv(table.study_a.aggregate));
  write_file(dir / "aggregate_b.csv", cbo::aggregate_csv(table.study_b.aggregate));
  json manifest = {{"command", "compare"},
                   {"config_a", config_json(config_a)},
                   {"config_b", config_json(config_b)},
                   {"replication_seeds", table.study_a.replication_seeds},
                   {"wall_ratio", table.wall_ratio}};
  write_manifest(dir, std::move(manifest));
  const cbo::ComparisonRow& last = table.rows.back();
  std::cout << "final mean difference (a - b) " << cbo::format_double(last.mean_diff)
            << "  [ " << cbo::format_double(last.lo95) << ", "
            << cbo::format_double(last.hi95) << " ]\n";
  std::cout << "total wall-clock ratio a/b " << cbo::format_double(table.wall_ratio) << "\n";
  std::cout << "wrote " << (dir / "compare.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained Bayesian optimization toolkit"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string method_a = "independent";
  std::string method_b = "bivariate";

  CLI::App* run = app.add_subcommand("run", "Run a single optimization trace");
  add_protocol_flags(run, opt, false);
  run->add_option("--method", opt.method, "Surrogate method: independent or bivariate");

  CLI::App* repl = app.add_subcommand("replicate", "Run a replication study");
  add_protocol_flags(repl, opt, true);
  repl->add_option("--method", opt.method, "Surrogate method: independent or bivariate");

  CLI::App* comp = app.add_subcommand("compare", "Run both methods and compare, paired by seed");
  add_protocol_flags(comp, opt, true);
  comp->add_option("--method-a", method_a, "First method (default independent)");
  comp->add_option("--method-b", method_b, "Second method (default bivariate)");

  CLI::App* list = app.add_subcommand("list-problems", "List built-in problems");

  CLI11_PARSE(app, argc, argv);

  try {
    // Values from --config fill in every field the user did not pass as an
    // explicit flag; explicit flags always win.
    for (CLI::App* cmd : {run, repl, comp}) {
      if (!cmd->parsed() || opt.config_file.empty()) {
        continue;
      }
      CliOptions file_values;
      apply_config_file(opt.config_file, file_values);
      auto keep = [&](auto member, const char* flag) {
        const CLI::Option* o = cmd->get_option_no_throw(flag);
        if (o != nullptr && o->count() == 0) {
          opt.*member = file_values.*member;
        }
      };
      keep(&CliOptions::problem, "--problem");
      keep(&CliOptions::method, "--method");
      keep(&CliOptions::initial_size, "--initial-size");
      keep(&CliOptions::steps, "--steps");
      keep(&CliOptions::reps, "--reps");
      keep(&CliOptions::seed, "--seed");
      keep(&CliOptions::refit_every, "--refit-every");
      keep(&CliOptions::candidates, "--candidates");
    }

    if (run->parsed()) {
      return cmd_run(opt);
    }
    if (repl->parsed()) {
      return cmd_replicate(opt);
    }
    if (comp->parsed()) {
      return cmd_compare(opt, method_a, method_b);
    }
    if (list->parsed()) {
      for (const std::string& name : cbo::builtin_names()) {
        std::cout << name << "\n";
      }
      return 0;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
