#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cfcheck/experiments.hpp"
#include "cfcheck/model_io.hpp"

namespace {

constexpr int kExitTrue = 0;
constexpr int kExitFalse = 1;
constexpr int kExitUsage = 2;
constexpr int kExitUndecided = 3;
constexpr int kExitParse = 4;
constexpr int kExitTrace = 5;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CFCHECK_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw cfcheck::Error("CFCHECK_SEED is not an integer");
    }
  }
  return 0;
}

cfcheck::AbductionMethod parse_method(const std::string& name) {
  if (name == "exact") return cfcheck::AbductionMethod::Exact;
  if (name == "rejection") return cfcheck::AbductionMethod::Rejection;
  throw CLI::ValidationError("--method", "must be 'rejection' or 'exact'");
}

std::string registered_names(const cfcheck::PolicyRegistry& registry) {
  std::string out;
  for (const auto& [name, policy] : registry) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out.empty() ? "(none)" : out;
}

struct CommonFlags {
  std::string model_file;
  std::string trace_file;
  std::string out;
  long n = 2000;
  int m = 20;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string method = "exact";

  void add_to(CLI::App& app, bool with_trace) {
    app.add_option("--model", model_file, "model JSON file")->required();
    if (with_trace)
      app.add_option("--trace", trace_file, "trace JSON file");
    app.add_option("--n", n, "rollouts per estimate");
    app.add_option("--m", m, "posterior contexts per observed path");
    app.add_option("--alpha", alpha, "significance level");
    app.add_option("--seed", seed, "RNG seed (default: $CFCHECK_SEED or 0)");
    app.add_option("--jobs", jobs, "parallelism degree");
    app.add_option("--method", method, "abduction method: rejection|exact");
    app.add_option("--out", out, "output path");
  }

  cfcheck::CheckParams params() const {
    cfcheck::CheckParams p;
    p.n = n;
    p.m = m;
    p.alpha = alpha;
    p.seed = seed.value_or(default_seed());
    p.jobs = jobs;
    p.method = parse_method(method);
    return p;
  }
};

std::string indexed_name(const std::string& base, int index, int count) {
  if (count == 1) return base;
  const std::size_t dot = base.rfind('.');
  if (dot == std::string::npos || dot == 0)
    return base + "_" + std::to_string(index);
  return base.substr(0, dot) + "_" + std::to_string(index) + base.substr(dot);
}

int cmd_simulate(const CommonFlags& flags, const std::string& policy_name,
                 int length, int count) {
  const cfcheck::Model model = cfcheck::load_model(flags.model_file);
  auto it = model.policies.find(policy_name);
  if (it == model.policies.end()) {
    std::cerr << "unknown policy '" << policy_name
              << "'; registered: " << registered_names(model.policies) << "\n";
    return kExitUsage;
  }
  const std::uint64_t seed = flags.seed.value_or(default_seed());
  for (int i = 0; i < count; ++i) {
    cfcheck::Rng rng = cfcheck::make_rng(seed, static_cast<std::uint64_t>(i));
    cfcheck::Trace trace;
    trace.policy_name = policy_name;
    trace.path = cfcheck::simulate_path(*model.mdp, it->second, std::nullopt,
                                        length, rng);
    if (flags.out.empty()) {
      std::cout << cfcheck::trace_to_json(*model.mdp, trace) << "\n";
    } else {
      cfcheck::save_trace(indexed_name(flags.out, i, count), *model.mdp,
                          trace);
    }
  }
  return kExitTrue;
}

int cmd_check(const CommonFlags& flags, const std::string& formula_text) {
  const cfcheck::Model model = cfcheck::load_model(flags.model_file);

  cfcheck::StatePtr formula;
  try {
    formula = cfcheck::parse_formula(formula_text);
  } catch (const cfcheck::ParseError& e) {
    std::cerr << e.what() << " (byte " << e.offset << ")\n";
    return kExitParse;
  }

  cfcheck::Path tau;
  cfcheck::Policy base;
  if (!flags.trace_file.empty()) {
    const cfcheck::Trace trace =
        cfcheck::load_trace(flags.trace_file, *model.mdp);
    auto it = model.policies.find(trace.policy_name);
    if (it == model.policies.end()) {
      std::cerr << "trace policy '" << trace.policy_name
                << "' not registered; registered: "
                << registered_names(model.policies) << "\n";
      return kExitUsage;
    }
    base = it->second;
    tau = trace.path;
  } else {
    if (model.policies.empty()) {
      std::cerr << "model registers no policies and no --trace was given\n";
      return kExitUsage;
    }
    base = model.policies.begin()->second;
    // Singleton path at the init state stands in for a missing observation.
    int init_state = 0;
    for (int s = 0; s < model.mdp->num_states(); ++s)
      if (model.mdp->init[static_cast<std::size_t>(s)] > 0.0) {
        init_state = s;
        break;
      }
    tau = cfcheck::Path({cfcheck::Step{init_state, base(init_state)}});
  }

  const cfcheck::CheckParams params = flags.params();
  cfcheck::ScmConfig scm{model.mdp, base,
                         cfcheck::required_scm_horizon(formula)};
  cfcheck::check_consistency(scm, tau);
  const cfcheck::Verdict verdict =
      cfcheck::check_state_formula(scm, tau, formula, params, model.policies);

  const std::string doc =
      cfcheck::verdict_to_json(formula_text, verdict, params.seed);
  if (flags.out.empty()) {
    std::cout << doc << "\n";
  } else {
    std::ofstream out(flags.out);
    out << doc << "\n";
  }
  if (verdict.quantitative) return kExitTrue;
  switch (verdict.truth) {
    case cfcheck::Truth::True: return kExitTrue;
    case cfcheck::Truth::False: return kExitFalse;
    case cfcheck::Truth::Undecided: return kExitUndecided;
  }
  return kExitUndecided;
}

int cmd_abduct(const CommonFlags& flags, long n) {
  const cfcheck::Model model = cfcheck::load_model(flags.model_file);
  const cfcheck::Trace trace =
      cfcheck::load_trace(flags.trace_file, *model.mdp);
  auto it = model.policies.find(trace.policy_name);
  if (it == model.policies.end()) {
    std::cerr << "trace policy '" << trace.policy_name
              << "' not registered; registered: "
              << registered_names(model.policies) << "\n";
    return kExitUsage;
  }
  cfcheck::ScmConfig scm{model.mdp, it->second, trace.path.length()};
  cfcheck::Rng rng = cfcheck::make_rng(flags.seed.value_or(default_seed()), 0);
  const std::vector<cfcheck::GumbelContext> contexts = cfcheck::abduct_path(
      scm, trace.path, static_cast<int>(n), parse_method(flags.method), rng);
  if (flags.out.empty()) {
    cfcheck::write_context_csv(std::cout, *model.mdp, contexts);
  } else {
    std::ofstream out(flags.out);
    cfcheck::write_context_csv(out, *model.mdp, contexts);
  }
  return kExitTrue;
}

int cmd_experiment(const CommonFlags& flags, cfcheck::ExperimentConfig cfg) {
  cfg.seed = flags.seed.value_or(default_seed());
  cfg.jobs = flags.jobs;
  cfg.method = parse_method(flags.method);
  if (!flags.model_file.empty()) {
    const cfcheck::Model model = cfcheck::load_model(flags.model_file);
    if (!model.grid) {
      std::cerr << "experiments need a gridworld model\n";
      return kExitUsage;
    }
    cfg.grid = *model.grid;
  }
  const cfcheck::ExperimentReport report = cfcheck::run_experiment(cfg);
  if (!flags.out.empty()) {
    std::ofstream out(flags.out);
    cfcheck::write_experiment_csv(out, report);
  }
  cfcheck::write_experiment_summary(std::cout, report);
  return kExitTrue;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statistical checker for causal/counterfactual temporal "
               "properties of MDPs"};
  app.require_subcommand(1);

  CommonFlags sim_flags, check_flags, abduct_flags, exp_flags;
  std::string policy_name, formula_text;
  int length = 10, count = 1;
  long abduct_n = 20;
  cfcheck::ExperimentConfig exp_cfg;

  CLI::App* sim = app.add_subcommand("simulate", "sample traces of a policy");
  sim_flags.add_to(*sim, false);
  sim->add_option("--policy", policy_name, "registered policy name")
      ->required();
  sim->add_option("--length", length, "pairs per trace");
  sim->add_option("--count", count, "number of traces");

  CLI::App* check = app.add_subcommand("check", "check a formula");
  check_flags.add_to(*check, true);
  check->add_option("--formula", formula_text, "formula text")->required();

  CLI::App* abduct =
      app.add_subcommand("abduct", "dump posterior noise contexts as CSV");
  abduct_flags.add_to(*abduct, true);
  abduct->get_option("--trace")->required();
  abduct->add_option("--samples", abduct_n, "number of posterior contexts");

  CLI::App* experiment =
      app.add_subcommand("experiment", "run a named grid-world experiment");
  exp_flags.add_to(*experiment, false);
  experiment->get_option("--model")->required(false);
  experiment
      ->add_option("--name", exp_cfg.name,
                   "sanity|cf_offset1|cf_offset2|beyond")
      ->required();
  experiment->add_option("--reps", exp_cfg.reps, "repetitions");
  experiment->add_option("--paths", exp_cfg.paths, "observed paths per rep");
  experiment->add_option("--contexts", exp_cfg.contexts,
                         "posterior contexts per path");
  experiment->add_option("--T", exp_cfg.T, "until bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags, policy_name, length, count);
    if (check->parsed()) return cmd_check(check_flags, formula_text);
    if (abduct->parsed()) return cmd_abduct(abduct_flags, abduct_n);
    return cmd_experiment(exp_flags, exp_cfg);
  } catch (const cfcheck::TraceError& e) {
    std::cerr << "trace error: " << e.what();
    if (e.position > 0) std::cerr << " (position " << e.position << ")";
    std::cerr << "\n";
    return kExitTrace;
  } catch (const cfcheck::ParseError& e) {
    std::cerr << e.what() << " (byte " << e.offset << ")\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
