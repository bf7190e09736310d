// lcanet command-line front end.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lcanet/equivalence.hpp"
#include "lcanet/error.hpp"
#include "lcanet/esn.hpp"
#include "lcanet/incidence.hpp"
#include "lcanet/io.hpp"
#include "lcanet/lca.hpp"
#include "lcanet/report.hpp"

using namespace lcanet;

namespace {

struct Options {
  std::string model;
  std::string problem;
  std::string demand;
  std::string scenario;
  std::string firing;
  std::string format;
  std::string out;
  std::string mode;
  std::optional<std::size_t> horizon;
  std::optional<double> dt;
  double threshold = DominanceOptions{}.ratio_threshold;
  bool enforce_nonnegative = false;
  bool allow_ill_conditioned = false;
  bool reduced = true;
};

ReportFormat report_format(const Options& o) {
  auto f = parse_format(o.format);
  if (!f) throw ValidationError(fmt::format("unknown format '{}' (expected json, csv or table)", o.format));
  return *f;
}

std::vector<std::size_t> model_aspects(const SystemModel& model, const CapabilitySet& caps) {
  if (!model.aspects.empty()) return model.aspects;
  auto detected = detect_aspects(model, caps);
  std::string ids;
  for (auto a : detected) ids += (ids.empty() ? "" : ", ") + model.operands[a].id;
  std::cerr << "warning: model declares no aspects; using detected aspects [" << ids << "]\n";
  return detected;
}

void require(const std::string& value, std::string_view flag) {
  if (value.empty()) throw ValidationError(fmt::format("{} is required", flag));
}

int run_validate(const Options& o) {
  if (o.model.empty() && o.problem.empty()) throw ValidationError("validate needs --model or --problem");
  std::string summary;
  if (!o.problem.empty()) {
    const auto p = parse_problem(o.problem);
    summary += fmt::format("{}: ok ({} products, {} processes, {} aspects)\n", o.problem, p.product_ids.size(),
                           p.process_ids.size(), p.aspect_ids.size());
  }
  if (!o.model.empty()) {
    const auto model = load_model(o.model);
    const auto caps = enumerate_capabilities(model);
    const auto structure = build_incidence(caps, model);
    summary += fmt::format("{}: ok ({} operands, {} processes, {} resources, {} buffers, {} capabilities)\n", o.model,
                           model.operands.size(), model.processes.size(), model.resources.size(),
                           model.buffer_count(), caps.size());
    if (!o.scenario.empty()) {
      const auto net = build_esn(structure, model);
      bind_scenario(parse_scenario(o.scenario), model, caps, net);
      summary += fmt::format("{}: ok\n", o.scenario);
    }
  }
  write_output(summary, o.out);
  return 0;
}

int run_solve(const Options& o) {
  LcaProblem problem;
  if (!o.problem.empty()) {
    problem = parse_problem(o.problem);
  } else {
    require(o.model, "--model or --problem");
    const auto model = load_model(o.model);
    const auto caps = enumerate_capabilities(model);
    problem = assemble_lca(model, caps, model_aspects(model, caps)).problem;
  }
  if (!o.demand.empty()) problem.demand = parse_demand(o.demand, problem);
  if (problem.demand.size() == 0) throw ValidationError("no demand given (use --demand or a Y row in the problem)");
  SolverOptions solver;
  solver.allow_ill_conditioned = o.allow_ill_conditioned;
  const auto result = solve_lca(problem, solver);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  emit_report(report_format(o), o.out, problem, result);
  return 0;
}

int run_simulate(const Options& o) {
  require(o.model, "--model");
  require(o.scenario, "--scenario");
  const auto model = load_model(o.model);
  const auto caps = enumerate_capabilities(model);
  const auto net = build_esn(build_incidence(caps, model), model);
  auto scenario = parse_scenario(o.scenario);
  if (o.horizon) {
    if (*o.horizon < 2) throw ValidationError("horizon must allow at least one transition (K >= 2)");
    scenario.horizon = *o.horizon;
  }
  if (o.dt) {
    if (!(*o.dt > 0.0)) throw ValidationError("time step must be positive");
    scenario.dt = *o.dt;
  }
  if (!o.mode.empty()) {
    auto mode = parse_mode(o.mode);
    if (!mode) throw ValidationError(fmt::format("unknown mode '{}' (expected instantaneous or duration)", o.mode));
    if (scenario.mode && *scenario.mode != *mode)
      throw ValidationError(fmt::format("--mode {} contradicts the scenario's mode {}", o.mode,
                                        to_string(*scenario.mode)));
    scenario.mode = mode;
  }
  auto bound = bind_scenario(scenario, model, caps, net);
  if (o.enforce_nonnegative) bound.options.step.nonnegative = NonnegativePolicy::enforce;
  const auto trajectory = bound.mode == ScenarioMode::instantaneous
                              ? simulate_instantaneous(net, bound.initial, bound.schedule, bound.options)
                              : simulate(net, bound.initial, bound.schedule, bound.options);
  for (const auto& w : trajectory.warnings) std::cerr << "warning: " << w << "\n";
  emit_report(report_format(o), o.out, net, trajectory);
  return 0;
}

int run_verify(const Options& o) {
  require(o.model, "--model");
  require(o.demand, "--demand");
  const auto model = load_model(o.model);
  const auto caps = enumerate_capabilities(model);
  const auto problem = assemble_lca(model, caps, model_aspects(model, caps)).problem;
  const Vector demand = parse_demand(o.demand, problem);
  EquivalenceOptions options;
  options.solver.allow_ill_conditioned = o.allow_ill_conditioned;
  const auto report = verify_equivalence(model, demand, options);
  emit_report(report_format(o), o.out, report);
  return report.equivalent ? 0 : 2;
}

int run_decompose(const Options& o) {
  require(o.model, "--model");
  require(o.firing, "--firing");
  if (!(o.threshold >= 0.0)) throw ValidationError("--threshold must be nonnegative");
  const auto model = load_model(o.model);
  const auto caps = enumerate_capabilities(model);
  const auto structure = build_incidence(caps, model);
  const Vector firing = parse_firing(o.firing, caps);
  const auto report = decompose_conversion_transportation(structure, firing);
  DominanceOptions dominance;
  dominance.ratio_threshold = o.threshold;
  const auto rows = transportation_dominance(report, model_aspects(model, caps), dominance);
  emit_report(report_format(o), o.out, report, rows, o.threshold);
  return 0;
}

int run_export_net(const Options& o) {
  require(o.model, "--model");
  const auto model = load_model(o.model);
  const auto caps = enumerate_capabilities(model);
  write_output(to_dot(build_esn(build_incidence(caps, model), model)), o.out);
  return 0;
}

int run_export_incidence(const Options& o) {
  require(o.model, "--model");
  const auto model = load_model(o.model);
  const auto caps = enumerate_capabilities(model);
  const auto structure = build_incidence(caps, model);
  if (o.reduced) {
    const auto reduced = eliminate_zero_rows(structure);
    write_output(render_incidence(reduced.matrix, reduced.row_ids, reduced.row_labels, structure.col_ids,
                                  structure.col_labels, report_format(o)),
                 o.out);
  } else {
    write_output(render_incidence(structure.net, structure.row_ids, structure.row_labels, structure.col_ids,
                                  structure.col_labels, report_format(o)),
                 o.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Life-cycle inventory and hetero-functional engineering system nets"};
  app.require_subcommand(1);
  Options o;
  const char* env_format = std::getenv("LCANET_FORMAT");
  o.format = env_format && *env_format ? env_format : "table";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "Output format: json, csv or table (default from LCANET_FORMAT)");
    sub->add_option("--out", o.out, "Output file (default: standard output)");
  };

  auto* validate = app.add_subcommand("validate", "Check a model, problem or scenario file");
  validate->add_option("--model", o.model, "System model (JSON)");
  validate->add_option("--problem", o.problem, "Flat A/B problem (JSON or CSV)");
  validate->add_option("--scenario,--schedule", o.scenario, "Scenario to bind against --model");
  validate->add_option("--out", o.out, "Output file");

  auto* solve = app.add_subcommand("solve", "Solve Y = AX, E = BX");
  solve->add_option("--model", o.model, "System model (JSON)");
  solve->add_option("--problem", o.problem, "Flat A/B problem (JSON or CSV)");
  solve->add_option("--demand", o.demand, "Demand file");
  solve->add_flag("--allow-ill-conditioned", o.allow_ill_conditioned, "Warn instead of failing on ill-conditioned A");
  add_common(solve);

  auto* sim = app.add_subcommand("simulate", "Run the engineering system net");
  sim->add_option("--model", o.model, "System model (JSON)")->required();
  sim->add_option("--scenario,--schedule", o.scenario, "Scenario file")->required();
  sim->add_option("--horizon", o.horizon, "Override K");
  sim->add_option("--dt", o.dt, "Override the time step");
  sim->add_option("--mode", o.mode, "instantaneous or duration");
  sim->add_flag("--enforce-nonnegative", o.enforce_nonnegative, "Fail when a buffer quantity goes negative");
  add_common(sim);

  auto* verify = app.add_subcommand("verify-equivalence", "Check the net against the classical solution");
  verify->add_option("--model", o.model, "System model (JSON)")->required();
  verify->add_option("--demand", o.demand, "Demand file")->required();
  verify->add_flag("--allow-ill-conditioned", o.allow_ill_conditioned, "Warn instead of failing on ill-conditioned A");
  add_common(verify);

  auto* decompose = app.add_subcommand("decompose", "Split M U into conversion and transportation parts");
  decompose->add_option("--model", o.model, "System model (JSON)")->required();
  decompose->add_option("--firing", o.firing, "Firing vector file")->required();
  decompose->add_option("--threshold", o.threshold, "Ratio above which transportation must be included");
  add_common(decompose);

  auto* export_net = app.add_subcommand("export-net", "Write the net as a DOT digraph");
  export_net->add_option("--model", o.model, "System model (JSON)")->required();
  export_net->add_option("--out", o.out, "Output file");

  auto* export_incidence = app.add_subcommand("export-incidence", "Write the incidence matrix M");
  export_incidence->add_option("--model", o.model, "System model (JSON)")->required();
  export_incidence->add_flag("!--full", o.reduced, "Keep all-zero rows");
  add_common(export_incidence);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*validate) return run_validate(o);
    if (*solve) return run_solve(o);
    if (*sim) return run_simulate(o);
    if (*verify) return run_verify(o);
    if (*decompose) return run_decompose(o);
    if (*export_net) return run_export_net(o);
    if (*export_incidence) return run_export_incidence(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
