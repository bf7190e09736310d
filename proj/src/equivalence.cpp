#include "lcanet/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "lcanet/error.hpp"

namespace lcanet {

AssumptionDiagnostics check_assumptions(const SystemModel& model, const CapabilitySet& capabilities,
                                        const FiringSchedule& schedule, std::size_t horizon, double dt) {
  AssumptionDiagnostics d;

  std::vector<std::vector<std::string>> hosts(model.processes.size());
  for (const auto& c : capabilities.items) hosts[c.process].push_back(model.resources[c.resource].id);
  std::vector<std::string> problems;
  for (std::size_t p = 0; p < hosts.size(); ++p) {
    if (hosts[p].size() == 1) continue;
    problems.push_back(hosts[p].empty()
                           ? fmt::format("process '{}' has no capability", model.processes[p].id)
                           : fmt::format("process '{}' is allocated to {} resources ({})", model.processes[p].id,
                                         hosts[p].size(), fmt::join(hosts[p], ", ")));
  }
  d.one_to_one.held = problems.empty();
  d.one_to_one.diagnostic = problems.empty() ? "each process maps to exactly one capability"
                                             : fmt::format("{}", fmt::join(problems, "; "));

  d.horizon.held = horizon == 2 && dt == 1.0;
  d.horizon.diagnostic = fmt::format("K={}, dT={}{}", horizon, dt, d.horizon.held ? "" : " (requires K=2, dT=1)");

  if (!schedule.gates.empty()) {
    d.instantaneous.held = false;
    d.instantaneous.diagnostic = "schedule contains gated duration firings";
  } else if (auto k = schedule.first_mismatch()) {
    d.instantaneous.held = false;
    d.instantaneous.diagnostic = fmt::format("U+ differs from U- at k={}", *k);
  } else {
    d.instantaneous.held = true;
    d.instantaneous.diagnostic = "U+ equals U- at every step";
  }
  return d;
}

LcaReduction reduce_to_lca(const SystemModel& model, const CapabilitySet& capabilities,
                           const IncidenceStructure& structure, const std::vector<std::size_t>& aspect_operands,
                           const std::vector<std::size_t>& primary_products) {
  std::vector<std::size_t> per_process(model.processes.size(), 0);
  for (const auto& c : capabilities.items) ++per_process[c.process];
  for (std::size_t p = 0; p < per_process.size(); ++p)
    if (per_process[p] != 1)
      throw ValidationError(fmt::format("process '{}' has {} capabilities; reduction to LCA needs exactly one",
                                        model.processes[p].id, per_process[p]));

  LcaReduction out;
  std::map<std::size_t, std::size_t> product_of_row;
  for (const auto& c : capabilities.items) {
    const std::size_t product =
        primary_products.empty() ? model.processes[c.process].primary_output : primary_products.at(c.process);
    std::optional<std::size_t> row;
    for (const auto& f : c.injects)
      if (f.operand == product) row = structure.places.flat(f.operand, f.buffer);
    if (!row)
      throw ValidationError(fmt::format("capability '{}' does not inject its primary product '{}'", c.id,
                                        model.operands[product].id));
    if (!product_of_row.emplace(*row, out.product_rows.size()).second)
      throw ValidationError(fmt::format("place '{}' is the primary product of more than one capability",
                                        structure.row_ids[*row]));
    out.product_rows.push_back(*row);
    out.product_ids.push_back(structure.row_ids[*row]);
    out.capability_ids.push_back(c.id);
  }

  std::map<std::size_t, std::size_t> aspect_index;
  for (std::size_t k = 0; k < aspect_operands.size(); ++k) {
    aspect_index.emplace(aspect_operands[k], k);
    out.aspect_ids.push_back(model.operands[aspect_operands[k]].id);
  }
  out.aspect_rows.resize(aspect_operands.size());

  const ReducedIncidence reduced = eliminate_zero_rows(structure);
  for (std::size_t r : reduced.retained_rows) {
    if (product_of_row.count(r)) continue;
    auto [operand, buffer] = structure.places.place(r);
    auto a = aspect_index.find(operand);
    if (a == aspect_index.end())
      throw ValidationError(fmt::format("row '{}' is neither a primary product nor an environmental aspect",
                                        structure.row_ids[r]));
    out.aspect_rows[a->second].push_back(r);
  }

  const DenseMatrix m = to_dense(structure.net);
  const auto n = static_cast<Eigen::Index>(capabilities.size());
  out.technology = DenseMatrix::Zero(static_cast<Eigen::Index>(out.product_rows.size()), n);
  for (std::size_t i = 0; i < out.product_rows.size(); ++i)
    out.technology.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(out.product_rows[i]));
  out.environmental = DenseMatrix::Zero(static_cast<Eigen::Index>(aspect_operands.size()), n);
  for (std::size_t k = 0; k < out.aspect_rows.size(); ++k)
    for (std::size_t r : out.aspect_rows[k])
      out.environmental.row(static_cast<Eigen::Index>(k)) += m.row(static_cast<Eigen::Index>(r));
  return out;
}

EquivalenceReport verify_equivalence(const SystemModel& model, const Vector& demand,
                                     const EquivalenceOptions& options) {
  EquivalenceReport report;
  const CapabilitySet capabilities = enumerate_capabilities(model);
  for (const auto& c : capabilities.items) report.capability_ids.push_back(c.id);
  report.demand = demand;

  // The run uses U = X for one step; the schedule shape is what the
  // assumptions are checked against.
  const FiringSchedule probe = empty_schedule(capabilities.size(), 2);
  report.assumptions = check_assumptions(model, capabilities, probe, 2, 1.0);
  if (!report.assumptions.one_to_one.held) {
    report.verdict = "not applicable: " + report.assumptions.one_to_one.diagnostic;
    return report;
  }

  // Classical route.
  const std::vector<std::size_t> aspects = model.aspects.empty() ? detect_aspects(model, capabilities) : model.aspects;
  const AssembledLca classical = assemble_lca(model, capabilities, aspects);
  if (demand.size() != classical.problem.technology.rows())
    throw ValidationError(fmt::format("demand has {} entries, the model has {} products", demand.size(),
                                      classical.problem.technology.rows()));
  ScalingSolution solution = solve_scaling(classical.problem.technology, demand, options.solver);
  report.scaling = solution.scaling;
  report.aspects = compute_aspects(classical.problem.environmental, report.scaling);

  // Net route.
  const IncidenceStructure structure = build_incidence(capabilities, model);
  const LcaReduction reduction = reduce_to_lca(model, capabilities, structure, aspects);
  report.a_block_rows = reduction.product_ids;
  report.b_block_rows = reduction.aspect_ids;

  const EngineeringSystemNet net = build_esn(structure, model);
  const FiringSchedule schedule = instantaneous_schedule({report.scaling}, 2);
  report.assumptions = check_assumptions(model, capabilities, schedule, schedule.horizon, 1.0);
  const Trajectory trajectory = simulate(net, zero_state(net, 1.0), schedule);
  const Vector delta = trajectory.delta_q_buffer();

  report.delta_products = Vector::Zero(demand.size());
  for (std::size_t i = 0; i < reduction.product_rows.size(); ++i)
    report.delta_products(static_cast<Eigen::Index>(i)) = delta(static_cast<Eigen::Index>(reduction.product_rows[i]));
  report.delta_aspects = Vector::Zero(static_cast<Eigen::Index>(reduction.aspect_rows.size()));
  for (std::size_t k = 0; k < reduction.aspect_rows.size(); ++k)
    for (std::size_t r : reduction.aspect_rows[k])
      report.delta_aspects(static_cast<Eigen::Index>(k)) += delta(static_cast<Eigen::Index>(r));

  // Places outside both blocks must not move.
  std::set<std::size_t> covered(reduction.product_rows.begin(), reduction.product_rows.end());
  for (const auto& rows : reduction.aspect_rows) covered.insert(rows.begin(), rows.end());
  double stray = 0.0;
  for (Eigen::Index r = 0; r < delta.size(); ++r)
    if (!covered.count(static_cast<std::size_t>(r))) stray = std::max(stray, std::abs(delta(r)));

  const double product_gap = inf_norm(report.delta_products - demand);
  const double aspect_gap = inf_norm(report.delta_aspects - report.aspects);
  report.max_abs_discrepancy = std::max({product_gap, aspect_gap, stray});
  report.tolerance = options.relative_tolerance * std::max({1.0, inf_norm(demand), inf_norm(report.aspects)});

  const bool within = report.max_abs_discrepancy <= report.tolerance;
  report.equivalent = report.assumptions.all_held() && within;
  if (report.equivalent)
    report.verdict = "equivalent";
  else if (!report.assumptions.all_held())
    report.verdict = "not applicable: assumptions not held";
  else
    report.verdict = fmt::format("not equivalent: discrepancy {:.3e} exceeds {:.3e}", report.max_abs_discrepancy,
                                 report.tolerance);
  return report;
}

DecompositionReport decompose_conversion_transportation(const IncidenceStructure& structure, const Vector& firing) {
  if (static_cast<std::size_t>(firing.size()) != structure.capabilities)
    throw ValidationError(fmt::format("firing vector has {} entries, expected {}", firing.size(),
                                      structure.capabilities));
  DecompositionReport r;
  r.capability_ids = structure.col_ids;
  for (std::size_t c = 0; c < structure.capabilities; ++c)
    (structure.col_kinds[c] == ProcessKind::transportation ? r.transportation_columns : r.conversion_columns)
        .push_back(c);

  const ReducedIncidence reduced = eliminate_zero_rows(structure);
  r.rows = reduced.retained_rows;
  r.row_ids = reduced.row_ids;
  r.row_labels = reduced.row_labels;
  for (std::size_t row : r.rows) r.row_operands.push_back(structure.places.place(row).first);

  auto block = [&](const std::vector<std::size_t>& columns, Vector& u_block) {
    u_block.resize(static_cast<Eigen::Index>(columns.size()));
    Vector contribution = Vector::Zero(reduced.matrix.rows());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(columns[j]);
      u_block(static_cast<Eigen::Index>(j)) = firing(c);
      for (SparseMatrix::InnerIterator it(reduced.matrix, c); it; ++it) contribution(it.row()) += it.value() * firing(c);
    }
    return contribution;
  };
  r.conversion = block(r.conversion_columns, r.u_conversion);
  r.transportation = block(r.transportation_columns, r.u_transportation);
  r.total = reduced.matrix * firing;
  return r;
}

std::string_view to_string(DominanceVerdict verdict) {
  switch (verdict) {
    case DominanceVerdict::negligible: return "negligible";
    case DominanceVerdict::must_include_transportation: return "must include transportation";
    case DominanceVerdict::dominant_transportation: return "dominant transportation";
  }
  return "?";
}

std::vector<DominanceRow> transportation_dominance(const DecompositionReport& report,
                                                   const std::vector<std::size_t>& aspect_operands,
                                                   const DominanceOptions& options) {
  const std::set<std::size_t> aspects(aspect_operands.begin(), aspect_operands.end());
  std::vector<DominanceRow> out;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (!aspects.count(report.row_operands[i])) continue;
    DominanceRow row;
    row.row = i;
    row.id = report.row_ids[i];
    row.label = report.row_labels[i];
    row.conversion = report.conversion(static_cast<Eigen::Index>(i));
    row.transportation = report.transportation(static_cast<Eigen::Index>(i));
    const double conv = std::abs(row.conversion);
    const double trans = std::abs(row.transportation);
    row.ratio = std::min(trans / std::max(conv, options.epsilon), std::numeric_limits<double>::max());
    if (row.ratio < options.ratio_threshold)
      row.verdict = DominanceVerdict::negligible;
    else if (conv < options.epsilon)
      row.verdict = DominanceVerdict::dominant_transportation;
    else
      row.verdict = DominanceVerdict::must_include_transportation;
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::size_t> detect_aspects(const SystemModel& model, const CapabilitySet& capabilities) {
  std::vector<bool> outside_buffers(model.operands.size(), false);
  std::vector<bool> seen(model.operands.size(), false);
  for (const auto& c : capabilities.items) {
    for (const auto* flows : {&c.pulls, &c.injects})
      for (const auto& f : *flows) {
        seen[f.operand] = true;
        if (model.buffer_resource(f.buffer).kind != ResourceKind::independent_buffer) outside_buffers[f.operand] = true;
      }
  }
  for (const auto& p : model.processes) outside_buffers[p.primary_output] = true;
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < model.operands.size(); ++l)
    if (seen[l] && !outside_buffers[l]) out.push_back(l);
  return out;
}

}  // namespace lcanet
