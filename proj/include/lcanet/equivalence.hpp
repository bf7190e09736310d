#pragma once

// Reduction of a hetero-functional model to classical LCA, the mechanized
// equivalence check, and the conversion/transportation decomposition.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lcanet/esn.hpp"
#include "lcanet/incidence.hpp"
#include "lcanet/lca.hpp"
#include "lcanet/model.hpp"

namespace lcanet {

struct AssumptionCheck {
  bool held = false;
  std::string diagnostic;
};

struct AssumptionDiagnostics {
  AssumptionCheck one_to_one;     // each process allocated to exactly one resource
  AssumptionCheck horizon;        // K = 2 and ΔT = 1
  AssumptionCheck instantaneous;  // U⁺[k] = U⁻[k] for all k

  bool all_held() const { return one_to_one.held && horizon.held && instantaneous.held; }
};

AssumptionDiagnostics check_assumptions(const SystemModel& model, const CapabilitySet& capabilities,
                                        const FiringSchedule& schedule, std::size_t horizon, double dt);

struct LcaReduction {
  DenseMatrix technology;     // A-block
  DenseMatrix environmental;  // B-block
  std::vector<std::size_t> product_rows;              // flat place row per A row
  std::vector<std::vector<std::size_t>> aspect_rows;  // flat place rows summed into each B row
  std::vector<std::string> product_ids;
  std::vector<std::string> aspect_ids;
  std::vector<std::string> capability_ids;
};

/// Partitions the nonzero rows of M into product rows (A-block, in capability
/// order) and aspect rows (B-block, in `aspect_operands` order; an aspect
/// present at several buffers contributes the sum of its rows). Throws
/// ValidationError for a row that is neither.
LcaReduction reduce_to_lca(const SystemModel& model, const CapabilitySet& capabilities,
                           const IncidenceStructure& structure, const std::vector<std::size_t>& aspect_operands,
                           const std::vector<std::size_t>& primary_products = {});

struct EquivalenceOptions {
  double relative_tolerance = 1e-6;
  SolverOptions solver;
};

struct EquivalenceReport {
  AssumptionDiagnostics assumptions;
  std::vector<std::string> capability_ids;
  std::vector<std::string> a_block_rows;  // place ids
  std::vector<std::string> b_block_rows;  // aspect operand ids
  Vector demand;    // Y
  Vector scaling;   // X = A⁻¹Y
  Vector aspects;   // E = BX
  Vector delta_products;  // ΔQ_B on the A-block rows
  Vector delta_aspects;   // ΔQ_B summed onto the B-block rows
  double max_abs_discrepancy = 0.0;
  double tolerance = 0.0;
  bool equivalent = false;
  std::string verdict;
};

/// Solves the classical LCA for Y, runs the net with U = X for K = 2 and
/// ΔT = 1, and compares ΔQ_B with [Y; E]. Uses the model's declared aspects.
EquivalenceReport verify_equivalence(const SystemModel& model, const Vector& demand,
                                     const EquivalenceOptions& options = {});

struct DecompositionReport {
  std::vector<std::size_t> conversion_columns;
  std::vector<std::size_t> transportation_columns;
  std::vector<std::string> capability_ids;
  Vector u_conversion;
  Vector u_transportation;
  std::vector<std::size_t> rows;  // retained flat rows
  std::vector<std::size_t> row_operands;
  std::vector<std::string> row_ids;
  std::vector<std::string> row_labels;
  Vector conversion;      // M_conv U_conv per retained row
  Vector transportation;  // M_trans U_trans per retained row
  Vector total;           // M U per retained row
};

/// Splits M's columns by process kind and evaluates both contributions.
DecompositionReport decompose_conversion_transportation(const IncidenceStructure& structure, const Vector& firing);

enum class DominanceVerdict { negligible, must_include_transportation, dominant_transportation };
std::string_view to_string(DominanceVerdict verdict);

struct DominanceOptions {
  double ratio_threshold = 0.05;
  double epsilon = std::numeric_limits<double>::min();  // guard for a vanishing conversion contribution
};

struct DominanceRow {
  std::size_t row = 0;  // index into DecompositionReport::rows
  std::string id;
  std::string label;
  double conversion = 0.0;
  double transportation = 0.0;
  double ratio = 0.0;  // |transportation| / max(|conversion|, ε)
  DominanceVerdict verdict = DominanceVerdict::negligible;
};

/// One verdict per retained row whose operand is an environmental aspect.
std::vector<DominanceRow> transportation_dominance(const DecompositionReport& report,
                                                   const std::vector<std::size_t>& aspect_operands,
                                                   const DominanceOptions& options = {});

/// Fallback aspect identification: operands that only ever sit in independent
/// buffers and are nobody's primary output.
std::vector<std::size_t> detect_aspects(const SystemModel& model, const CapabilitySet& capabilities);

}  // namespace lcanet
