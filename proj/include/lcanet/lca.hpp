#pragma once

// Classical process-based life-cycle inventory: Y = A X, E = B X.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lcanet/incidence.hpp"
#include "lcanet/model.hpp"

namespace lcanet {

struct LcaProblem {
  DenseMatrix technology;     // A, |products| × |processes|, consumption negative
  DenseMatrix environmental;  // B, |aspects| × |processes|
  Vector demand;              // Y, may be empty until a demand is bound
  std::vector<std::string> product_ids;
  std::vector<std::string> product_labels;
  std::vector<std::string> product_units;
  std::vector<std::string> process_ids;
  std::vector<std::string> process_labels;
  std::vector<std::string> aspect_ids;
  std::vector<std::string> aspect_labels;
  std::vector<std::string> aspect_units;
};

/// Checks squareness, label lengths, and that every column has a positive
/// (primary product) entry. Throws ValidationError.
void validate_problem(const LcaProblem& problem);

/// Product place chosen for each capability column of an assembled problem.
struct ProductPlace {
  std::size_t operand = 0;
  std::size_t buffer = 0;
};

struct AssembledLca {
  LcaProblem problem;
  std::vector<ProductPlace> products;  // row i of A
  std::vector<std::size_t> aspects;    // operand of row k of B
};

/// Builds A and B from the capability weights. `primary_products[p]` is the
/// primary product operand of process p (defaults to each process's
/// primary_output). Product rows follow capability order; B rows follow
/// `aspect_operands`. Requires exactly one capability per process.
AssembledLca assemble_lca(const SystemModel& model, const CapabilitySet& capabilities,
                          const std::vector<std::size_t>& aspect_operands,
                          const std::vector<std::size_t>& primary_products = {});

struct SolverOptions {
  double residual_tolerance = 1e-9;  // relative to max(‖Y‖∞, 1)
  double condition_limit = 1e12;
  bool allow_ill_conditioned = false;  // downgrade the condition check to a warning
};

/// LU factorization with partial pivoting.
class LuDecomposition {
 public:
  explicit LuDecomposition(const DenseMatrix& a);

  std::size_t size() const { return static_cast<std::size_t>(lu_.rows()); }
  bool singular() const { return singular_; }
  /// Column of the first vanishing pivot, or of the smallest pivot.
  std::size_t weakest_pivot() const { return weakest_pivot_; }
  Vector solve(const Vector& b) const;
  /// Exact 1-norm condition number ‖A‖₁‖A⁻¹‖₁ (n solves).
  double condition_1norm() const;

 private:
  DenseMatrix lu_;
  std::vector<Eigen::Index> perm_;
  double norm1_ = 0.0;
  bool singular_ = false;
  std::size_t weakest_pivot_ = 0;
};

struct ScalingSolution {
  Vector scaling;  // X
  double residual = 0.0;
  double condition_estimate = 0.0;
  std::vector<std::string> warnings;
};

/// Solves A X = Y. Throws SingularMatrixError for a vanishing pivot, or for a
/// condition estimate above the limit unless allow_ill_conditioned is set.
ScalingSolution solve_scaling(const DenseMatrix& technology, const Vector& demand,
                              const SolverOptions& options = {});

/// E = B X, summed per row in column order.
Vector compute_aspects(const DenseMatrix& environmental, const Vector& scaling);

struct LcaResult {
  Vector scaling;  // X
  Vector aspects;  // E, signed: consumption negative
  double residual = 0.0;
  double condition_estimate = 0.0;
  bool reliable = true;
  std::vector<std::string> warnings;
};

LcaResult solve_lca(const LcaProblem& problem, const SolverOptions& options = {});

double inf_norm(const Vector& v);

}  // namespace lcanet
