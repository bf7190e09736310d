#pragma once

// Hetero-functional incidence tensors and their matricized, weighted form.

#include <array>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lcanet/model.hpp"

namespace lcanet {

using SparseMatrix = Eigen::SparseMatrix<double>;  // column-major
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Sparse third-order {0,1} tensor over (operand, buffer, capability).
class BinaryTensor3 {
 public:
  using Index = std::array<std::size_t, 3>;

  BinaryTensor3() = default;
  BinaryTensor3(std::size_t operands, std::size_t buffers, std::size_t capabilities)
      : dims_{operands, buffers, capabilities} {}

  const Index& dims() const { return dims_; }
  void set(std::size_t operand, std::size_t buffer, std::size_t capability);
  int operator()(std::size_t operand, std::size_t buffer, std::size_t capability) const;
  std::size_t nnz() const { return ones_.size(); }
  const std::set<Index>& ones() const { return ones_; }

 private:
  Index dims_{0, 0, 0};
  std::set<Index> ones_;
};

/// Row-major flattening of (operand i, buffer y) onto row i·|B_S| + y.
struct PlaceIndex {
  std::size_t operands = 0;
  std::size_t buffers = 0;

  std::size_t size() const { return operands * buffers; }
  std::size_t flat(std::size_t operand, std::size_t buffer) const { return operand * buffers + buffer; }
  std::pair<std::size_t, std::size_t> place(std::size_t row) const { return {row / buffers, row % buffers}; }
};

struct IncidenceStructure {
  PlaceIndex places;
  std::size_t capabilities = 0;
  BinaryTensor3 binary_neg;
  BinaryTensor3 binary_pos;
  SparseMatrix weighted_neg;  // M⁻, |L||B_S| × |E_S|
  SparseMatrix weighted_pos;  // M⁺
  SparseMatrix net;           // M = M⁺ − M⁻
  std::vector<std::string> row_ids;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_ids;
  std::vector<std::string> col_labels;
  std::vector<ProcessKind> col_kinds;
};

/// Throws ValidationError when a capability lists the same (operand, buffer)
/// twice on one side, since the arc weight would be ambiguous.
IncidenceStructure build_incidence(const CapabilitySet& capabilities, const SystemModel& model);

struct ReducedIncidence {
  SparseMatrix matrix;
  std::vector<std::size_t> retained_rows;  // flat rows of the full structure, ascending
  std::vector<std::string> row_ids;
  std::vector<std::string> row_labels;
};

/// M restricted to rows holding at least one nonzero.
ReducedIncidence eliminate_zero_rows(const IncidenceStructure& structure);

DenseMatrix to_dense(const SparseMatrix& m);

}  // namespace lcanet
