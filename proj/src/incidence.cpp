#include "lcanet/incidence.hpp"

#include <fmt/format.h>

#include "lcanet/error.hpp"

namespace lcanet {

void BinaryTensor3::set(std::size_t operand, std::size_t buffer, std::size_t capability) {
  if (operand >= dims_[0] || buffer >= dims_[1] || capability >= dims_[2])
    throw std::out_of_range("BinaryTensor3::set index out of range");
  ones_.insert({operand, buffer, capability});
}

int BinaryTensor3::operator()(std::size_t operand, std::size_t buffer, std::size_t capability) const {
  return ones_.count({operand, buffer, capability}) ? 1 : 0;
}

namespace {

void add_side(const Capability& c, const std::vector<PlacedFlow>& flows, std::string_view side,
              const SystemModel& model, const PlaceIndex& places, BinaryTensor3& tensor,
              std::vector<Eigen::Triplet<double>>& triplets) {
  for (const auto& f : flows) {
    if (tensor(f.operand, f.buffer, c.index))
      throw ValidationError(fmt::format("capability '{}' {} operand '{}' at buffer '{}' more than once", c.id, side,
                                        model.operands[f.operand].id, model.buffer_resource(f.buffer).id));
    if (!(f.weight > 0.0))
      throw ValidationError(fmt::format("capability '{}' has a non-positive weight on operand '{}'", c.id,
                                        model.operands[f.operand].id));
    tensor.set(f.operand, f.buffer, c.index);
    triplets.emplace_back(static_cast<int>(places.flat(f.operand, f.buffer)), static_cast<int>(c.index), f.weight);
  }
}

}  // namespace

IncidenceStructure build_incidence(const CapabilitySet& capabilities, const SystemModel& model) {
  IncidenceStructure s;
  s.places = {model.operands.size(), model.buffer_count()};
  s.capabilities = capabilities.size();
  s.binary_neg = BinaryTensor3(s.places.operands, s.places.buffers, s.capabilities);
  s.binary_pos = BinaryTensor3(s.places.operands, s.places.buffers, s.capabilities);

  std::vector<Eigen::Triplet<double>> neg, pos;
  for (const auto& c : capabilities.items) {
    add_side(c, c.pulls, "pulls", model, s.places, s.binary_neg, neg);
    add_side(c, c.injects, "injects", model, s.places, s.binary_pos, pos);
    s.col_ids.push_back(c.id);
    s.col_labels.push_back(c.label);
    s.col_kinds.push_back(model.processes[c.process].kind);
  }

  const auto rows = static_cast<Eigen::Index>(s.places.size());
  const auto cols = static_cast<Eigen::Index>(s.capabilities);
  s.weighted_neg.resize(rows, cols);
  s.weighted_neg.setFromTriplets(neg.begin(), neg.end());
  s.weighted_pos.resize(rows, cols);
  s.weighted_pos.setFromTriplets(pos.begin(), pos.end());
  s.net = SparseMatrix(s.weighted_pos - s.weighted_neg).pruned();

  for (std::size_t row = 0; row < s.places.size(); ++row) {
    auto [operand, buffer] = s.places.place(row);
    s.row_ids.push_back(model.place_id(operand, buffer));
    s.row_labels.push_back(model.place_label(operand, buffer));
  }
  return s;
}

ReducedIncidence eliminate_zero_rows(const IncidenceStructure& structure) {
  ReducedIncidence out;
  const SparseMatrix& m = structure.net;
  std::vector<bool> nonzero(static_cast<std::size_t>(m.rows()), false);
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      if (it.value() != 0.0) nonzero[static_cast<std::size_t>(it.row())] = true;

  std::vector<Eigen::Index> new_index(nonzero.size(), -1);
  for (std::size_t row = 0; row < nonzero.size(); ++row) {
    if (!nonzero[row]) continue;
    new_index[row] = static_cast<Eigen::Index>(out.retained_rows.size());
    out.retained_rows.push_back(row);
    out.row_ids.push_back(structure.row_ids[row]);
    out.row_labels.push_back(structure.row_labels[row]);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      if (it.value() != 0.0) triplets.emplace_back(new_index[static_cast<std::size_t>(it.row())], c, it.value());
  out.matrix.resize(static_cast<Eigen::Index>(out.retained_rows.size()), m.cols());
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

DenseMatrix to_dense(const SparseMatrix& m) { return DenseMatrix(m); }

}  // namespace lcanet
