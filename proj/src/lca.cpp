#include "lcanet/lca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "lcanet/error.hpp"

namespace lcanet {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void validate_problem(const LcaProblem& problem) {
  const auto n = problem.technology.rows();
  if (problem.technology.cols() != n)
    throw ValidationError(fmt::format("technology matrix is {}x{}; the number of products and processes must match",
                                      n, problem.technology.cols()));
  if (problem.environmental.size() > 0 && problem.environmental.cols() != n)
    throw ValidationError(fmt::format("environmental matrix has {} columns, expected {}",
                                      problem.environmental.cols(), n));
  auto check_len = [](std::size_t got, Eigen::Index want, std::string_view what) {
    if (got != 0 && got != static_cast<std::size_t>(want))
      throw ValidationError(fmt::format("{} has {} entries, expected {}", what, got, want));
  };
  check_len(problem.product_labels.size(), n, "product_labels");
  check_len(problem.product_ids.size(), n, "product_ids");
  check_len(problem.process_labels.size(), n, "process_labels");
  check_len(problem.process_ids.size(), n, "process_ids");
  check_len(problem.aspect_labels.size(), problem.environmental.rows(), "aspect_labels");
  check_len(problem.aspect_ids.size(), problem.environmental.rows(), "aspect_ids");
  if (problem.demand.size() != 0 && problem.demand.size() != n)
    throw ValidationError(fmt::format("demand has {} entries, expected {}", problem.demand.size(), n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if ((problem.technology.col(j).array() > 0.0).any()) continue;
    std::string name = j < static_cast<Eigen::Index>(problem.process_ids.size())
                           ? problem.process_ids[static_cast<std::size_t>(j)]
                           : fmt::format("#{}", j + 1);
    throw ValidationError(fmt::format("process {} has no positive entry (primary product) in A", name));
  }
}

AssembledLca assemble_lca(const SystemModel& model, const CapabilitySet& capabilities,
                          const std::vector<std::size_t>& aspect_operands,
                          const std::vector<std::size_t>& primary_products) {
  const std::size_t n = capabilities.size();
  if (n != model.processes.size())
    throw ValidationError(fmt::format("{} capabilities for {} processes; classical LCA needs exactly one "
                                      "capability per process",
                                      n, model.processes.size()));
  if (!primary_products.empty() && primary_products.size() != model.processes.size())
    throw ValidationError("product assignment must name one primary product per process");

  AssembledLca out;
  std::vector<bool> process_seen(model.processes.size(), false);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> product_row;
  std::map<std::size_t, std::size_t> aspect_row;
  for (std::size_t k = 0; k < aspect_operands.size(); ++k) aspect_row.emplace(aspect_operands[k], k);

  for (const auto& c : capabilities.items) {
    const auto& process = model.processes[c.process];
    if (process_seen[c.process])
      throw ValidationError(fmt::format("process '{}' has more than one capability", process.id));
    process_seen[c.process] = true;
    const std::size_t product = primary_products.empty() ? process.primary_output : primary_products[c.process];
    if (aspect_row.count(product))
      throw ValidationError(fmt::format("primary product '{}' of process '{}' is declared an environmental aspect",
                                        model.operands[product].id, process.id));
    auto inject = std::find_if(c.injects.begin(), c.injects.end(),
                               [&](const PlacedFlow& f) { return f.operand == product; });
    if (inject == c.injects.end())
      throw ValidationError(fmt::format("process '{}' has no assigned primary product among its outputs", process.id));
    if (!product_row.emplace(std::pair{inject->operand, inject->buffer}, out.products.size()).second)
      throw ValidationError(fmt::format("product '{}' is the primary product of more than one process; A would not "
                                        "be square",
                                        model.place_id(inject->operand, inject->buffer)));
    out.products.push_back({inject->operand, inject->buffer});
  }

  auto& p = out.problem;
  p.technology = DenseMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  p.environmental = DenseMatrix::Zero(static_cast<Eigen::Index>(aspect_operands.size()), static_cast<Eigen::Index>(n));
  for (const auto& c : capabilities.items) {
    const auto j = static_cast<Eigen::Index>(c.index);
    auto accumulate = [&](const PlacedFlow& f, double sign) {
      if (auto it = product_row.find({f.operand, f.buffer}); it != product_row.end()) {
        p.technology(static_cast<Eigen::Index>(it->second), j) += sign * f.weight;
      } else if (auto a = aspect_row.find(f.operand); a != aspect_row.end()) {
        p.environmental(static_cast<Eigen::Index>(a->second), j) += sign * f.weight;
      } else {
        throw ValidationError(fmt::format("capability '{}' has a flow of '{}' that is neither a primary product nor "
                                          "an environmental aspect",
                                          c.id, model.place_id(f.operand, f.buffer)));
      }
    };
    for (const auto& f : c.injects) accumulate(f, 1.0);
    for (const auto& f : c.pulls) accumulate(f, -1.0);
    p.process_ids.push_back(c.id);
    p.process_labels.push_back(c.label);
  }
  for (const auto& prod : out.products) {
    p.product_ids.push_back(model.place_id(prod.operand, prod.buffer));
    p.product_labels.push_back(model.place_label(prod.operand, prod.buffer));
    p.product_units.push_back(model.operands[prod.operand].unit);
  }
  for (auto operand : aspect_operands) {
    p.aspect_ids.push_back(model.operands[operand].id);
    p.aspect_labels.push_back(model.operands[operand].name);
    p.aspect_units.push_back(model.operands[operand].unit);
  }
  out.aspects = aspect_operands;
  return out;
}

LuDecomposition::LuDecomposition(const DenseMatrix& a) : lu_(a) {
  if (a.rows() != a.cols()) throw ValidationError("LU factorization requires a square matrix");
  const Eigen::Index n = a.rows();
  perm_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
  norm1_ = n == 0 ? 0.0 : a.cwiseAbs().colwise().sum().maxCoeff();
  const double scale = n == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
  const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * scale;

  double weakest = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index pivot_row;
    const double pivot_abs = lu_.col(k).tail(n - k).cwiseAbs().maxCoeff(&pivot_row);
    pivot_row += k;
    if (pivot_abs < weakest) {
      weakest = pivot_abs;
      if (!singular_) weakest_pivot_ = static_cast<std::size_t>(k);
    }
    if (pivot_abs <= tiny) {
      if (!singular_) weakest_pivot_ = static_cast<std::size_t>(k);
      singular_ = true;
      continue;
    }
    if (pivot_row != k) {
      lu_.row(k).swap(lu_.row(pivot_row));
      std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(pivot_row)]);
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double factor = lu_(i, k) / lu_(k, k);
      lu_(i, k) = factor;
      if (factor == 0.0) continue;
      for (Eigen::Index j = k + 1; j < n; ++j) lu_(i, j) -= factor * lu_(k, j);
    }
  }
}

Vector LuDecomposition::solve(const Vector& b) const {
  if (singular_) throw NumericalError("cannot solve with a singular factorization");
  const Eigen::Index n = lu_.rows();
  if (b.size() != n) throw ValidationError(fmt::format("right-hand side has {} entries, expected {}", b.size(), n));
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = b(perm_[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) x(i) -= lu_(i, j) * x(j);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    for (Eigen::Index j = i + 1; j < n; ++j) x(i) -= lu_(i, j) * x(j);
    x(i) /= lu_(i, i);
  }
  return x;
}

double LuDecomposition::condition_1norm() const {
  if (singular_) return std::numeric_limits<double>::infinity();
  const Eigen::Index n = lu_.rows();
  double inv_norm = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector e = Vector::Unit(n, j);
    inv_norm = std::max(inv_norm, solve(e).cwiseAbs().sum());
  }
  return norm1_ * inv_norm;
}

ScalingSolution solve_scaling(const DenseMatrix& technology, const Vector& demand, const SolverOptions& options) {
  if (technology.rows() != technology.cols())
    throw ValidationError(fmt::format("technology matrix must be square, got {}x{}", technology.rows(),
                                      technology.cols()));
  if (demand.size() != technology.rows())
    throw ValidationError(fmt::format("demand has {} entries, technology matrix has {} rows", demand.size(),
                                      technology.rows()));
  LuDecomposition lu(technology);
  if (lu.singular())
    throw SingularMatrixError(fmt::format("technology matrix is singular (vanishing pivot in column {})",
                                          lu.weakest_pivot() + 1),
                              std::numeric_limits<double>::infinity(), lu.weakest_pivot());

  ScalingSolution out;
  out.condition_estimate = lu.condition_1norm();
  if (out.condition_estimate > options.condition_limit) {
    const auto message = fmt::format("technology matrix is ill-conditioned (condition estimate {:.3e}, weakest pivot "
                                     "in column {})",
                                     out.condition_estimate, lu.weakest_pivot() + 1);
    if (!options.allow_ill_conditioned)
      throw SingularMatrixError(message, out.condition_estimate, lu.weakest_pivot());
    out.warnings.push_back(message);
  }

  out.scaling = lu.solve(demand);
  // One step of iterative refinement.
  Vector r = demand - technology * out.scaling;
  if (inf_norm(r) > 0.0) out.scaling += lu.solve(r);
  out.residual = inf_norm(technology * out.scaling - demand);
  return out;
}

Vector compute_aspects(const DenseMatrix& environmental, const Vector& scaling) {
  if (environmental.cols() != scaling.size())
    throw ValidationError(fmt::format("environmental matrix has {} columns but the scaling vector has {} entries",
                                      environmental.cols(), scaling.size()));
  Vector e = Vector::Zero(environmental.rows());
  for (Eigen::Index k = 0; k < environmental.rows(); ++k) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < environmental.cols(); ++j) sum += environmental(k, j) * scaling(j);
    e(k) = sum;
  }
  return e;
}

LcaResult solve_lca(const LcaProblem& problem, const SolverOptions& options) {
  validate_problem(problem);
  if (problem.demand.size() != problem.technology.rows())
    throw ValidationError("problem has no demand vector bound");
  auto scaling = solve_scaling(problem.technology, problem.demand, options);
  LcaResult result;
  result.scaling = std::move(scaling.scaling);
  result.residual = scaling.residual;
  result.condition_estimate = scaling.condition_estimate;
  result.warnings = std::move(scaling.warnings);
  result.aspects = problem.environmental.size() == 0 ? Vector::Zero(problem.environmental.rows())
                                                     : compute_aspects(problem.environmental, result.scaling);
  const double bound = options.residual_tolerance * std::max(inf_norm(problem.demand), 1.0);
  if (!(result.residual <= bound)) {
    result.reliable = false;
    result.warnings.push_back(
        fmt::format("residual {:.3e} exceeds tolerance {:.3e}; result flagged unreliable", result.residual, bound));
  }
  return result;
}

}  // namespace lcanet
