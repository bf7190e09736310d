#include "lcanet/esn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "lcanet/error.hpp"

namespace lcanet {

std::size_t EngineeringSystemNet::active_place_count() const {
  return static_cast<std::size_t>(std::count(active_places.begin(), active_places.end(), true));
}

namespace {

std::vector<bool> touched_rows(const SparseMatrix& pos, const SparseMatrix& neg) {
  std::vector<bool> active(static_cast<std::size_t>(pos.rows()), false);
  for (const SparseMatrix* m : {&pos, &neg})
    for (Eigen::Index c = 0; c < m->outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(*m, c); it; ++it)
        if (it.value() != 0.0) active[static_cast<std::size_t>(it.row())] = true;
  return active;
}

// Sparse matrix-vector product accumulated per row in ascending column order.
Vector multiply(const SparseMatrix& m, const Vector& u) {
  Vector out = Vector::Zero(m.rows());
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    const double uc = u(c);
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) out(it.row()) += it.value() * uc;
  }
  return out;
}

bool is_integral(double x) { return std::isfinite(x) && std::floor(x) == x; }

void check_firing(const Vector& u, std::size_t transitions, std::string_view name, const StepOptions& options) {
  if (static_cast<std::size_t>(u.size()) != transitions)
    throw ValidationError(fmt::format("{} has {} entries, expected {}", name, u.size(), transitions));
  for (Eigen::Index c = 0; c < u.size(); ++c) {
    if (!std::isfinite(u(c)) || u(c) < 0.0)
      throw ValidationError(fmt::format("{} entry {} is {}; firing vectors must be finite and nonnegative", name,
                                        c + 1, u(c)));
    if (options.integer_mode && !is_integral(u(c)))
      throw ValidationError(fmt::format("{} entry {} is {}; integer mode requires integral firings", name, c + 1, u(c)));
  }
}

void check_state(const EngineeringSystemNet& net, const EsnState& state) {
  if (static_cast<std::size_t>(state.q_buffer.size()) != net.place_count() ||
      static_cast<std::size_t>(state.q_capability.size()) != net.transition_count())
    throw ValidationError(fmt::format("state has {}+{} entries, net has {} places and {} transitions",
                                      state.q_buffer.size(), state.q_capability.size(), net.place_count(),
                                      net.transition_count()));
  if (!(state.dt > 0.0) || !std::isfinite(state.dt))
    throw ValidationError(fmt::format("time step must be positive and finite, got {}", state.dt));
}

SparseMatrix with_overrides(const SparseMatrix& base, std::span<const WeightOverride> overrides,
                            FlowDirection direction, const EngineeringSystemNet& net) {
  SparseMatrix m = base;
  for (const auto& o : overrides) {
    if (o.direction != direction) continue;
    if (o.capability >= net.transition_count() || o.place >= net.place_count())
      throw ValidationError("weight override indexes outside the net");
    if (base.coeff(static_cast<Eigen::Index>(o.place), static_cast<Eigen::Index>(o.capability)) == 0.0)
      throw ValidationError(fmt::format("weight override on '{}' / '{}' ({}) targets an arc that does not exist",
                                        net.transition_ids[o.capability], net.place_ids[o.place],
                                        to_string(o.direction)));
    if (!(o.weight > 0.0) || !std::isfinite(o.weight))
      throw ValidationError("weight overrides must be positive and finite");
    m.coeffRef(static_cast<Eigen::Index>(o.place), static_cast<Eigen::Index>(o.capability)) = o.weight;
  }
  return m;
}

void check_overrides_k(std::span<const WeightOverride> overrides, std::size_t k) {
  for (const auto& o : overrides)
    if (o.k != k) throw ValidationError(fmt::format("weight override for k={} applied at k={}", o.k, k));
}

// Shared by step and simplified_step so both produce identical bits.
EsnState advance_places(const EngineeringSystemNet& net, const EsnState& state, const Vector& u_minus,
                        const Vector& u_plus, const StepOptions& options, std::span<const WeightOverride> overrides,
                        std::vector<std::string>* warnings) {
  check_overrides_k(overrides, state.k);
  Vector inflow, outflow;
  if (overrides.empty()) {
    inflow = multiply(net.pos, u_plus);
    outflow = multiply(net.neg, u_minus);
  } else {
    inflow = multiply(with_overrides(net.pos, overrides, FlowDirection::inject, net), u_plus);
    outflow = multiply(with_overrides(net.neg, overrides, FlowDirection::pull, net), u_minus);
  }
  EsnState next = state;
  const double dt = state.dt;
  for (Eigen::Index r = 0; r < next.q_buffer.size(); ++r)
    next.q_buffer(r) = state.q_buffer(r) + inflow(r) * dt - outflow(r) * dt;
  next.k = state.k + 1;

  if (options.nonnegative != NonnegativePolicy::allow) {
    for (Eigen::Index r = 0; r < next.q_buffer.size(); ++r) {
      if (next.q_buffer(r) >= 0.0) continue;
      const auto message = fmt::format("Q_B of place '{}' becomes {} at k={}", net.place_ids[static_cast<std::size_t>(r)],
                                       next.q_buffer(r), next.k);
      if (options.nonnegative == NonnegativePolicy::enforce) throw NumericalError(message);
      if (warnings) warnings->push_back(message);
    }
  }
  return next;
}

}  // namespace

EngineeringSystemNet build_esn(const IncidenceStructure& structure, const SystemModel& model) {
  if (structure.places.operands != model.operands.size() || structure.places.buffers != model.buffer_count())
    throw ValidationError("incidence structure does not belong to this model");
  EngineeringSystemNet net;
  net.places = structure.places;
  net.place_ids = structure.row_ids;
  net.place_labels = structure.row_labels;
  net.transition_ids = structure.col_ids;
  net.transition_labels = structure.col_labels;
  net.transition_kinds = structure.col_kinds;
  net.pos = structure.weighted_pos;
  net.neg = structure.weighted_neg;
  net.net = structure.net;
  net.active_places = touched_rows(net.pos, net.neg);
  return net;
}

EngineeringSystemNet make_net(const SparseMatrix& pos, const SparseMatrix& neg) {
  if (pos.rows() != neg.rows() || pos.cols() != neg.cols())
    throw ValidationError("M+ and M- must have the same shape");
  for (const SparseMatrix* m : {&pos, &neg})
    for (Eigen::Index c = 0; c < m->outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(*m, c); it; ++it)
        if (it.value() < 0.0) throw ValidationError("arc weights must be nonnegative");
  EngineeringSystemNet net;
  net.places = {static_cast<std::size_t>(pos.rows()), 1};
  net.pos = pos;
  net.neg = neg;
  net.pos.prune(0.0);
  net.neg.prune(0.0);
  net.net = SparseMatrix(net.pos - net.neg).pruned();
  for (Eigen::Index r = 0; r < pos.rows(); ++r) {
    net.place_ids.push_back(fmt::format("p{}", r + 1));
    net.place_labels.push_back(net.place_ids.back());
  }
  for (Eigen::Index c = 0; c < pos.cols(); ++c) {
    net.transition_ids.push_back(fmt::format("t{}", c + 1));
    net.transition_labels.push_back(net.transition_ids.back());
    net.transition_kinds.push_back(ProcessKind::transformation);
  }
  net.active_places = touched_rows(net.pos, net.neg);
  return net;
}

namespace {
std::string dot_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  return out;
}
}  // namespace

std::string to_dot(const EngineeringSystemNet& net) {
  std::ostringstream os;
  os << "digraph esn {\n  rankdir=LR;\n";
  for (std::size_t r = 0; r < net.place_count(); ++r) {
    if (!net.active_places[r]) continue;
    os << fmt::format("  \"{}\" [shape=circle, label=\"{}\"];\n", dot_escape(net.place_ids[r]),
                      dot_escape(net.place_labels[r]));
  }
  for (std::size_t c = 0; c < net.transition_count(); ++c)
    os << fmt::format("  \"{}\" [shape=box, label=\"{}\"];\n", dot_escape(net.transition_ids[c]),
                      dot_escape(net.transition_labels[c]));
  for (Eigen::Index c = 0; c < net.neg.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(net.neg, c); it; ++it)
      os << fmt::format("  \"{}\" -> \"{}\" [label=\"{}\"];\n", dot_escape(net.place_ids[static_cast<std::size_t>(it.row())]),
                        dot_escape(net.transition_ids[static_cast<std::size_t>(c)]), it.value());
  for (Eigen::Index c = 0; c < net.pos.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(net.pos, c); it; ++it)
      os << fmt::format("  \"{}\" -> \"{}\" [label=\"{}\"];\n", dot_escape(net.transition_ids[static_cast<std::size_t>(c)]),
                        dot_escape(net.place_ids[static_cast<std::size_t>(it.row())]), it.value());
  os << "}\n";
  return os.str();
}

EsnState zero_state(const EngineeringSystemNet& net, double dt) {
  EsnState s;
  s.q_buffer = Vector::Zero(static_cast<Eigen::Index>(net.place_count()));
  s.q_capability = Vector::Zero(static_cast<Eigen::Index>(net.transition_count()));
  s.k = 1;
  s.dt = dt;
  return s;
}

EsnState step(const EngineeringSystemNet& net, const EsnState& state, const Vector& u_minus, const Vector& u_plus,
              const StepOptions& options, std::span<const WeightOverride> overrides,
              std::vector<std::string>* warnings) {
  check_state(net, state);
  check_firing(u_minus, net.transition_count(), "U-", options);
  check_firing(u_plus, net.transition_count(), "U+", options);
  EsnState next = advance_places(net, state, u_minus, u_plus, options, overrides, warnings);
  const double dt = state.dt;
  for (Eigen::Index c = 0; c < next.q_capability.size(); ++c) {
    const double completed = u_plus(c) * dt;
    const double initiated = u_minus(c) * dt;
    const double value = state.q_capability(c) + (initiated - completed);
    const double slack = 1e-12 * (std::abs(state.q_capability(c)) + completed + initiated);
    if (value < -slack)
      throw NumericalError(fmt::format("Q_E of transition '{}' becomes {} at k={}: completions exceed in-flight "
                                       "quantity",
                                       net.transition_ids[static_cast<std::size_t>(c)], value, next.k));
    next.q_capability(c) = value;
  }
  return next;
}

EsnState simplified_step(const EngineeringSystemNet& net, const EsnState& state, const Vector& u,
                         const StepOptions& options, std::span<const WeightOverride> overrides,
                         std::vector<std::string>* warnings) {
  check_state(net, state);
  check_firing(u, net.transition_count(), "U", options);
  return advance_places(net, state, u, u, options, overrides, warnings);
}

std::size_t FiringSchedule::capability_count() const {
  return u_minus.empty() ? durations.size() : static_cast<std::size_t>(u_minus.front().size());
}

bool FiringSchedule::instantaneous() const { return gates.empty() && !first_mismatch(); }

std::optional<std::size_t> FiringSchedule::first_mismatch() const {
  for (std::size_t i = 0; i < u_minus.size() && i < u_plus.size(); ++i)
    if (u_minus[i] != u_plus[i]) return i + 1;
  return std::nullopt;
}

FiringSchedule empty_schedule(std::size_t capabilities, std::size_t horizon) {
  FiringSchedule s;
  s.horizon = horizon;
  s.u_minus.assign(horizon, Vector::Zero(static_cast<Eigen::Index>(capabilities)));
  s.u_plus = s.u_minus;
  return s;
}

FiringSchedule instantaneous_schedule(const std::vector<Vector>& firings, std::size_t horizon) {
  if (horizon < 2) throw ValidationError("horizon must allow at least one transition (K >= 2)");
  if (firings.empty()) throw ValidationError("instantaneous schedule needs at least one firing vector");
  if (firings.size() > horizon) throw ValidationError("more firing vectors than steps in the horizon");
  const auto n = static_cast<std::size_t>(firings.front().size());
  FiringSchedule s = empty_schedule(n, horizon);
  for (std::size_t i = 0; i < firings.size(); ++i) {
    if (static_cast<std::size_t>(firings[i].size()) != n) throw ValidationError("firing vectors differ in length");
    s.u_minus[i] = firings[i];
    s.u_plus[i] = firings[i];
  }
  return s;
}

FiringSchedule schedule_from_durations(const std::vector<std::size_t>& durations,
                                       const std::vector<Initiation>& initiations, std::size_t horizon,
                                       std::vector<Gate> gates) {
  if (horizon < 2) throw ValidationError("horizon must allow at least one transition (K >= 2)");
  const std::size_t n = durations.size();
  FiringSchedule s = empty_schedule(n, horizon);
  s.durations = durations;
  auto require_duration = [&](std::size_t capability) {
    if (capability >= n) throw ValidationError(fmt::format("capability {} out of range", capability + 1));
    if (durations[capability] == 0)
      throw ValidationError(fmt::format("capability {} has duration 0; use instantaneous mode for capabilities that "
                                        "complete within their step",
                                        capability + 1));
  };
  for (const auto& init : initiations) {
    require_duration(init.capability);
    if (init.k < 1 || init.k >= horizon)
      throw ValidationError(fmt::format("initiation at k={} lies outside the steps 1..{}", init.k, horizon - 1));
    if (!(init.amount >= 0.0) || !std::isfinite(init.amount))
      throw ValidationError("initiation amounts must be finite and nonnegative");
    const auto c = static_cast<Eigen::Index>(init.capability);
    s.u_minus[init.k - 1](c) += init.amount;
    const std::size_t done = init.k + durations[init.capability];
    if (done <= horizon - 1)
      s.u_plus[done - 1](c) += init.amount;
    else
      s.pending_at_horizon.push_back({init.capability, init.k, done, init.amount});
  }
  for (const auto& g : gates) {
    require_duration(g.capability);
    if (!(g.amount > 0.0)) throw ValidationError("gate amounts must be positive");
  }
  s.gates = std::move(gates);
  return s;
}

Vector Trajectory::delta_q_buffer() const {
  if (states.empty()) return {};
  return states.back().q_buffer - states.front().q_buffer;
}

namespace {

[[noreturn]] void rethrow_at(const Error& e, std::size_t k) {
  const auto message = fmt::format("at k={}: {}", k, e.what());
  switch (e.category()) {
    case Error::Category::numerical: throw NumericalError(message);
    case Error::Category::io: throw IoError(message);
    case Error::Category::validation: break;
  }
  throw ValidationError(message);
}

void check_schedule(const EngineeringSystemNet& net, const EsnState& initial, const FiringSchedule& schedule,
                    const StepOptions& options) {
  if (schedule.horizon < 2) throw ValidationError("horizon must allow at least one transition (K >= 2)");
  if (schedule.u_minus.size() != schedule.horizon || schedule.u_plus.size() != schedule.horizon)
    throw ValidationError(fmt::format("schedule must hold {} firing vectors per side", schedule.horizon));
  if (!schedule.durations.empty() && schedule.durations.size() != net.transition_count())
    throw ValidationError("schedule durations do not match the net's transitions");
  for (const auto& g : schedule.gates)
    if (g.capability >= net.transition_count() || g.place >= net.place_count())
      throw ValidationError("gate indexes outside the net");
  check_state(net, initial);
  if (options.integer_mode) {
    for (const SparseMatrix* m : {&net.pos, &net.neg})
      for (Eigen::Index c = 0; c < m->outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(*m, c); it; ++it)
          if (!is_integral(it.value()))
            throw ValidationError(fmt::format("integer mode: arc weight {} of transition '{}' is not integral",
                                              it.value(), net.transition_ids[static_cast<std::size_t>(c)]));
  }
}

std::vector<WeightOverride> overrides_at(const std::vector<WeightOverride>& all, std::size_t k) {
  std::vector<WeightOverride> out;
  for (const auto& o : all)
    if (o.k == k) out.push_back(o);
  return out;
}

}  // namespace

Trajectory simulate(const EngineeringSystemNet& net, const EsnState& initial, const FiringSchedule& schedule,
                    const SimulationOptions& options) {
  check_schedule(net, initial, schedule, options.step);
  const std::size_t horizon = schedule.horizon;
  Trajectory t;
  t.time_varying_weights = !options.weight_overrides.empty();
  t.in_flight = schedule.pending_at_horizon;
  std::vector<Vector> plus = schedule.u_plus;
  std::vector<std::size_t> gate_fired(schedule.gates.size(), 0);

  EsnState state = initial;
  state.k = 1;
  t.states.reserve(horizon);
  t.states.push_back(state);
  for (std::size_t k = 1; k < horizon; ++k) {
    Vector minus = schedule.u_minus[k - 1];
    for (std::size_t g = 0; g < schedule.gates.size(); ++g) {
      const auto& gate = schedule.gates[g];
      if (gate_fired[g] >= gate.max_count) continue;
      if (state.q_buffer(static_cast<Eigen::Index>(gate.place)) < gate.threshold) continue;
      ++gate_fired[g];
      minus(static_cast<Eigen::Index>(gate.capability)) += gate.amount;
      const std::size_t done = k + schedule.durations[gate.capability];
      if (done <= horizon - 1)
        plus[done - 1](static_cast<Eigen::Index>(gate.capability)) += gate.amount;
      else
        t.in_flight.push_back({gate.capability, k, done, gate.amount});
    }
    const auto overrides = overrides_at(options.weight_overrides, k);
    try {
      state = step(net, state, minus, plus[k - 1], options.step, overrides, &t.warnings);
    } catch (const Error& e) {
      rethrow_at(e, k);
    }
    t.u_minus.push_back(std::move(minus));
    t.u_plus.push_back(plus[k - 1]);
    t.states.push_back(state);
  }
  return t;
}

Trajectory simulate_instantaneous(const EngineeringSystemNet& net, const EsnState& initial,
                                  const FiringSchedule& schedule, const SimulationOptions& options) {
  check_schedule(net, initial, schedule, options.step);
  if (!schedule.instantaneous())
    throw ValidationError(fmt::format("schedule is not instantaneous (U+ differs from U- at k={})",
                                      schedule.first_mismatch().value_or(0)));
  Trajectory t;
  t.time_varying_weights = !options.weight_overrides.empty();
  EsnState state = initial;
  state.k = 1;
  t.states.push_back(state);
  for (std::size_t k = 1; k < schedule.horizon; ++k) {
    const auto overrides = overrides_at(options.weight_overrides, k);
    try {
      state = simplified_step(net, state, schedule.u_minus[k - 1], options.step, overrides, &t.warnings);
    } catch (const Error& e) {
      rethrow_at(e, k);
    }
    t.u_minus.push_back(schedule.u_minus[k - 1]);
    t.u_plus.push_back(schedule.u_minus[k - 1]);
    t.states.push_back(state);
  }
  return t;
}

}  // namespace lcanet
