#pragma once

// Engineering System Net: an elementary Petri net over (operand, buffer)
// places and capability transitions, with real-valued markings.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcanet/incidence.hpp"

namespace lcanet {

struct EngineeringSystemNet {
  PlaceIndex places;
  std::vector<std::string> place_ids;
  std::vector<std::string> place_labels;
  std::vector<std::string> transition_ids;
  std::vector<std::string> transition_labels;
  std::vector<ProcessKind> transition_kinds;
  SparseMatrix pos;  // M⁺
  SparseMatrix neg;  // M⁻
  SparseMatrix net;  // M
  std::vector<bool> active_places;  // place touched by at least one arc

  std::size_t place_count() const { return static_cast<std::size_t>(pos.rows()); }
  std::size_t transition_count() const { return static_cast<std::size_t>(pos.cols()); }
  std::size_t active_place_count() const;
};

EngineeringSystemNet build_esn(const IncidenceStructure& structure, const SystemModel& model);

/// Net straight from weight matrices, with generated labels (p1.., t1..).
/// Both matrices must share a shape and hold nonnegative entries.
EngineeringSystemNet make_net(const SparseMatrix& pos, const SparseMatrix& neg);

/// DOT digraph of the net; inactive places are omitted.
std::string to_dot(const EngineeringSystemNet& net);

struct EsnState {
  Vector q_buffer;      // Q_B, one entry per place
  Vector q_capability;  // Q_E, in-flight execution quantity per transition
  std::size_t k = 1;
  double dt = 1.0;

  bool operator==(const EsnState&) const = default;
};

EsnState zero_state(const EngineeringSystemNet& net, double dt = 1.0);

enum class NonnegativePolicy { allow, warn, enforce };

struct StepOptions {
  /// `allow` is the unbounded-source convention used for LCA equivalence
  /// runs: sources may go negative to represent extraction.
  NonnegativePolicy nonnegative = NonnegativePolicy::allow;
  /// Classical Petri-net check: firings and arc weights must be integral.
  bool integer_mode = false;
};

/// Replaces one arc weight of a column for one time step.
struct WeightOverride {
  std::size_t k = 1;
  std::size_t capability = 0;
  std::size_t place = 0;
  FlowDirection direction = FlowDirection::inject;
  double weight = 0.0;
  bool operator==(const WeightOverride&) const = default;
};

/// Q_B[k+1] = Q_B[k] + M⁺U⁺ΔT − M⁻U⁻ΔT and Q_E[k+1] = Q_E[k] + (U⁻ΔT − U⁺ΔT).
/// `overrides` must all target state.k. Negative Q_E is always a
/// NumericalError; negative Q_B follows options.nonnegative.
EsnState step(const EngineeringSystemNet& net, const EsnState& state, const Vector& u_minus, const Vector& u_plus,
              const StepOptions& options = {}, std::span<const WeightOverride> overrides = {},
              std::vector<std::string>* warnings = nullptr);

/// Instantaneous firing: Q_B[k+1] = Q_B[k] + M U ΔT, Q_E untouched. M U is
/// evaluated as M⁺U − M⁻U so the result is bit-identical to step(U, U).
EsnState simplified_step(const EngineeringSystemNet& net, const EsnState& state, const Vector& u,
                         const StepOptions& options = {}, std::span<const WeightOverride> overrides = {},
                         std::vector<std::string>* warnings = nullptr);

/// Fires `amount` of a capability each step while Q_B[place] ≥ threshold,
/// at most `max_count` times. Completion follows the capability's duration.
struct Gate {
  std::size_t capability = 0;
  double amount = 0.0;
  std::size_t place = 0;
  double threshold = 0.0;
  std::size_t max_count = 1;
  bool operator==(const Gate&) const = default;
};

struct Initiation {
  std::size_t k = 1;
  std::size_t capability = 0;
  double amount = 0.0;
  bool operator==(const Initiation&) const = default;
};

struct InFlight {
  std::size_t capability = 0;
  std::size_t initiated_at = 0;
  std::size_t completes_at = 0;
  double amount = 0.0;
};

struct FiringSchedule {
  std::size_t horizon = 2;         // K
  std::vector<Vector> u_minus;     // entry k-1 holds U⁻[k], k = 1..K
  std::vector<Vector> u_plus;      // entry k-1 holds U⁺[k]
  std::vector<std::size_t> durations;  // per capability, in steps; empty in instantaneous mode
  std::vector<Gate> gates;
  std::vector<InFlight> pending_at_horizon;  // initiations completing at or after K

  std::size_t capability_count() const;
  bool instantaneous() const;
  /// First k where U⁺[k] ≠ U⁻[k].
  std::optional<std::size_t> first_mismatch() const;
};

/// All-zero schedule.
FiringSchedule empty_schedule(std::size_t capabilities, std::size_t horizon);

/// U⁻[k] = U⁺[k] = `firings[k-1]`.
FiringSchedule instantaneous_schedule(const std::vector<Vector>& firings, std::size_t horizon);

/// U⁻[k] collects the initiations at k and U⁺[k + d] mirrors each of them.
/// `durations[c]` is the duration of capability c in steps; 0 marks a
/// capability that is never initiated here and is rejected if it is.
FiringSchedule schedule_from_durations(const std::vector<std::size_t>& durations,
                                       const std::vector<Initiation>& initiations, std::size_t horizon,
                                       std::vector<Gate> gates = {});

struct SimulationOptions {
  StepOptions step;
  std::vector<WeightOverride> weight_overrides;
};

struct Trajectory {
  std::vector<EsnState> states;  // k = 1..K
  std::vector<Vector> u_minus;   // realized firings for k = 1..K-1
  std::vector<Vector> u_plus;
  std::vector<InFlight> in_flight;
  std::vector<std::string> warnings;
  bool time_varying_weights = false;

  Vector delta_q_buffer() const;  // Q_B[K] − Q_B[1]
};

/// Applies step for k = 1..K-1. Errors carry the offending k.
Trajectory simulate(const EngineeringSystemNet& net, const EsnState& initial, const FiringSchedule& schedule,
                    const SimulationOptions& options = {});

/// Same, using simplified_step; requires an instantaneous schedule.
Trajectory simulate_instantaneous(const EngineeringSystemNet& net, const EsnState& initial,
                                  const FiringSchedule& schedule, const SimulationOptions& options = {});

}  // namespace lcanet
