#pragma once

// Model, scenario, problem, demand and firing files.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcanet/esn.hpp"
#include "lcanet/lca.hpp"
#include "lcanet/model.hpp"

namespace lcanet {

inline constexpr int kSchemaVersion = 1;

using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

ModelFile parse_model(const std::filesystem::path& path);
ModelFile parse_model_text(std::string_view text, std::string_view source = "<model>");
ordered_json to_json(const ModelFile& model);

/// Parse + validate; semantic errors are prefixed with the file path.
SystemModel load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

enum class ScenarioMode { instantaneous, duration };
std::string_view to_string(ScenarioMode mode);
std::optional<ScenarioMode> parse_mode(std::string_view text);

struct FiringEntry {
  std::size_t k = 1;
  std::string capability;
  double u_minus = 0.0;
  double u_plus = 0.0;
  bool operator==(const FiringEntry&) const = default;
};

struct DurationEntry {
  std::string capability;
  std::size_t steps = 1;
  bool operator==(const DurationEntry&) const = default;
};

struct InitiationEntry {
  std::size_t k = 1;
  std::string capability;
  double amount = 0.0;
  bool operator==(const InitiationEntry&) const = default;
};

struct GateEntry {
  std::string capability;
  double amount = 0.0;
  std::string operand;
  std::string buffer;
  double threshold = 0.0;
  std::size_t count = 1;
  bool operator==(const GateEntry&) const = default;
};

struct WeightOverrideEntry {
  std::size_t k = 1;
  std::string capability;
  std::string operand;
  std::string buffer;
  FlowDirection direction = FlowDirection::inject;
  double weight = 0.0;
  bool operator==(const WeightOverrideEntry&) const = default;
};

struct MarkingEntry {
  std::string operand;
  std::string buffer;
  double amount = 0.0;
  bool operator==(const MarkingEntry&) const = default;
};

struct ScenarioFile {
  int schema_version = 1;
  std::size_t horizon = 2;
  double dt = 1.0;
  std::optional<ScenarioMode> mode;
  std::vector<FiringEntry> firings;
  std::vector<DurationEntry> durations;
  std::vector<InitiationEntry> initiations;
  std::vector<GateEntry> gates;
  std::vector<WeightOverrideEntry> weight_overrides;
  std::vector<MarkingEntry> initial_marking;
  std::optional<bool> enforce_nonnegative;
  bool operator==(const ScenarioFile&) const = default;
};

ScenarioFile parse_scenario(const std::filesystem::path& path);
ScenarioFile parse_scenario_text(std::string_view text, std::string_view source = "<scenario>");
ordered_json to_json(const ScenarioFile& scenario);

struct BoundScenario {
  ScenarioMode mode = ScenarioMode::instantaneous;
  FiringSchedule schedule;
  EsnState initial;
  SimulationOptions options;
};

/// Resolves capability and place references against a model.
BoundScenario bind_scenario(const ScenarioFile& scenario, const SystemModel& model, const CapabilitySet& capabilities,
                            const EngineeringSystemNet& net);

// ---------------------------------------------------------------------------
// Flat LCA problems, demands, firing vectors
// ---------------------------------------------------------------------------

/// JSON ({technology, environmental, products, processes, aspects}) or CSV
/// (rows "A,<product>,…" and "B,<aspect>,…"), chosen by extension.
LcaProblem parse_problem(const std::filesystem::path& path);
LcaProblem parse_problem_json(std::string_view text, std::string_view source = "<problem>");
LcaProblem parse_problem_csv(std::string_view text, std::string_view source = "<problem>");

/// Demand vector in product order. Entries may name products by id, label or
/// 1-based ordinal, or give a full "values" array.
Vector parse_demand(const std::filesystem::path& path, const LcaProblem& problem);
Vector parse_demand_text(std::string_view text, const LcaProblem& problem, std::string_view source = "<demand>");

/// Firing vector in capability order.
Vector parse_firing(const std::filesystem::path& path, const CapabilitySet& capabilities);
Vector parse_firing_text(std::string_view text, const CapabilitySet& capabilities,
                         std::string_view source = "<firing>");

}  // namespace lcanet
