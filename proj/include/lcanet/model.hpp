#pragma once

// Engineering-system meta-architecture: operands, processes, resources,
// buffers, and the capabilities produced by allocating processes to
// resources.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lcanet {

enum class ProcessKind { transformation, transportation };
enum class ResourceKind { transformation, independent_buffer, transportation };
enum class FlowDirection { pull, inject };

std::string_view to_string(ProcessKind kind);
std::string_view to_string(ResourceKind kind);
std::string_view to_string(FlowDirection direction);

// ---------------------------------------------------------------------------
// Declarative (unvalidated) description, as read from a model file.
// ---------------------------------------------------------------------------

struct FlowSpec {
  std::string operand;
  double quantity = 0.0;
  std::string unit;  // empty: the operand's declared unit
  bool operator==(const FlowSpec&) const = default;
};

struct OperandSpec {
  std::string id;
  std::string name;
  std::string unit;
  bool operator==(const OperandSpec&) const = default;
};

struct ProcessSpec {
  std::string id;
  std::string name;
  ProcessKind kind = ProcessKind::transformation;
  std::vector<FlowSpec> inputs;
  std::vector<FlowSpec> outputs;
  std::string primary_output;
  bool operator==(const ProcessSpec&) const = default;
};

struct ResourceSpec {
  std::string id;
  std::string name;
  ResourceKind kind = ResourceKind::transformation;
  std::optional<std::string> location;
  bool operator==(const ResourceSpec&) const = default;
};

/// One "resource does process" pairing. The optional quantity lists replace
/// the process's per-execution quantities for this capability only, so two
/// resources can carry out the same process with different technology.
struct AllocationSpec {
  std::string process;
  std::string resource;
  std::vector<FlowSpec> input_quantities;
  std::vector<FlowSpec> output_quantities;
  bool operator==(const AllocationSpec&) const = default;
};

/// Pins an operand of a process to a buffer other than the executing
/// resource. Without `resource` the override applies to every capability of
/// the process; without `direction` it applies to both pulls and injects.
struct BufferOverrideSpec {
  std::string process;
  std::optional<std::string> resource;
  std::string operand;
  std::optional<FlowDirection> direction;
  std::string buffer;
  bool operator==(const BufferOverrideSpec&) const = default;
};

struct ModelFile {
  int schema_version = 1;
  std::string name;
  std::vector<OperandSpec> operands;
  std::vector<ResourceSpec> resources;
  std::vector<ProcessSpec> processes;
  std::vector<AllocationSpec> allocations;
  std::vector<BufferOverrideSpec> buffer_overrides;
  std::vector<std::string> aspects;
  bool operator==(const ModelFile&) const = default;
};

// ---------------------------------------------------------------------------
// Validated model. All references are resolved to indices.
// ---------------------------------------------------------------------------

struct Operand {
  std::string id;
  std::string name;
  std::string unit;
};

struct Flow {
  std::size_t operand = 0;
  double quantity = 0.0;
  std::string unit;
};

struct Process {
  std::string id;
  std::string name;
  ProcessKind kind = ProcessKind::transformation;
  std::vector<Flow> inputs;
  std::vector<Flow> outputs;
  std::size_t primary_output = 0;
};

struct Resource {
  std::string id;
  std::string name;
  ResourceKind kind = ResourceKind::transformation;
  std::optional<std::string> location;
  std::optional<std::size_t> buffer;  // position in B_S, if the resource is a buffer
};

/// Allocation with the capability's effective per-execution quantities.
struct Allocation {
  std::size_t process = 0;
  std::size_t resource = 0;
  std::vector<Flow> inputs;
  std::vector<Flow> outputs;
};

struct BufferOverride {
  std::size_t process = 0;
  std::optional<std::size_t> resource;
  std::size_t operand = 0;
  std::optional<FlowDirection> direction;
  std::size_t buffer = 0;  // position in B_S
};

/// Immutable after validate_model; safe to share read-only.
struct SystemModel {
  std::string name;
  std::vector<Operand> operands;
  std::vector<Process> processes;
  std::vector<Resource> resources;
  std::vector<Allocation> allocations;
  std::vector<BufferOverride> buffer_overrides;
  std::vector<std::size_t> aspects;  // operand indices, declaration order
  std::vector<std::size_t> buffers;  // B_S = M ∪ B, resource indices in declaration order

  std::size_t buffer_count() const { return buffers.size(); }
  std::size_t count(ResourceKind kind) const;
  const Resource& buffer_resource(std::size_t buffer) const { return resources[buffers[buffer]]; }

  std::optional<std::size_t> find_operand(std::string_view id) const;
  std::optional<std::size_t> find_process(std::string_view id) const;
  std::optional<std::size_t> find_resource(std::string_view id) const;
  /// Buffer position of the resource with this id, if it is a buffer.
  std::optional<std::size_t> find_buffer(std::string_view resource_id) const;

  /// Buffer where `operand` is pulled from / injected into when the given
  /// allocation executes. Empty when the resource is not a buffer and no
  /// override applies.
  std::optional<std::size_t> resolve_buffer(const Allocation& allocation, std::size_t operand,
                                            FlowDirection direction) const;

  std::string place_label(std::size_t operand, std::size_t buffer) const;
  std::string place_id(std::size_t operand, std::size_t buffer) const;

  std::unordered_map<std::string, std::size_t> operand_index;
  std::unordered_map<std::string, std::size_t> process_index;
  std::unordered_map<std::string, std::size_t> resource_index;
};

/// Resolves every cross-reference, partitions resources into M, B and H, and
/// checks that operands meeting at a buffer agree on their unit label.
/// Throws ValidationError naming the offending id.
SystemModel validate_model(const ModelFile& raw);

// ---------------------------------------------------------------------------
// Capabilities
// ---------------------------------------------------------------------------

struct PlacedFlow {
  std::size_t operand = 0;
  std::size_t buffer = 0;
  double weight = 0.0;
};

struct Capability {
  std::size_t index = 0;
  std::size_t resource = 0;
  std::size_t process = 0;
  std::string id;     // "<resource id>:<process id>"
  std::string label;  // "<resource name> does <process name>"
  std::vector<PlacedFlow> pulls;
  std::vector<PlacedFlow> injects;
};

struct CapabilitySet {
  std::vector<Capability> items;

  std::size_t size() const { return items.size(); }
  const Capability& operator[](std::size_t i) const { return items[i]; }
  std::optional<std::size_t> find(std::string_view id) const;
  /// Accepts a capability id or its 1-based ordinal ("3").
  std::optional<std::size_t> resolve(std::string_view ref) const;
};

struct EnumerationOptions {
  /// Permit transportation processes on non-transportation resources.
  bool allow_kind_mismatch = false;
};

/// One capability per allocation pair, in allocation-list order.
CapabilitySet enumerate_capabilities(const SystemModel& model,
                                     const EnumerationOptions& options = {});

}  // namespace lcanet
