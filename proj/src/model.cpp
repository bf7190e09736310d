#include "lcanet/model.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "lcanet/error.hpp"

namespace lcanet {

std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::transformation: return "transformation";
    case ProcessKind::transportation: return "transportation";
  }
  return "?";
}

std::string_view to_string(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::transformation: return "transformation";
    case ResourceKind::independent_buffer: return "independent-buffer";
    case ResourceKind::transportation: return "transportation";
  }
  return "?";
}

std::string_view to_string(FlowDirection direction) {
  return direction == FlowDirection::pull ? "pull" : "inject";
}

namespace {

std::optional<std::size_t> lookup(const std::unordered_map<std::string, std::size_t>& index,
                                  std::string_view id) {
  auto it = index.find(std::string(id));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

template <typename Spec>
std::unordered_map<std::string, std::size_t> index_ids(const std::vector<Spec>& specs,
                                                       std::string_view what) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].id.empty()) throw ValidationError(fmt::format("{} #{} has an empty id", what, i + 1));
    if (!index.emplace(specs[i].id, i).second)
      throw ValidationError(fmt::format("duplicate {} id '{}'", what, specs[i].id));
  }
  return index;
}

}  // namespace

std::size_t SystemModel::count(ResourceKind kind) const {
  return static_cast<std::size_t>(std::count_if(resources.begin(), resources.end(),
                                                [kind](const Resource& r) { return r.kind == kind; }));
}

std::optional<std::size_t> SystemModel::find_operand(std::string_view id) const {
  return lookup(operand_index, id);
}
std::optional<std::size_t> SystemModel::find_process(std::string_view id) const {
  return lookup(process_index, id);
}
std::optional<std::size_t> SystemModel::find_resource(std::string_view id) const {
  return lookup(resource_index, id);
}
std::optional<std::size_t> SystemModel::find_buffer(std::string_view resource_id) const {
  auto r = find_resource(resource_id);
  if (!r) return std::nullopt;
  return resources[*r].buffer;
}

std::optional<std::size_t> SystemModel::resolve_buffer(const Allocation& allocation,
                                                       std::size_t operand,
                                                       FlowDirection direction) const {
  // Resource-specific overrides win over process-wide ones.
  const BufferOverride* process_wide = nullptr;
  for (const auto& o : buffer_overrides) {
    if (o.process != allocation.process || o.operand != operand) continue;
    if (o.direction && *o.direction != direction) continue;
    if (o.resource) {
      if (*o.resource == allocation.resource) return o.buffer;
    } else if (!process_wide) {
      process_wide = &o;
    }
  }
  if (process_wide) return process_wide->buffer;
  return resources[allocation.resource].buffer;
}

std::string SystemModel::place_label(std::size_t operand, std::size_t buffer) const {
  return fmt::format("{} at {}", operands[operand].name, buffer_resource(buffer).name);
}

std::string SystemModel::place_id(std::size_t operand, std::size_t buffer) const {
  return fmt::format("{}@{}", operands[operand].id, buffer_resource(buffer).id);
}

namespace {

std::vector<Flow> resolve_flows(const std::vector<FlowSpec>& specs, const SystemModel& model,
                                std::string_view owner, std::string_view list) {
  std::vector<Flow> flows;
  for (const auto& spec : specs) {
    auto operand = model.find_operand(spec.operand);
    if (!operand)
      throw ValidationError(fmt::format("{} '{}' {} references unknown operand '{}'", "process", owner,
                                        list, spec.operand));
    if (!(spec.quantity > 0.0))
      throw ValidationError(fmt::format("process '{}' {} quantity for operand '{}' must be strictly positive",
                                        owner, list, spec.operand));
    Flow flow;
    flow.operand = *operand;
    flow.quantity = spec.quantity;
    flow.unit = spec.unit.empty() ? model.operands[*operand].unit : spec.unit;
    flows.push_back(std::move(flow));
  }
  return flows;
}

void apply_quantity_overrides(std::vector<Flow>& flows, const std::vector<FlowSpec>& overrides,
                              const SystemModel& model, const std::string& cap_id,
                              std::string_view list) {
  for (const auto& o : overrides) {
    auto operand = model.find_operand(o.operand);
    if (!operand)
      throw ValidationError(
          fmt::format("allocation '{}' {} references unknown operand '{}'", cap_id, list, o.operand));
    if (!(o.quantity > 0.0))
      throw ValidationError(fmt::format("allocation '{}' {} quantity for operand '{}' must be strictly positive",
                                        cap_id, list, o.operand));
    bool found = false;
    for (auto& flow : flows) {
      if (flow.operand != *operand) continue;
      flow.quantity = o.quantity;
      if (!o.unit.empty()) flow.unit = o.unit;
      found = true;
    }
    if (!found)
      throw ValidationError(fmt::format("allocation '{}' overrides {} operand '{}' which the process does not have",
                                        cap_id, list, o.operand));
  }
}

}  // namespace

SystemModel validate_model(const ModelFile& raw) {
  SystemModel model;
  model.name = raw.name;

  model.operand_index = index_ids(raw.operands, "operand");
  model.process_index = index_ids(raw.processes, "process");
  model.resource_index = index_ids(raw.resources, "resource");

  for (const auto& spec : raw.operands) {
    if (spec.unit.empty()) throw ValidationError(fmt::format("operand '{}' has an empty unit label", spec.id));
    model.operands.push_back({spec.id, spec.name.empty() ? spec.id : spec.name, spec.unit});
  }

  for (const auto& spec : raw.resources) {
    Resource r{spec.id, spec.name.empty() ? spec.id : spec.name, spec.kind, spec.location, std::nullopt};
    if (spec.kind != ResourceKind::transportation) {
      r.buffer = model.buffers.size();
      model.buffers.push_back(model.resources.size());
    }
    model.resources.push_back(std::move(r));
  }

  for (const auto& spec : raw.processes) {
    Process p;
    p.id = spec.id;
    p.name = spec.name.empty() ? spec.id : spec.name;
    p.kind = spec.kind;
    p.inputs = resolve_flows(spec.inputs, model, spec.id, "input");
    p.outputs = resolve_flows(spec.outputs, model, spec.id, "output");
    if (p.outputs.empty()) throw ValidationError(fmt::format("process '{}' has no outputs", spec.id));
    auto primary = model.find_operand(spec.primary_output);
    if (!primary)
      throw ValidationError(fmt::format("process '{}' primary_output references unknown operand '{}'", spec.id,
                                        spec.primary_output));
    if (std::none_of(p.outputs.begin(), p.outputs.end(), [&](const Flow& f) { return f.operand == *primary; }))
      throw ValidationError(
          fmt::format("process '{}' primary_output '{}' is not among its outputs", spec.id, spec.primary_output));
    p.primary_output = *primary;
    model.processes.push_back(std::move(p));
  }

  std::set<std::pair<std::size_t, std::size_t>> seen_pairs;
  std::vector<bool> allocated(model.processes.size(), false);
  for (const auto& spec : raw.allocations) {
    auto p = model.find_process(spec.process);
    if (!p) throw ValidationError(fmt::format("allocation references unknown process '{}'", spec.process));
    auto r = model.find_resource(spec.resource);
    if (!r) throw ValidationError(fmt::format("allocation references unknown resource '{}'", spec.resource));
    const std::string cap_id = spec.resource + ":" + spec.process;
    if (!seen_pairs.emplace(*p, *r).second)
      throw ValidationError(fmt::format("duplicate allocation '{}'", cap_id));
    Allocation a;
    a.process = *p;
    a.resource = *r;
    a.inputs = model.processes[*p].inputs;
    a.outputs = model.processes[*p].outputs;
    apply_quantity_overrides(a.inputs, spec.input_quantities, model, cap_id, "input");
    apply_quantity_overrides(a.outputs, spec.output_quantities, model, cap_id, "output");
    allocated[*p] = true;
    model.allocations.push_back(std::move(a));
  }
  for (std::size_t p = 0; p < model.processes.size(); ++p)
    if (!allocated[p])
      throw ValidationError(fmt::format("process '{}' is not allocated to any resource", model.processes[p].id));

  for (const auto& spec : raw.buffer_overrides) {
    BufferOverride o;
    auto p = model.find_process(spec.process);
    if (!p) throw ValidationError(fmt::format("buffer override references unknown process '{}'", spec.process));
    o.process = *p;
    if (spec.resource) {
      auto r = model.find_resource(*spec.resource);
      if (!r)
        throw ValidationError(fmt::format("buffer override references unknown resource '{}'", *spec.resource));
      o.resource = *r;
    }
    auto l = model.find_operand(spec.operand);
    if (!l) throw ValidationError(fmt::format("buffer override references unknown operand '{}'", spec.operand));
    o.operand = *l;
    o.direction = spec.direction;
    auto r = model.find_resource(spec.buffer);
    if (!r) throw ValidationError(fmt::format("buffer override references unknown resource '{}'", spec.buffer));
    if (!model.resources[*r].buffer)
      throw ValidationError(
          fmt::format("buffer override target '{}' is a transportation resource, not a buffer", spec.buffer));
    o.buffer = *model.resources[*r].buffer;
    model.buffer_overrides.push_back(o);
  }

  std::set<std::size_t> aspect_set;
  for (const auto& id : raw.aspects) {
    auto l = model.find_operand(id);
    if (!l) throw ValidationError(fmt::format("aspect references unknown operand '{}'", id));
    if (aspect_set.insert(*l).second) model.aspects.push_back(*l);
  }

  // Every flow must land in a buffer, and all flows meeting at one place must
  // agree on the unit label.
  std::map<std::pair<std::size_t, std::size_t>, std::string> place_units;
  for (const auto& a : model.allocations) {
    const std::string cap_id = model.resources[a.resource].id + ":" + model.processes[a.process].id;
    auto check = [&](const std::vector<Flow>& flows, FlowDirection direction) {
      for (const auto& f : flows) {
        auto b = model.resolve_buffer(a, f.operand, direction);
        if (!b)
          throw ValidationError(fmt::format(
              "capability '{}' cannot place operand '{}' ({}): resource '{}' is not a buffer and no buffer "
              "override applies",
              cap_id, model.operands[f.operand].id, to_string(direction), model.resources[a.resource].id));
        auto [it, inserted] = place_units.emplace(std::pair{f.operand, *b}, model.operands[f.operand].unit);
        if (f.unit != it->second)
          throw ValidationError(fmt::format("unit mismatch for operand '{}' at buffer '{}': '{}' vs '{}'",
                                            model.operands[f.operand].id, model.buffer_resource(*b).id,
                                            it->second, f.unit));
      }
    };
    check(a.inputs, FlowDirection::pull);
    check(a.outputs, FlowDirection::inject);
  }

  return model;
}

std::optional<std::size_t> CapabilitySet::find(std::string_view id) const {
  for (const auto& c : items)
    if (c.id == id) return c.index;
  return std::nullopt;
}

std::optional<std::size_t> CapabilitySet::resolve(std::string_view ref) const {
  if (auto found = find(ref)) return found;
  std::size_t ordinal = 0;
  auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), ordinal);
  if (ec == std::errc() && ptr == ref.data() + ref.size() && ordinal >= 1 && ordinal <= items.size())
    return ordinal - 1;
  return std::nullopt;
}

CapabilitySet enumerate_capabilities(const SystemModel& model, const EnumerationOptions& options) {
  CapabilitySet set;
  set.items.reserve(model.allocations.size());
  for (const auto& a : model.allocations) {
    const auto& process = model.processes[a.process];
    const auto& resource = model.resources[a.resource];
    if (process.kind == ProcessKind::transportation && resource.kind != ResourceKind::transportation &&
        !options.allow_kind_mismatch) {
      throw ValidationError(fmt::format(
          "transportation process '{}' is allocated to {} resource '{}' (set allow_kind_mismatch to accept)",
          process.id, to_string(resource.kind), resource.id));
    }
    Capability c;
    c.index = set.items.size();
    c.resource = a.resource;
    c.process = a.process;
    c.id = resource.id + ":" + process.id;
    c.label = resource.name + " does " + process.name;
    for (const auto& f : a.inputs)
      c.pulls.push_back({f.operand, *model.resolve_buffer(a, f.operand, FlowDirection::pull), f.quantity});
    for (const auto& f : a.outputs)
      c.injects.push_back({f.operand, *model.resolve_buffer(a, f.operand, FlowDirection::inject), f.quantity});
    set.items.push_back(std::move(c));
  }
  return set;
}

}  // namespace lcanet
