#include "lcanet/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "lcanet/error.hpp"

namespace lcanet {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("error reading '{}'", path.string()));
  return ss.str();
}

namespace {

// ---------------------------------------------------------------------------
// Line/column lookup for JSON pointers.
// ---------------------------------------------------------------------------

struct TextPosition {
  std::size_t line = 1;
  std::size_t column = 1;
};

TextPosition position_of(std::string_view text, std::size_t offset) {
  TextPosition p;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.column = 1;
    } else {
      ++p.column;
    }
  }
  return p;
}

std::string escape_pointer_token(const std::string& key) {
  std::string out;
  for (char ch : key) {
    if (ch == '~') out += "~0";
    else if (ch == '/') out += "~1";
    else out.push_back(ch);
  }
  return out;
}

/// Offsets of every value in an already-validated JSON document, keyed by
/// JSON pointer.
class SourceMap {
 public:
  explicit SourceMap(std::string_view text) : text_(text) {
    std::size_t i = 0;
    walk(i, "");
  }

  std::optional<std::size_t> offset(std::string pointer) const {
    while (true) {
      if (auto it = offsets_.find(pointer); it != offsets_.end()) return it->second;
      if (pointer.empty()) return std::nullopt;
      pointer.erase(pointer.rfind('/'));
    }
  }

 private:
  void skip_ws(std::size_t& i) const {
    while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
  }

  std::string read_string(std::size_t& i) const {
    std::string out;
    ++i;  // opening quote
    while (i < text_.size() && text_[i] != '"') {
      if (text_[i] == '\\' && i + 1 < text_.size()) {
        out.push_back(text_[i + 1]);
        i += 2;
      } else {
        out.push_back(text_[i++]);
      }
    }
    ++i;
    return out;
  }

  void walk(std::size_t& i, const std::string& pointer) {
    skip_ws(i);
    if (i >= text_.size()) return;
    offsets_.emplace(pointer, i);
    const char ch = text_[i];
    if (ch == '{') {
      ++i;
      skip_ws(i);
      if (i < text_.size() && text_[i] == '}') {
        ++i;
        return;
      }
      while (i < text_.size()) {
        skip_ws(i);
        const std::size_t key_at = i;
        const std::string child = pointer + "/" + escape_pointer_token(read_string(i));
        offsets_.emplace(child + "#key", key_at);
        skip_ws(i);
        ++i;  // ':'
        walk(i, child);
        skip_ws(i);
        if (i < text_.size() && text_[i] == ',') {
          ++i;
          continue;
        }
        ++i;  // '}'
        return;
      }
    } else if (ch == '[') {
      ++i;
      skip_ws(i);
      if (i < text_.size() && text_[i] == ']') {
        ++i;
        return;
      }
      for (std::size_t index = 0; i < text_.size(); ++index) {
        walk(i, pointer + "/" + std::to_string(index));
        skip_ws(i);
        if (i < text_.size() && text_[i] == ',') {
          ++i;
          continue;
        }
        ++i;  // ']'
        return;
      }
    } else if (ch == '"') {
      read_string(i);
    } else {
      while (i < text_.size() && text_[i] != ',' && text_[i] != '}' && text_[i] != ']' &&
             !std::isspace(static_cast<unsigned char>(text_[i])))
        ++i;
    }
  }

  std::string_view text_;
  std::map<std::string, std::size_t> offsets_;
};

// ---------------------------------------------------------------------------
// Schema-checking reader.
// ---------------------------------------------------------------------------

class Reader {
 public:
  Reader(std::string_view text, std::string_view source) : text_(text), source_(source) {
    try {
      root_ = json::parse(text);
    } catch (const json::parse_error& e) {
      const auto p = position_of(text, e.byte == 0 ? 0 : e.byte - 1);
      std::string what = e.what();
      if (auto colon = what.find("; "); colon != std::string::npos) what = what.substr(colon + 2);
      throw ParseError(fmt::format("{}:{}:{}", source_, p.line, p.column), "syntax error: " + what);
    }
    map_ = std::make_unique<SourceMap>(text_);
  }

  const json& root() const { return root_; }

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    std::string location = std::string(source_);
    if (auto off = map_->offset(pointer)) {
      const auto p = position_of(text_, *off);
      location += fmt::format(":{}:{}", p.line, p.column);
    }
    throw ParseError(location, fmt::format("{}: {}", pointer.empty() ? "/" : pointer, message));
  }

  void object(const json& j, const std::string& ptr, std::initializer_list<std::string_view> allowed) const {
    if (!j.is_object()) fail(ptr, "expected an object");
    for (const auto& [key, value] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        fail(ptr + "/" + escape_pointer_token(key), fmt::format("unknown field '{}'", key));
    }
  }

  const json& required(const json& j, std::string_view key, const std::string& ptr) const {
    auto it = j.find(key);
    if (it == j.end()) fail(ptr, fmt::format("missing required field '{}'", key));
    return *it;
  }

  const json* optional(const json& j, std::string_view key) const {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  std::string string(const json& j, const std::string& ptr, bool allow_empty = false) const {
    if (!j.is_string()) fail(ptr, "expected a string");
    auto s = j.get<std::string>();
    if (!allow_empty && s.empty()) fail(ptr, "must not be empty");
    return s;
  }

  double number(const json& j, const std::string& ptr) const {
    if (!j.is_number()) fail(ptr, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(ptr, "must be finite");
    return v;
  }

  std::size_t count(const json& j, const std::string& ptr) const {
    if (!j.is_number_integer() || j.get<long long>() < 0) fail(ptr, "expected a nonnegative integer");
    return j.get<std::size_t>();
  }

  const json& array(const json& j, const std::string& ptr, bool allow_empty = true) const {
    if (!j.is_array()) fail(ptr, "expected an array");
    if (!allow_empty && j.empty()) fail(ptr, "must not be empty");
    return j;
  }

  void schema_version(const json& root) const {
    const auto& v = required(root, "schema_version", "");
    if (!v.is_number_integer()) fail("/schema_version", "expected an integer");
    if (v.get<int>() != kSchemaVersion)
      fail("/schema_version", fmt::format("unknown schema_version {} (supported: {})", v.get<int>(), kSchemaVersion));
  }

  std::string_view source() const { return source_; }

 private:
  std::string_view text_;
  std::string_view source_;
  json root_;
  std::unique_ptr<SourceMap> map_;
};

std::string ptr_at(const std::string& base, std::size_t index) { return base + "/" + std::to_string(index); }

template <typename Enum>
Enum parse_enum(const Reader& r, const json& j, const std::string& ptr,
                std::initializer_list<std::pair<std::string_view, Enum>> values) {
  const auto s = r.string(j, ptr);
  for (const auto& [name, value] : values)
    if (s == name) return value;
  std::string names;
  for (const auto& [name, value] : values) names += (names.empty() ? "" : ", ") + std::string(name);
  r.fail(ptr, fmt::format("'{}' is not one of: {}", s, names));
}

FlowDirection parse_direction(const Reader& r, const json& j, const std::string& ptr) {
  return parse_enum<FlowDirection>(r, j, ptr, {{"pull", FlowDirection::pull}, {"inject", FlowDirection::inject}});
}

std::vector<FlowSpec> parse_flows(const Reader& r, const json& j, const std::string& ptr) {
  std::vector<FlowSpec> out;
  r.array(j, ptr);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& f = j[i];
    const auto p = ptr_at(ptr, i);
    r.object(f, p, {"operand", "quantity", "unit"});
    FlowSpec spec;
    spec.operand = r.string(r.required(f, "operand", p), p + "/operand");
    spec.quantity = r.number(r.required(f, "quantity", p), p + "/quantity");
    if (!(spec.quantity > 0.0)) r.fail(p + "/quantity", "must be strictly positive");
    if (auto u = r.optional(f, "unit")) spec.unit = r.string(*u, p + "/unit");
    out.push_back(std::move(spec));
  }
  return out;
}

ordered_json flows_to_json(const std::vector<FlowSpec>& flows) {
  ordered_json out = ordered_json::array();
  for (const auto& f : flows) {
    ordered_json j;
    j["operand"] = f.operand;
    j["quantity"] = f.quantity;
    if (!f.unit.empty()) j["unit"] = f.unit;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

ModelFile parse_model_text(std::string_view text, std::string_view source) {
  Reader r(text, source);
  const json& root = r.root();
  r.object(root, "", {"schema_version", "name", "operands", "resources", "processes", "allocations",
                      "buffer_overrides", "aspects", "description"});
  r.schema_version(root);

  ModelFile m;
  m.schema_version = root["schema_version"].get<int>();
  if (auto n = r.optional(root, "name")) m.name = r.string(*n, "/name", true);

  const auto& operands = r.array(r.required(root, "operands", ""), "/operands", false);
  for (std::size_t i = 0; i < operands.size(); ++i) {
    const auto p = ptr_at("/operands", i);
    const auto& o = operands[i];
    r.object(o, p, {"id", "name", "unit"});
    OperandSpec spec;
    spec.id = r.string(r.required(o, "id", p), p + "/id");
    if (auto n = r.optional(o, "name")) spec.name = r.string(*n, p + "/name");
    spec.unit = r.string(r.required(o, "unit", p), p + "/unit");
    m.operands.push_back(std::move(spec));
  }

  const auto& resources = r.array(r.required(root, "resources", ""), "/resources", false);
  for (std::size_t i = 0; i < resources.size(); ++i) {
    const auto p = ptr_at("/resources", i);
    const auto& o = resources[i];
    r.object(o, p, {"id", "name", "kind", "location"});
    ResourceSpec spec;
    spec.id = r.string(r.required(o, "id", p), p + "/id");
    if (auto n = r.optional(o, "name")) spec.name = r.string(*n, p + "/name");
    spec.kind = parse_enum<ResourceKind>(r, r.required(o, "kind", p), p + "/kind",
                                         {{"transformation", ResourceKind::transformation},
                                          {"independent-buffer", ResourceKind::independent_buffer},
                                          {"transportation", ResourceKind::transportation}});
    if (auto l = r.optional(o, "location")) spec.location = r.string(*l, p + "/location");
    m.resources.push_back(std::move(spec));
  }

  const auto& processes = r.array(r.required(root, "processes", ""), "/processes", false);
  for (std::size_t i = 0; i < processes.size(); ++i) {
    const auto p = ptr_at("/processes", i);
    const auto& o = processes[i];
    r.object(o, p, {"id", "name", "kind", "inputs", "outputs", "primary_output"});
    ProcessSpec spec;
    spec.id = r.string(r.required(o, "id", p), p + "/id");
    if (auto n = r.optional(o, "name")) spec.name = r.string(*n, p + "/name");
    spec.kind = parse_enum<ProcessKind>(r, r.required(o, "kind", p), p + "/kind",
                                        {{"transformation", ProcessKind::transformation},
                                         {"transportation", ProcessKind::transportation}});
    if (auto in = r.optional(o, "inputs")) spec.inputs = parse_flows(r, *in, p + "/inputs");
    spec.outputs = parse_flows(r, r.required(o, "outputs", p), p + "/outputs");
    if (spec.outputs.empty()) r.fail(p + "/outputs", "a process needs at least one output");
    spec.primary_output = r.string(r.required(o, "primary_output", p), p + "/primary_output");
    m.processes.push_back(std::move(spec));
  }

  const auto& allocations = r.array(r.required(root, "allocations", ""), "/allocations", false);
  for (std::size_t i = 0; i < allocations.size(); ++i) {
    const auto p = ptr_at("/allocations", i);
    const auto& o = allocations[i];
    r.object(o, p, {"process", "resource", "input_quantities", "output_quantities"});
    AllocationSpec spec;
    spec.process = r.string(r.required(o, "process", p), p + "/process");
    spec.resource = r.string(r.required(o, "resource", p), p + "/resource");
    if (auto q = r.optional(o, "input_quantities")) spec.input_quantities = parse_flows(r, *q, p + "/input_quantities");
    if (auto q = r.optional(o, "output_quantities"))
      spec.output_quantities = parse_flows(r, *q, p + "/output_quantities");
    m.allocations.push_back(std::move(spec));
  }

  if (auto overrides = r.optional(root, "buffer_overrides")) {
    r.array(*overrides, "/buffer_overrides");
    for (std::size_t i = 0; i < overrides->size(); ++i) {
      const auto p = ptr_at("/buffer_overrides", i);
      const auto& o = (*overrides)[i];
      r.object(o, p, {"process", "resource", "operand", "direction", "buffer"});
      BufferOverrideSpec spec;
      spec.process = r.string(r.required(o, "process", p), p + "/process");
      if (auto res = r.optional(o, "resource")) spec.resource = r.string(*res, p + "/resource");
      spec.operand = r.string(r.required(o, "operand", p), p + "/operand");
      if (auto d = r.optional(o, "direction")) spec.direction = parse_direction(r, *d, p + "/direction");
      spec.buffer = r.string(r.required(o, "buffer", p), p + "/buffer");
      m.buffer_overrides.push_back(std::move(spec));
    }
  }

  if (auto aspects = r.optional(root, "aspects")) {
    r.array(*aspects, "/aspects");
    for (std::size_t i = 0; i < aspects->size(); ++i) m.aspects.push_back(r.string((*aspects)[i], ptr_at("/aspects", i)));
  }
  return m;
}

ModelFile parse_model(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  return parse_model_text(text, path.string());
}

SystemModel load_model(const std::filesystem::path& path) {
  const ModelFile raw = parse_model(path);
  try {
    return validate_model(raw);
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(path.string(), e.what());
  }
}

ordered_json to_json(const ModelFile& m) {
  ordered_json j;
  j["schema_version"] = m.schema_version;
  if (!m.name.empty()) j["name"] = m.name;
  j["operands"] = ordered_json::array();
  for (const auto& o : m.operands) {
    ordered_json e;
    e["id"] = o.id;
    if (!o.name.empty()) e["name"] = o.name;
    e["unit"] = o.unit;
    j["operands"].push_back(std::move(e));
  }
  j["resources"] = ordered_json::array();
  for (const auto& r : m.resources) {
    ordered_json e;
    e["id"] = r.id;
    if (!r.name.empty()) e["name"] = r.name;
    e["kind"] = std::string(to_string(r.kind));
    if (r.location) e["location"] = *r.location;
    j["resources"].push_back(std::move(e));
  }
  j["processes"] = ordered_json::array();
  for (const auto& p : m.processes) {
    ordered_json e;
    e["id"] = p.id;
    if (!p.name.empty()) e["name"] = p.name;
    e["kind"] = std::string(to_string(p.kind));
    e["inputs"] = flows_to_json(p.inputs);
    e["outputs"] = flows_to_json(p.outputs);
    e["primary_output"] = p.primary_output;
    j["processes"].push_back(std::move(e));
  }
  j["allocations"] = ordered_json::array();
  for (const auto& a : m.allocations) {
    ordered_json e;
    e["process"] = a.process;
    e["resource"] = a.resource;
    if (!a.input_quantities.empty()) e["input_quantities"] = flows_to_json(a.input_quantities);
    if (!a.output_quantities.empty()) e["output_quantities"] = flows_to_json(a.output_quantities);
    j["allocations"].push_back(std::move(e));
  }
  if (!m.buffer_overrides.empty()) {
    j["buffer_overrides"] = ordered_json::array();
    for (const auto& o : m.buffer_overrides) {
      ordered_json e;
      e["process"] = o.process;
      if (o.resource) e["resource"] = *o.resource;
      e["operand"] = o.operand;
      if (o.direction) e["direction"] = std::string(to_string(*o.direction));
      e["buffer"] = o.buffer;
      j["buffer_overrides"].push_back(std::move(e));
    }
  }
  if (!m.aspects.empty()) j["aspects"] = m.aspects;
  return j;
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

std::string_view to_string(ScenarioMode mode) {
  return mode == ScenarioMode::instantaneous ? "instantaneous" : "duration";
}

std::optional<ScenarioMode> parse_mode(std::string_view text) {
  if (text == "instantaneous") return ScenarioMode::instantaneous;
  if (text == "duration") return ScenarioMode::duration;
  return std::nullopt;
}

ScenarioFile parse_scenario_text(std::string_view text, std::string_view source) {
  Reader r(text, source);
  const json& root = r.root();
  r.object(root, "", {"schema_version", "horizon", "dt", "mode", "firings", "durations", "initiations", "gates",
                      "weight_overrides", "initial_marking", "enforce_nonnegative", "description"});
  r.schema_version(root);
  ScenarioFile s;
  s.schema_version = root["schema_version"].get<int>();
  s.horizon = r.count(r.required(root, "horizon", ""), "/horizon");
  if (s.horizon < 2) r.fail("/horizon", "horizon must allow at least one transition (K >= 2)");
  if (auto dt = r.optional(root, "dt")) {
    s.dt = r.number(*dt, "/dt");
    if (!(s.dt > 0.0)) r.fail("/dt", "time step must be positive");
  }
  if (auto mode = r.optional(root, "mode")) {
    s.mode = parse_enum<ScenarioMode>(r, *mode, "/mode",
                                      {{"instantaneous", ScenarioMode::instantaneous},
                                       {"duration", ScenarioMode::duration}});
  }
  auto check_k = [&](std::size_t k, const std::string& ptr) {
    if (k < 1 || k >= s.horizon) r.fail(ptr, fmt::format("k={} lies outside the steps 1..{}", k, s.horizon - 1));
  };
  auto nonnegative = [&](double v, const std::string& ptr) {
    if (v < 0.0) r.fail(ptr, "must be nonnegative");
    return v;
  };

  if (auto firings = r.optional(root, "firings")) {
    r.array(*firings, "/firings");
    for (std::size_t i = 0; i < firings->size(); ++i) {
      const auto p = ptr_at("/firings", i);
      const auto& o = (*firings)[i];
      r.object(o, p, {"k", "capability", "amount", "u_minus", "u_plus"});
      FiringEntry e;
      e.k = r.count(r.required(o, "k", p), p + "/k");
      check_k(e.k, p + "/k");
      e.capability = r.string(r.required(o, "capability", p), p + "/capability");
      if (auto a = r.optional(o, "amount")) {
        if (r.optional(o, "u_minus") || r.optional(o, "u_plus"))
          r.fail(p, "give either 'amount' or 'u_minus'/'u_plus', not both");
        e.u_minus = e.u_plus = nonnegative(r.number(*a, p + "/amount"), p + "/amount");
      } else {
        e.u_minus = nonnegative(r.number(r.required(o, "u_minus", p), p + "/u_minus"), p + "/u_minus");
        e.u_plus = nonnegative(r.number(r.required(o, "u_plus", p), p + "/u_plus"), p + "/u_plus");
      }
      if (s.mode == ScenarioMode::instantaneous && e.u_minus != e.u_plus)
        r.fail(p, "instantaneous mode requires u_minus == u_plus");
      s.firings.push_back(std::move(e));
    }
  }
  if (auto durations = r.optional(root, "durations")) {
    r.array(*durations, "/durations");
    for (std::size_t i = 0; i < durations->size(); ++i) {
      const auto p = ptr_at("/durations", i);
      const auto& o = (*durations)[i];
      r.object(o, p, {"capability", "steps"});
      DurationEntry e;
      e.capability = r.string(r.required(o, "capability", p), p + "/capability");
      e.steps = r.count(r.required(o, "steps", p), p + "/steps");
      if (e.steps == 0)
        r.fail(p + "/steps", "duration 0 is not a duration; use mode \"instantaneous\" for capabilities that "
                             "complete within their step");
      s.durations.push_back(std::move(e));
    }
  }
  if (auto initiations = r.optional(root, "initiations")) {
    r.array(*initiations, "/initiations");
    for (std::size_t i = 0; i < initiations->size(); ++i) {
      const auto p = ptr_at("/initiations", i);
      const auto& o = (*initiations)[i];
      r.object(o, p, {"k", "capability", "amount"});
      InitiationEntry e;
      e.k = r.count(r.required(o, "k", p), p + "/k");
      check_k(e.k, p + "/k");
      e.capability = r.string(r.required(o, "capability", p), p + "/capability");
      e.amount = nonnegative(r.number(r.required(o, "amount", p), p + "/amount"), p + "/amount");
      s.initiations.push_back(std::move(e));
    }
  }
  if (auto gates = r.optional(root, "gates")) {
    r.array(*gates, "/gates");
    for (std::size_t i = 0; i < gates->size(); ++i) {
      const auto p = ptr_at("/gates", i);
      const auto& o = (*gates)[i];
      r.object(o, p, {"capability", "amount", "operand", "buffer", "threshold", "count"});
      GateEntry e;
      e.capability = r.string(r.required(o, "capability", p), p + "/capability");
      e.amount = r.number(r.required(o, "amount", p), p + "/amount");
      if (!(e.amount > 0.0)) r.fail(p + "/amount", "must be positive");
      e.operand = r.string(r.required(o, "operand", p), p + "/operand");
      e.buffer = r.string(r.required(o, "buffer", p), p + "/buffer");
      e.threshold = r.number(r.required(o, "threshold", p), p + "/threshold");
      if (auto c = r.optional(o, "count")) e.count = r.count(*c, p + "/count");
      s.gates.push_back(std::move(e));
    }
  }
  if (auto overrides = r.optional(root, "weight_overrides")) {
    r.array(*overrides, "/weight_overrides");
    for (std::size_t i = 0; i < overrides->size(); ++i) {
      const auto p = ptr_at("/weight_overrides", i);
      const auto& o = (*overrides)[i];
      r.object(o, p, {"k", "capability", "operand", "buffer", "direction", "weight"});
      WeightOverrideEntry e;
      e.k = r.count(r.required(o, "k", p), p + "/k");
      check_k(e.k, p + "/k");
      e.capability = r.string(r.required(o, "capability", p), p + "/capability");
      e.operand = r.string(r.required(o, "operand", p), p + "/operand");
      e.buffer = r.string(r.required(o, "buffer", p), p + "/buffer");
      e.direction = parse_direction(r, r.required(o, "direction", p), p + "/direction");
      e.weight = r.number(r.required(o, "weight", p), p + "/weight");
      if (!(e.weight > 0.0)) r.fail(p + "/weight", "must be positive");
      s.weight_overrides.push_back(std::move(e));
    }
  }
  if (auto marking = r.optional(root, "initial_marking")) {
    r.array(*marking, "/initial_marking");
    for (std::size_t i = 0; i < marking->size(); ++i) {
      const auto p = ptr_at("/initial_marking", i);
      const auto& o = (*marking)[i];
      r.object(o, p, {"operand", "buffer", "amount"});
      MarkingEntry e;
      e.operand = r.string(r.required(o, "operand", p), p + "/operand");
      e.buffer = r.string(r.required(o, "buffer", p), p + "/buffer");
      e.amount = r.number(r.required(o, "amount", p), p + "/amount");
      s.initial_marking.push_back(std::move(e));
    }
  }
  if (auto enforce = r.optional(root, "enforce_nonnegative")) {
    if (!enforce->is_boolean()) r.fail("/enforce_nonnegative", "expected a boolean");
    s.enforce_nonnegative = enforce->get<bool>();
  }

  if (s.mode == ScenarioMode::instantaneous && (!s.durations.empty() || !s.initiations.empty() || !s.gates.empty()))
    r.fail("/mode", "instantaneous mode cannot carry durations, initiations or gates");
  if (s.mode == ScenarioMode::duration && s.durations.empty() && s.firings.empty())
    r.fail("/durations", "duration mode needs at least one duration entry");
  return s;
}

ScenarioFile parse_scenario(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  return parse_scenario_text(text, path.string());
}

ordered_json to_json(const ScenarioFile& s) {
  ordered_json j;
  j["schema_version"] = s.schema_version;
  j["horizon"] = s.horizon;
  j["dt"] = s.dt;
  if (s.mode) j["mode"] = std::string(to_string(*s.mode));
  if (!s.firings.empty()) {
    j["firings"] = ordered_json::array();
    for (const auto& f : s.firings) {
      ordered_json e;
      e["k"] = f.k;
      e["capability"] = f.capability;
      if (f.u_minus == f.u_plus) {
        e["amount"] = f.u_minus;
      } else {
        e["u_minus"] = f.u_minus;
        e["u_plus"] = f.u_plus;
      }
      j["firings"].push_back(std::move(e));
    }
  }
  if (!s.durations.empty()) {
    j["durations"] = ordered_json::array();
    for (const auto& d : s.durations) j["durations"].push_back({{"capability", d.capability}, {"steps", d.steps}});
  }
  if (!s.initiations.empty()) {
    j["initiations"] = ordered_json::array();
    for (const auto& i : s.initiations)
      j["initiations"].push_back({{"k", i.k}, {"capability", i.capability}, {"amount", i.amount}});
  }
  if (!s.gates.empty()) {
    j["gates"] = ordered_json::array();
    for (const auto& g : s.gates)
      j["gates"].push_back({{"capability", g.capability},
                            {"amount", g.amount},
                            {"operand", g.operand},
                            {"buffer", g.buffer},
                            {"threshold", g.threshold},
                            {"count", g.count}});
  }
  if (!s.weight_overrides.empty()) {
    j["weight_overrides"] = ordered_json::array();
    for (const auto& o : s.weight_overrides)
      j["weight_overrides"].push_back({{"k", o.k},
                                       {"capability", o.capability},
                                       {"operand", o.operand},
                                       {"buffer", o.buffer},
                                       {"direction", std::string(to_string(o.direction))},
                                       {"weight", o.weight}});
  }
  if (!s.initial_marking.empty()) {
    j["initial_marking"] = ordered_json::array();
    for (const auto& m : s.initial_marking)
      j["initial_marking"].push_back({{"operand", m.operand}, {"buffer", m.buffer}, {"amount", m.amount}});
  }
  if (s.enforce_nonnegative) j["enforce_nonnegative"] = *s.enforce_nonnegative;
  return j;
}

BoundScenario bind_scenario(const ScenarioFile& s, const SystemModel& model, const CapabilitySet& capabilities,
                            const EngineeringSystemNet& net) {
  auto capability = [&](const std::string& ref) {
    auto c = capabilities.resolve(ref);
    if (!c) throw ValidationError(fmt::format("scenario references unknown capability '{}'", ref));
    return *c;
  };
  auto place = [&](const std::string& operand, const std::string& buffer) {
    auto l = model.find_operand(operand);
    if (!l) throw ValidationError(fmt::format("scenario references unknown operand '{}'", operand));
    auto b = model.find_buffer(buffer);
    if (!b) throw ValidationError(fmt::format("scenario references '{}', which is not a buffer", buffer));
    return net.places.flat(*l, *b);
  };

  BoundScenario out;
  out.mode = s.mode.value_or(s.durations.empty() && s.initiations.empty() && s.gates.empty()
                                 ? ScenarioMode::instantaneous
                                 : ScenarioMode::duration);
  const std::size_t n = capabilities.size();

  if (out.mode == ScenarioMode::duration) {
    std::vector<std::size_t> durations(n, 0);
    for (const auto& d : s.durations) durations[capability(d.capability)] = d.steps;
    std::vector<Initiation> initiations;
    for (const auto& i : s.initiations) initiations.push_back({i.k, capability(i.capability), i.amount});
    std::vector<Gate> gates;
    for (const auto& g : s.gates)
      gates.push_back({capability(g.capability), g.amount, place(g.operand, g.buffer), g.threshold, g.count});
    out.schedule = schedule_from_durations(durations, initiations, s.horizon, std::move(gates));
  } else {
    if (!s.durations.empty() || !s.initiations.empty() || !s.gates.empty())
      throw ValidationError("instantaneous mode cannot carry durations, initiations or gates");
    out.schedule = empty_schedule(n, s.horizon);
  }
  for (const auto& f : s.firings) {
    if (out.mode == ScenarioMode::instantaneous && f.u_minus != f.u_plus)
      throw ValidationError("instantaneous mode requires u_minus == u_plus");
    const auto c = static_cast<Eigen::Index>(capability(f.capability));
    out.schedule.u_minus[f.k - 1](c) += f.u_minus;
    out.schedule.u_plus[f.k - 1](c) += f.u_plus;
  }

  out.initial = zero_state(net, s.dt);
  for (const auto& m : s.initial_marking) out.initial.q_buffer(static_cast<Eigen::Index>(place(m.operand, m.buffer))) += m.amount;

  for (const auto& o : s.weight_overrides)
    out.options.weight_overrides.push_back({o.k, capability(o.capability), place(o.operand, o.buffer), o.direction,
                                            o.weight});
  if (s.enforce_nonnegative.value_or(false)) out.options.step.nonnegative = NonnegativePolicy::enforce;
  return out;
}

// ---------------------------------------------------------------------------
// Flat problems
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

void fill_labels(std::vector<std::string>& labels, const std::vector<std::string>& ids) {
  if (labels.empty()) labels = ids;
}

}  // namespace

LcaProblem parse_problem_json(std::string_view text, std::string_view source) {
  Reader r(text, source);
  const json& root = r.root();
  r.object(root, "", {"schema_version", "name", "products", "processes", "aspects", "technology", "environmental",
                      "demand", "description"});
  r.schema_version(root);
  LcaProblem p;

  auto labelled = [&](std::string_view key, std::vector<std::string>& ids, std::vector<std::string>& labels,
                      std::vector<std::string>* units, bool allow_empty) {
    const auto ptr = "/" + std::string(key);
    const auto& arr = r.array(r.required(root, key, ""), ptr, allow_empty);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto pi = ptr_at(ptr, i);
      r.object(arr[i], pi, {"id", "label", "unit"});
      ids.push_back(r.string(r.required(arr[i], "id", pi), pi + "/id"));
      labels.push_back(arr[i].contains("label") ? r.string(arr[i]["label"], pi + "/label") : ids.back());
      if (units) units->push_back(arr[i].contains("unit") ? r.string(arr[i]["unit"], pi + "/unit") : "");
    }
  };
  labelled("products", p.product_ids, p.product_labels, &p.product_units, false);
  labelled("processes", p.process_ids, p.process_labels, nullptr, false);
  if (root.contains("aspects")) labelled("aspects", p.aspect_ids, p.aspect_labels, &p.aspect_units, true);

  auto matrix = [&](std::string_view key, std::size_t rows, std::size_t cols) {
    const auto ptr = "/" + std::string(key);
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const json* j = r.optional(root, key);
    if (!j) {
      if (rows == 0) return m;
      r.fail("", fmt::format("missing required field '{}'", key));
    }
    r.array(*j, ptr);
    if (j->size() != rows) r.fail(ptr, fmt::format("expected {} rows, got {}", rows, j->size()));
    for (std::size_t i = 0; i < rows; ++i) {
      const auto pi = ptr_at(ptr, i);
      const auto& row = r.array((*j)[i], pi);
      if (row.size() != cols) r.fail(pi, fmt::format("expected {} columns, got {}", cols, row.size()));
      for (std::size_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = r.number(row[c], ptr_at(pi, c));
    }
    return m;
  };
  p.technology = matrix("technology", p.product_ids.size(), p.process_ids.size());
  p.environmental = matrix("environmental", p.aspect_ids.size(), p.process_ids.size());
  if (auto d = r.optional(root, "demand")) {
    r.array(*d, "/demand");
    if (d->size() != p.product_ids.size()) r.fail("/demand", "demand length must match the product count");
    p.demand.resize(static_cast<Eigen::Index>(d->size()));
    for (std::size_t i = 0; i < d->size(); ++i) p.demand(static_cast<Eigen::Index>(i)) = r.number((*d)[i], ptr_at("/demand", i));
  }
  try {
    validate_problem(p);
  } catch (const ValidationError& e) {
    throw ParseError(std::string(source), e.what());
  }
  return p;
}

LcaProblem parse_problem_csv(std::string_view text, std::string_view source) {
  std::vector<std::vector<std::string>> a_rows, b_rows;
  std::vector<std::string> header;
  std::optional<std::vector<std::string>> y_row;
  std::vector<std::size_t> a_lines, b_lines;
  std::size_t y_line = 0;
  bool have_version = false;

  std::size_t line_no = 0;
  std::size_t start = 0;
  auto fail = [&](std::size_t line, std::size_t column, const std::string& message) -> void {
    throw ParseError(fmt::format("{}:{}:{}", source, line, column), message);
  };
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty() || line == "\r" || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto fields = split_csv_line(line);
    if (!have_version) {
      if (fields.size() < 2 || fields[0] != "schema_version") fail(line_no, 1, "first row must be 'schema_version,1'");
      auto v = parse_double(fields[1]);
      if (!v || *v != kSchemaVersion) fail(line_no, fields[0].size() + 2, fmt::format("unknown schema_version '{}'", fields[1]));
      have_version = true;
    } else if (header.empty()) {
      if (fields.size() < 3 || fields[0] != "block" || fields[1] != "id")
        fail(line_no, 1, "header must be 'block,id,<process ids...>'");
      header.assign(fields.begin() + 2, fields.end());
    } else if (fields[0] == "A") {
      a_rows.push_back(std::move(fields));
      a_lines.push_back(line_no);
    } else if (fields[0] == "B") {
      b_rows.push_back(std::move(fields));
      b_lines.push_back(line_no);
    } else if (fields[0] == "Y") {
      y_row = std::move(fields);
      y_line = line_no;
    } else {
      fail(line_no, 1, fmt::format("unknown block '{}' (expected A, B or Y)", fields[0]));
    }
    if (end == text.size()) break;
  }
  if (!have_version || header.empty()) fail(line_no, 1, "missing schema_version or header row");

  LcaProblem p;
  p.process_ids = header;
  p.process_labels = header;
  const auto cols = static_cast<Eigen::Index>(header.size());
  auto read_rows = [&](const std::vector<std::vector<std::string>>& rows, const std::vector<std::size_t>& lines,
                       std::vector<std::string>& ids) {
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != header.size() + 2)
        fail(lines[i], 1, fmt::format("expected {} fields, got {}", header.size() + 2, rows[i].size()));
      ids.push_back(rows[i][1]);
      std::size_t column = rows[i][0].size() + rows[i][1].size() + 3;
      for (std::size_t c = 0; c < header.size(); ++c) {
        auto v = parse_double(rows[i][c + 2]);
        if (!v) fail(lines[i], column, fmt::format("'{}' is not a number", rows[i][c + 2]));
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = *v;
        column += rows[i][c + 2].size() + 1;
      }
    }
    return m;
  };
  p.technology = read_rows(a_rows, a_lines, p.product_ids);
  p.environmental = read_rows(b_rows, b_lines, p.aspect_ids);
  fill_labels(p.product_labels, p.product_ids);
  fill_labels(p.aspect_labels, p.aspect_ids);
  if (y_row) {
    std::vector<std::string> ignored;
    p.demand = read_rows({*y_row}, {y_line}, ignored).row(0).transpose();
  }
  try {
    validate_problem(p);
  } catch (const ValidationError& e) {
    throw ParseError(std::string(source), e.what());
  }
  return p;
}

LcaProblem parse_problem(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  if (path.extension() == ".csv") return parse_problem_csv(text, path.string());
  return parse_problem_json(text, path.string());
}

namespace {

template <typename Resolve>
Vector parse_amounts(std::string_view text, std::string_view source, std::string_view key, std::size_t n,
                     Resolve resolve, std::string_view ref_key) {
  Reader r(text, source);
  const json& root = r.root();
  r.object(root, "", {"schema_version", std::string(key), "values", "description"});
  r.schema_version(root);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
  const json* values = r.optional(root, "values");
  const json* entries = r.optional(root, key);
  if (!values == !entries) r.fail("", fmt::format("give exactly one of '{}' or 'values'", key));
  if (values) {
    r.array(*values, "/values");
    if (values->size() != n) r.fail("/values", fmt::format("expected {} values, got {}", n, values->size()));
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = r.number((*values)[i], ptr_at("/values", i));
    return out;
  }
  const auto ptr = "/" + std::string(key);
  r.array(*entries, ptr);
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const auto p = ptr_at(ptr, i);
    const auto& e = (*entries)[i];
    r.object(e, p, {std::string(ref_key), "amount"});
    const auto ref = r.string(r.required(e, ref_key, p), p + "/" + std::string(ref_key));
    auto index = resolve(ref);
    if (!index) r.fail(p + "/" + std::string(ref_key), fmt::format("unknown {} '{}'", ref_key, ref));
    if (!seen.insert(*index).second) r.fail(p, fmt::format("{} '{}' listed twice", ref_key, ref));
    out(static_cast<Eigen::Index>(*index)) = r.number(r.required(e, "amount", p), p + "/amount");
  }
  return out;
}

}  // namespace

Vector parse_demand_text(std::string_view text, const LcaProblem& problem, std::string_view source) {
  const std::size_t n = static_cast<std::size_t>(problem.technology.rows());
  auto resolve = [&](const std::string& ref) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < problem.product_ids.size(); ++i)
      if (problem.product_ids[i] == ref) return i;
    for (std::size_t i = 0; i < problem.product_labels.size(); ++i)
      if (problem.product_labels[i] == ref) return i;
    std::size_t ordinal = 0;
    auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), ordinal);
    if (ec == std::errc() && ptr == ref.data() + ref.size() && ordinal >= 1 && ordinal <= n) return ordinal - 1;
    return std::nullopt;
  };
  return parse_amounts(text, source, "demand", n, resolve, "product");
}

Vector parse_demand(const std::filesystem::path& path, const LcaProblem& problem) {
  const auto text = read_text_file(path);
  return parse_demand_text(text, problem, path.string());
}

Vector parse_firing_text(std::string_view text, const CapabilitySet& capabilities, std::string_view source) {
  auto resolve = [&](const std::string& ref) { return capabilities.resolve(ref); };
  return parse_amounts(text, source, "firing", capabilities.size(), resolve, "capability");
}

Vector parse_firing(const std::filesystem::path& path, const CapabilitySet& capabilities) {
  const auto text = read_text_file(path);
  return parse_firing_text(text, capabilities, path.string());
}

}  // namespace lcanet
