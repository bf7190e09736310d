#include "lcanet/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "lcanet/error.hpp"

namespace lcanet {

using nlohmann::ordered_json;

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    case ReportFormat::table: return "table";
  }
  return "json";
}

std::optional<ReportFormat> parse_format(std::string_view text) {
  if (text == "json") return ReportFormat::json;
  if (text == "csv") return ReportFormat::csv;
  if (text == "table") return ReportFormat::table;
  return std::nullopt;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return fmt::format("{}", value);
  return std::string(buf, ptr);
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += '"';
  return out;
}

template <typename... Fields>
void csv_row(std::string& out, const Fields&... fields) {
  bool first = true;
  auto add = [&](const auto& f) {
    if (!first) out.push_back(',');
    first = false;
    if constexpr (std::is_arithmetic_v<std::decay_t<decltype(f)>>) {
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(f)>>) out += format_number(f);
      else out += std::to_string(f);
    } else {
      out += csv_field(f);
    }
  };
  (add(fields), ...);
  out.push_back('\n');
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string sci(double v) { return fmt::format("{:.6e}", v == 0.0 ? 0.0 : v); }

/// Left-aligned first column, right-aligned rest.
std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out += "  ";
      out += c == 0 ? fmt::format("{:<{}}", cells[c], width[c]) : fmt::format("{:>{}}", cells[c], width[c]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string at(const std::vector<std::string>& v, std::size_t i) { return i < v.size() ? v[i] : std::string(); }

ordered_json vector_json(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const ordered_json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

std::string_view direction_of(double value) {
  if (value > 0.0) return "emitted";
  if (value < 0.0) return "consumed";
  return "none";
}

}  // namespace

// ---------------------------------------------------------------------------
// LCA results
// ---------------------------------------------------------------------------

ordered_json to_json(const LcaProblem& p, const LcaResult& r) {
  ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "lca-result";
  j["processes"] = ordered_json::array();
  for (std::size_t i = 0; i < p.process_ids.size(); ++i)
    j["processes"].push_back({{"id", p.process_ids[i]},
                              {"label", at(p.process_labels, i)},
                              {"scaling", r.scaling(static_cast<Eigen::Index>(i))}});
  j["demand"] = ordered_json::array();
  for (std::size_t i = 0; i < p.product_ids.size(); ++i)
    j["demand"].push_back({{"id", p.product_ids[i]},
                           {"label", at(p.product_labels, i)},
                           {"unit", at(p.product_units, i)},
                           {"value", p.demand.size() ? p.demand(static_cast<Eigen::Index>(i)) : 0.0}});
  j["aspects"] = ordered_json::array();
  j["presentation"] = ordered_json::array();
  for (std::size_t i = 0; i < p.aspect_ids.size(); ++i) {
    const double e = r.aspects(static_cast<Eigen::Index>(i));
    j["aspects"].push_back(
        {{"id", p.aspect_ids[i]}, {"label", at(p.aspect_labels, i)}, {"unit", at(p.aspect_units, i)}, {"value", e}});
    j["presentation"].push_back({{"id", p.aspect_ids[i]},
                                 {"magnitude", std::abs(e)},
                                 {"direction", std::string(direction_of(e))},
                                 {"unit", at(p.aspect_units, i)}});
  }
  j["residual"] = r.residual;
  j["condition_estimate"] = r.condition_estimate;
  j["reliable"] = r.reliable;
  j["warnings"] = r.warnings;
  return j;
}

LcaResult lca_result_from_json(const ordered_json& j) {
  LcaResult r;
  ordered_json scaling = ordered_json::array(), aspects = ordered_json::array();
  for (const auto& p : j.at("processes")) scaling.push_back(p.at("scaling"));
  for (const auto& a : j.at("aspects")) aspects.push_back(a.at("value"));
  r.scaling = vector_from_json(scaling);
  r.aspects = vector_from_json(aspects);
  r.residual = j.at("residual").get<double>();
  r.condition_estimate = j.at("condition_estimate").get<double>();
  r.reliable = j.at("reliable").get<bool>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string render(const LcaProblem& p, const LcaResult& r, ReportFormat format) {
  if (format == ReportFormat::json) return dump(to_json(p, r));
  if (format == ReportFormat::csv) {
    std::string out;
    csv_row(out, "kind", "id", "label", "value", "magnitude", "direction", "unit");
    for (std::size_t i = 0; i < p.process_ids.size(); ++i) {
      const double x = r.scaling(static_cast<Eigen::Index>(i));
      csv_row(out, "scaling", p.process_ids[i], at(p.process_labels, i), x, std::abs(x), "", "");
    }
    for (std::size_t i = 0; i < p.aspect_ids.size(); ++i) {
      const double e = r.aspects(static_cast<Eigen::Index>(i));
      csv_row(out, "aspect", p.aspect_ids[i], at(p.aspect_labels, i), e, std::abs(e), direction_of(e),
              at(p.aspect_units, i));
    }
    return out;
  }
  std::vector<std::vector<std::string>> scaling_rows, aspect_rows;
  for (std::size_t i = 0; i < p.process_ids.size(); ++i)
    scaling_rows.push_back({p.process_ids[i], at(p.process_labels, i), sci(r.scaling(static_cast<Eigen::Index>(i)))});
  for (std::size_t i = 0; i < p.aspect_ids.size(); ++i) {
    const double e = r.aspects(static_cast<Eigen::Index>(i));
    aspect_rows.push_back({p.aspect_ids[i], at(p.aspect_labels, i), sci(e), sci(std::abs(e)),
                           std::string(direction_of(e)), at(p.aspect_units, i)});
  }
  std::string out = "Scaling vector X\n";
  out += table({"process", "label", "X"}, scaling_rows);
  out += "\nEnvironmental aspects E\n";
  out += table({"aspect", "label", "E (signed)", "|E|", "direction", "unit"}, aspect_rows);
  out += fmt::format("\nresidual {}  condition {}  reliable {}\n", sci(r.residual), sci(r.condition_estimate),
                     r.reliable ? "yes" : "no");
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> reported_places(const EngineeringSystemNet& net, const Trajectory& t) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < net.place_count(); ++p) {
    bool keep = p < net.active_places.size() && net.active_places[p];
    for (const auto& s : t.states)
      if (!keep && s.q_buffer(static_cast<Eigen::Index>(p)) != 0.0) keep = true;
    if (keep) out.push_back(p);
  }
  return out;
}

}  // namespace

ordered_json to_json(const EngineeringSystemNet& net, const Trajectory& t) {
  ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "trajectory";
  j["horizon"] = t.states.size();
  j["dt"] = t.states.empty() ? 1.0 : t.states.front().dt;
  const auto places = reported_places(net, t);
  j["places"] = ordered_json::array();
  for (auto p : places) j["places"].push_back({{"id", net.place_ids[p]}, {"label", net.place_labels[p]}});
  j["transitions"] = ordered_json::array();
  for (std::size_t c = 0; c < net.transition_count(); ++c)
    j["transitions"].push_back({{"id", net.transition_ids[c]}, {"label", net.transition_labels[c]}});
  j["states"] = ordered_json::array();
  for (const auto& s : t.states) {
    ordered_json q = ordered_json::array();
    for (auto p : places) q.push_back(s.q_buffer(static_cast<Eigen::Index>(p)));
    j["states"].push_back({{"k", s.k}, {"q_buffer", q}, {"q_capability", vector_json(s.q_capability)}});
  }
  j["firings"] = ordered_json::array();
  for (std::size_t k = 0; k < t.u_minus.size(); ++k)
    j["firings"].push_back(
        {{"k", k + 1}, {"u_minus", vector_json(t.u_minus[k])}, {"u_plus", vector_json(t.u_plus[k])}});
  j["in_flight"] = ordered_json::array();
  for (const auto& f : t.in_flight)
    j["in_flight"].push_back({{"capability", net.transition_ids[f.capability]},
                              {"initiated_at", f.initiated_at},
                              {"completes_at", f.completes_at},
                              {"amount", f.amount}});
  j["time_varying_weights"] = t.time_varying_weights;
  j["warnings"] = t.warnings;
  return j;
}

std::string render(const EngineeringSystemNet& net, const Trajectory& t, ReportFormat format) {
  if (format == ReportFormat::json) return dump(to_json(net, t));
  const auto places = reported_places(net, t);
  if (format == ReportFormat::csv) {
    std::string out;
    csv_row(out, "k", "element", "id", "label", "value");
    for (const auto& s : t.states) {
      for (auto p : places)
        csv_row(out, s.k, "place", net.place_ids[p], net.place_labels[p], s.q_buffer(static_cast<Eigen::Index>(p)));
      for (std::size_t c = 0; c < net.transition_count(); ++c)
        csv_row(out, s.k, "in_flight", net.transition_ids[c], net.transition_labels[c],
                s.q_capability(static_cast<Eigen::Index>(c)));
    }
    for (std::size_t k = 0; k < t.u_minus.size(); ++k) {
      for (std::size_t c = 0; c < net.transition_count(); ++c)
        csv_row(out, k + 1, "u_minus", net.transition_ids[c], net.transition_labels[c],
                t.u_minus[k](static_cast<Eigen::Index>(c)));
      for (std::size_t c = 0; c < net.transition_count(); ++c)
        csv_row(out, k + 1, "u_plus", net.transition_ids[c], net.transition_labels[c],
                t.u_plus[k](static_cast<Eigen::Index>(c)));
    }
    return out;
  }
  std::vector<std::string> header{"place"};
  for (const auto& s : t.states) header.push_back(fmt::format("k={}", s.k));
  std::vector<std::vector<std::string>> rows;
  for (auto p : places) {
    std::vector<std::string> row{net.place_labels[p]};
    for (const auto& s : t.states) row.push_back(sci(s.q_buffer(static_cast<Eigen::Index>(p))));
    rows.push_back(std::move(row));
  }
  for (std::size_t c = 0; c < net.transition_count(); ++c) {
    std::vector<std::string> row{"in flight: " + net.transition_labels[c]};
    for (const auto& s : t.states) row.push_back(sci(s.q_capability(static_cast<Eigen::Index>(c))));
    rows.push_back(std::move(row));
  }
  std::string out = table(header, rows);
  for (const auto& f : t.in_flight)
    out += fmt::format("pending: {} x {} initiated at k={} completes at k={}\n", net.transition_labels[f.capability],
                       sci(f.amount), f.initiated_at, f.completes_at);
  for (const auto& w : t.warnings) out += "warning: " + w + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Equivalence
// ---------------------------------------------------------------------------

namespace {

ordered_json assumption_json(const AssumptionCheck& a) {
  return {{"held", a.held}, {"diagnostic", a.diagnostic}};
}

}  // namespace

ordered_json to_json(const EquivalenceReport& r) {
  ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "equivalence";
  j["assumptions"] = {{"one_to_one_allocation", assumption_json(r.assumptions.one_to_one)},
                      {"unit_horizon", assumption_json(r.assumptions.horizon)},
                      {"instantaneous_firing", assumption_json(r.assumptions.instantaneous)}};
  j["capabilities"] = r.capability_ids;
  j["scaling"] = vector_json(r.scaling);
  j["products"] = ordered_json::array();
  for (std::size_t i = 0; i < r.a_block_rows.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    j["products"].push_back({{"id", r.a_block_rows[i]}, {"expected", r.demand(e)}, {"delta_q_b", r.delta_products(e)}});
  }
  j["aspects"] = ordered_json::array();
  for (std::size_t i = 0; i < r.b_block_rows.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    j["aspects"].push_back({{"id", r.b_block_rows[i]}, {"expected", r.aspects(e)}, {"delta_q_b", r.delta_aspects(e)}});
  }
  j["max_abs_discrepancy"] = r.max_abs_discrepancy;
  j["tolerance"] = r.tolerance;
  j["equivalent"] = r.equivalent;
  j["verdict"] = r.verdict;
  return j;
}

std::string render(const EquivalenceReport& r, ReportFormat format) {
  if (format == ReportFormat::json) return dump(to_json(r));
  std::vector<std::vector<std::string>> rows;
  std::string out;
  if (format == ReportFormat::csv) csv_row(out, "block", "id", "expected", "delta_q_b", "abs_diff");
  auto add = [&](std::string_view block, const std::string& id, double expected, double got) {
    if (format == ReportFormat::csv) csv_row(out, block, id, expected, got, std::abs(expected - got));
    else rows.push_back({std::string(block), id, sci(expected), sci(got), sci(std::abs(expected - got))});
  };
  for (std::size_t i = 0; i < r.a_block_rows.size(); ++i)
    add("A", r.a_block_rows[i], r.demand(static_cast<Eigen::Index>(i)), r.delta_products(static_cast<Eigen::Index>(i)));
  for (std::size_t i = 0; i < r.b_block_rows.size(); ++i)
    add("B", r.b_block_rows[i], r.aspects(static_cast<Eigen::Index>(i)), r.delta_aspects(static_cast<Eigen::Index>(i)));
  if (format == ReportFormat::csv) return out;

  auto mark = [](const AssumptionCheck& a) { return std::string(a.held ? "held" : "VIOLATED") + "  " + a.diagnostic; };
  out += "Assumptions\n";
  out += "  one-to-one allocation   " + mark(r.assumptions.one_to_one) + "\n";
  out += "  K = 2, dt = 1           " + mark(r.assumptions.horizon) + "\n";
  out += "  U+ = U-                 " + mark(r.assumptions.instantaneous) + "\n\n";
  out += table({"block", "id", "[Y;E]", "dQ_B", "|diff|"}, rows);
  out += fmt::format("\nmax |dQ_B - [Y;E]| = {}  tolerance {}\n{}\n", sci(r.max_abs_discrepancy), sci(r.tolerance),
                     r.verdict);
  return out;
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

ordered_json to_json(const DecompositionReport& r, const std::vector<DominanceRow>& dominance, double threshold) {
  ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "decomposition";
  auto ids = [&](const std::vector<std::size_t>& cols) {
    ordered_json out = ordered_json::array();
    for (auto c : cols) out.push_back(r.capability_ids[c]);
    return out;
  };
  j["conversion_capabilities"] = ids(r.conversion_columns);
  j["transportation_capabilities"] = ids(r.transportation_columns);
  j["rows"] = ordered_json::array();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    j["rows"].push_back({{"id", r.row_ids[i]},
                         {"label", r.row_labels[i]},
                         {"conversion", r.conversion(e)},
                         {"transportation", r.transportation(e)},
                         {"total", r.total(e)}});
  }
  j["threshold"] = threshold;
  j["dominance"] = ordered_json::array();
  for (const auto& d : dominance)
    j["dominance"].push_back({{"id", d.id},
                              {"label", d.label},
                              {"conversion", d.conversion},
                              {"transportation", d.transportation},
                              {"ratio", d.ratio},
                              {"verdict", std::string(to_string(d.verdict))}});
  return j;
}

std::string render(const DecompositionReport& r, const std::vector<DominanceRow>& dominance, double threshold,
                   ReportFormat format) {
  if (format == ReportFormat::json) return dump(to_json(r, dominance, threshold));
  auto verdict_for = [&](std::size_t row) -> const DominanceRow* {
    for (const auto& d : dominance)
      if (d.row == row) return &d;
    return nullptr;
  };
  if (format == ReportFormat::csv) {
    std::string out;
    csv_row(out, "row_id", "label", "conversion", "transportation", "total", "ratio", "verdict");
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      const auto* d = verdict_for(i);
      csv_row(out, r.row_ids[i], r.row_labels[i], r.conversion(e), r.transportation(e), r.total(e),
              d ? format_number(d->ratio) : std::string(), d ? std::string(to_string(d->verdict)) : std::string());
    }
    return out;
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    const auto* d = verdict_for(i);
    rows.push_back({r.row_labels[i], sci(r.conversion(e)), sci(r.transportation(e)), sci(r.total(e)),
                    d ? sci(d->ratio) : "", d ? std::string(to_string(d->verdict)) : ""});
  }
  std::string out = table({"place", "conversion", "transportation", "total", "ratio", "verdict"}, rows);
  out += fmt::format("\nratio threshold {}\n", format_number(threshold));
  return out;
}

// ---------------------------------------------------------------------------
// Incidence export
// ---------------------------------------------------------------------------

std::string render_incidence(const SparseMatrix& m, const std::vector<std::string>& row_ids,
                             const std::vector<std::string>& row_labels, const std::vector<std::string>& col_ids,
                             const std::vector<std::string>& col_labels, ReportFormat format) {
  struct Entry {
    Eigen::Index row, col;
    double value;
  };
  std::vector<Entry> entries;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (const double v = m.coeff(r, c); v != 0.0) entries.push_back({r, c, v});

  if (format == ReportFormat::csv) {
    std::string out;
    csv_row(out, "row", "row_id", "row_label", "col", "col_id", "col_label", "value");
    for (const auto& e : entries) {
      const auto r = static_cast<std::size_t>(e.row), c = static_cast<std::size_t>(e.col);
      csv_row(out, r + 1, at(row_ids, r), at(row_labels, r), c + 1, at(col_ids, c), at(col_labels, c), e.value);
    }
    return out;
  }
  if (format == ReportFormat::json) {
    ordered_json j;
    j["schema_version"] = 1;
    j["kind"] = "incidence";
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["row_ids"] = row_ids;
    j["row_labels"] = row_labels;
    j["col_ids"] = col_ids;
    j["col_labels"] = col_labels;
    j["triplets"] = ordered_json::array();
    for (const auto& e : entries) j["triplets"].push_back({e.row, e.col, e.value});
    return dump(j);
  }
  std::vector<std::string> header{""};
  for (Eigen::Index c = 0; c < m.cols(); ++c) header.push_back(at(col_ids, static_cast<std::size_t>(c)));
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<std::string> row{at(row_labels, static_cast<std::size_t>(r))};
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(format_number(m.coeff(r, c)));
    rows.push_back(std::move(row));
  }
  return table(header, rows);
}

void write_output(std::string_view text, const std::string& destination) {
  if (destination.empty() || destination == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoError("cannot write to standard output");
    return;
  }
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", destination));
  out << text;
  out.flush();
  if (!out) throw IoError(fmt::format("error writing '{}'", destination));
}

}  // namespace lcanet
