#pragma once

// Serialization of results as JSON, CSV or aligned text tables.
//
// CSV column sets:
//   lca result      kind,id,label,value,magnitude,direction,unit
//   trajectory      k,element,id,label,value
//   incidence       row,row_id,row_label,col,col_id,col_label,value
//   equivalence     block,id,expected,delta_q_b,abs_diff
//   decomposition   row_id,label,conversion,transportation,total,ratio,verdict

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcanet/equivalence.hpp"
#include "lcanet/esn.hpp"
#include "lcanet/incidence.hpp"
#include "lcanet/lca.hpp"

namespace lcanet {

enum class ReportFormat { json, csv, table };
std::string_view to_string(ReportFormat format);
std::optional<ReportFormat> parse_format(std::string_view text);

/// Shortest round-trip decimal form.
std::string format_number(double value);

nlohmann::ordered_json to_json(const LcaProblem& problem, const LcaResult& result);
/// Inverse of the above for the numeric payload.
LcaResult lca_result_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const EngineeringSystemNet& net, const Trajectory& trajectory);
nlohmann::ordered_json to_json(const EquivalenceReport& report);
nlohmann::ordered_json to_json(const DecompositionReport& report, const std::vector<DominanceRow>& dominance,
                               double threshold);

std::string render(const LcaProblem& problem, const LcaResult& result, ReportFormat format);
std::string render(const EngineeringSystemNet& net, const Trajectory& trajectory, ReportFormat format);
std::string render(const EquivalenceReport& report, ReportFormat format);
std::string render(const DecompositionReport& report, const std::vector<DominanceRow>& dominance, double threshold,
                   ReportFormat format);
std::string render_incidence(const SparseMatrix& matrix, const std::vector<std::string>& row_ids,
                             const std::vector<std::string>& row_labels, const std::vector<std::string>& col_ids,
                             const std::vector<std::string>& col_labels, ReportFormat format);

/// Writes to a file, or to stdout for "" and "-". Throws IoError.
void write_output(std::string_view text, const std::string& destination);

template <typename... Args>
void emit_report(ReportFormat format, const std::string& destination, const Args&... args) {
  write_output(render(args..., format), destination);
}

}  // namespace lcanet
