#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsnlab/dataset.hpp"
#include "wsnlab/errors.hpp"
#include "wsnlab/regression.hpp"
#include "wsnlab/stats.hpp"

namespace wsnlab {

using json = nlohmann::ordered_json;

namespace detail {

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", 0);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad field '") + key + "': " + e.what(), 0);
  }
}

inline nlohmann::json parse_json(std::istream& is) {
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), 0);
  }
}

inline std::vector<std::string_view> header_of(std::istream& is, std::string& line) {
  if (!std::getline(is, line)) throw ParseError("empty file", 1);
  return csv::split(csv::trim(line));
}

}  // namespace detail

// ---- correlation report ----

inline json to_json(const CorrelationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"parameter", row.name},
                    {"symbol", row.symbol},
                    {"p_value", row.p_value},
                    {"linear_corr", row.linear},
                    {"nonlinear_corr", row.nonlinear},
                    {"zero_variance", row.zero_variance},
                    {"nonlinear_zero_variance", row.nonlinear_zero_variance}});
  }
  return {{"response", r.response}, {"samples", r.samples}, {"rows", rows}};
}

inline CorrelationReport correlation_report_from_json(const nlohmann::json& j) {
  CorrelationReport r;
  r.response = detail::field<std::string>(j, "response");
  r.samples = detail::field<std::size_t>(j, "samples");
  for (const auto& row : detail::field<nlohmann::json>(j, "rows")) {
    CorrelationRow c;
    c.name = detail::field<std::string>(row, "parameter");
    c.symbol = detail::field<std::string>(row, "symbol");
    c.p_value = detail::field<double>(row, "p_value");
    c.linear = detail::field<double>(row, "linear_corr");
    c.nonlinear = detail::field<double>(row, "nonlinear_corr");
    c.zero_variance = row.value("zero_variance", false);
    c.nonlinear_zero_variance = row.value("nonlinear_zero_variance", false);
    r.rows.push_back(std::move(c));
  }
  return r;
}

// Table-style layout. The trailing symbol and flags columns are optional on
// input, so a bare four-column table can be read too.
inline void write_correlation_csv(std::ostream& os, const CorrelationReport& r) {
  os << "parameter,p_value,linear_corr,nonlinear_corr,symbol,flags\n";
  for (const auto& row : r.rows) {
    os << row.name << ',' << csv::format_double(row.p_value) << ',' << csv::format_double(row.linear)
       << ',' << csv::format_double(row.nonlinear) << ',' << row.symbol << ','
       << (row.zero_variance ? 1 : 0) + (row.nonlinear_zero_variance ? 2 : 0) << '\n';
  }
}

inline CorrelationReport read_correlation_csv(std::istream& is) {
  std::string line;
  auto header = detail::header_of(is, line);
  const bool extended = header.size() == 6;
  if (header.size() != 4 && !extended) throw ParseError("expected 4 or 6 columns in header", 1);
  const char* names[] = {"parameter", "p_value", "linear_corr", "nonlinear_corr", "symbol", "flags"};
  for (std::size_t k = 0; k < header.size(); ++k)
    if (csv::trim(header[k]) != names[k])
      throw ParseError("unexpected header column '" + std::string(header[k]) + "'", 1);

  CorrelationReport r;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    auto t = csv::trim(line);
    if (t.empty()) continue;
    auto f = csv::split(t);
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields", lineno);
    CorrelationRow row;
    row.name = std::string(csv::trim(f[0]));
    row.p_value = csv::parse_double(f[1], lineno);
    row.linear = csv::parse_double(f[2], lineno);
    row.nonlinear = csv::parse_double(f[3], lineno);
    row.symbol = row.name;
    if (extended) {
      row.symbol = std::string(csv::trim(f[4]));
      auto flags = csv::parse_uint(f[5], lineno);
      if (flags > 3) throw ParseError("flags must be in 0..3", lineno);
      row.zero_variance = flags & 1;
      row.nonlinear_zero_variance = flags & 2;
    }
    if (!(row.p_value >= 0.0 && row.p_value <= 1.0)) throw ParseError("p_value outside [0, 1]", lineno);
    r.rows.push_back(std::move(row));
  }
  return r;
}

// ---- reduction ----

inline json to_json(const ReductionResult& r) {
  json j{{"selected", r.selected}, {"alpha", r.alpha}, {"rule", r.rule}};
  j["corr_threshold"] = r.corr_threshold ? json(*r.corr_threshold) : json(nullptr);
  return j;
}

inline ReductionResult reduction_from_json(const nlohmann::json& j) {
  ReductionResult r;
  r.selected = detail::field<std::vector<std::string>>(j, "selected");
  r.alpha = detail::field<double>(j, "alpha");
  r.rule = j.value("rule", std::string());
  if (j.contains("corr_threshold") && !j["corr_threshold"].is_null())
    r.corr_threshold = j["corr_threshold"].get<double>();
  return r;
}

// ---- linear model ----

inline json to_json(const LinearModel& m) {
  return {{"names", m.names},         {"intercept", m.intercept}, {"coefficients", m.coefficients},
          {"lse", m.lse},             {"condition", m.condition}, {"samples", m.samples},
          {"provenance", m.provenance}};
}

inline LinearModel model_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.names = detail::field<std::vector<std::string>>(j, "names");
  m.intercept = detail::field<double>(j, "intercept");
  m.coefficients = detail::field<std::vector<double>>(j, "coefficients");
  m.lse = detail::field<double>(j, "lse");
  m.condition = j.value("condition", 0.0);
  m.samples = j.value("samples", std::size_t{0});
  m.provenance = j.value("provenance", std::string());
  if (m.names.size() != m.coefficients.size())
    throw ParseError("model has " + std::to_string(m.names.size()) + " names but " +
                         std::to_string(m.coefficients.size()) + " coefficients",
                     0);
  return m;
}

// ---- evaluation ----

inline json to_json(const EvaluationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"row", row.row},
                    {"seed", row.seed},
                    {"true", row.truth},
                    {"predicted", row.predicted},
                    {"abs_error", row.abs_error},
                    {"relative_error", row.rel_error},
                    {"excluded", row.excluded}});
  }
  return {{"mean_relative_error", r.mean_rel_error},
          {"max_relative_error", r.max_rel_error},
          {"lse", r.lse},
          {"excluded", r.excluded},
          {"rows", rows}};
}

inline EvaluationReport evaluation_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  r.mean_rel_error = detail::field<double>(j, "mean_relative_error");
  r.max_rel_error = detail::field<double>(j, "max_relative_error");
  r.lse = detail::field<double>(j, "lse");
  r.excluded = detail::field<std::size_t>(j, "excluded");
  for (const auto& row : detail::field<nlohmann::json>(j, "rows")) {
    EvaluationRow e;
    e.row = detail::field<std::size_t>(row, "row");
    e.seed = detail::field<std::uint64_t>(row, "seed");
    e.truth = detail::field<double>(row, "true");
    e.predicted = detail::field<double>(row, "predicted");
    e.abs_error = detail::field<double>(row, "abs_error");
    e.rel_error = detail::field<double>(row, "relative_error");
    e.excluded = detail::field<bool>(row, "excluded");
    r.rows.push_back(e);
  }
  return r;
}

inline void write_evaluation_csv(std::ostream& os, const EvaluationReport& r) {
  os << "row,true,predicted,relative_error,seed,excluded\n";
  for (const auto& row : r.rows) {
    os << row.row << ',' << csv::format_double(row.truth) << ',' << csv::format_double(row.predicted)
       << ',' << csv::format_double(row.rel_error) << ',' << row.seed << ',' << (row.excluded ? 1 : 0)
       << '\n';
  }
}

// Rebuilds the report from the per-row table; aggregates are recomputed.
inline EvaluationReport read_evaluation_csv(std::istream& is) {
  std::string line;
  auto header = detail::header_of(is, line);
  const char* names[] = {"row", "true", "predicted", "relative_error", "seed", "excluded"};
  if (header.size() != 6) throw ParseError("expected 6 columns in header", 1);
  for (std::size_t k = 0; k < 6; ++k)
    if (csv::trim(header[k]) != names[k])
      throw ParseError("unexpected header column '" + std::string(header[k]) + "'", 1);
  EvaluationReport r;
  double sum = 0.0, sse = 0.0;
  std::size_t counted = 0, lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    auto t = csv::trim(line);
    if (t.empty()) continue;
    auto f = csv::split(t);
    if (f.size() != 6) throw ParseError("expected 6 fields", lineno);
    EvaluationRow e;
    e.row = csv::parse_uint(f[0], lineno);
    e.truth = csv::parse_double(f[1], lineno);
    e.predicted = csv::parse_double(f[2], lineno);
    e.rel_error = csv::parse_double(f[3], lineno);
    e.seed = csv::parse_uint(f[4], lineno);
    e.excluded = csv::parse_uint(f[5], lineno) != 0;
    e.abs_error = std::abs(e.predicted - e.truth);
    sse += e.abs_error * e.abs_error;
    if (e.excluded) {
      ++r.excluded;
    } else {
      sum += e.rel_error;
      r.max_rel_error = std::max(r.max_rel_error, e.rel_error);
      ++counted;
    }
    r.rows.push_back(e);
  }
  r.mean_rel_error = counted ? sum / static_cast<double>(counted) : 0.0;
  r.lse = std::sqrt(sse);
  return r;
}

}  // namespace wsnlab
