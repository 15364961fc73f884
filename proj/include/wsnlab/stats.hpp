#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsnlab/dataset.hpp"
#include "wsnlab/errors.hpp"
#include "wsnlab/special_functions.hpp"

namespace wsnlab {

struct Series {
  std::string label;
  std::vector<double> values;
};

namespace detail {

inline void check_pair(std::span<const double> p, std::span<const double> e) {
  if (p.size() != e.size())
    throw DataError("series lengths differ: " + std::to_string(p.size()) + " vs " +
                    std::to_string(e.size()));
  if (p.size() < 3) throw InsufficientDataError("correlation needs at least 3 samples");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!std::isfinite(p[i]) || !std::isfinite(e[i])) throw DataError("non-finite sample");
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

// Normalized cross-correlation of two centred series (Pearson's r).
inline double linear_corr(std::span<const double> p, std::span<const double> e) {
  detail::check_pair(p, e);
  const double mp = detail::mean(p);
  const double me = detail::mean(e);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dx = p[i] - mp;
    const double dy = e[i] - me;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVarianceError("correlation of a constant series");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

inline double linear_corr(const Series& p, const Series& e) { return linear_corr(p.values, e.values); }

// Higher-order normalized correlation: the same statistic on element-wise
// powers of both series. Order 1 is the linear case; the analysis uses 2.
inline double higher_order_corr(std::span<const double> p, std::span<const double> e, int order) {
  if (order < 1) throw DataError("correlation order must be >= 1");
  detail::check_pair(p, e);
  std::vector<double> pp(p.size()), ee(e.size());
  auto power = [order](double x) {
    double y = x;
    for (int k = 1; k < order; ++k) y *= x;
    return y;
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    pp[i] = power(p[i]);
    ee[i] = power(e[i]);
  }
  return linear_corr(pp, ee);
}

inline double nonlinear_corr(std::span<const double> p, std::span<const double> e) {
  return higher_order_corr(p, e, 2);
}

inline double nonlinear_corr(const Series& p, const Series& e) {
  return nonlinear_corr(p.values, e.values);
}

// Two-tailed significance of a sample correlation r over M samples, from the
// t statistic r * sqrt((M - 2) / (1 - r^2)) with M - 2 degrees of freedom.
inline double p_value(double r, std::size_t m) {
  if (m < 3) throw InsufficientDataError("p-value needs at least 3 samples");
  if (!(std::abs(r) <= 1.0)) throw DataError("correlation outside [-1, 1]");
  if (std::abs(r) == 1.0) return 0.0;
  if (r == 0.0) return 1.0;
  const double dof = static_cast<double>(m) - 2.0;
  const double t = r * std::sqrt(dof / (1.0 - r * r));
  return std::clamp(special::student_t_two_sided(t, dof), 0.0, 1.0);
}

struct CorrelationRow {
  std::string name;
  std::string symbol;
  double p_value = 1.0;
  double linear = 0.0;
  double nonlinear = 0.0;
  bool zero_variance = false;            // linear statistic undefined
  bool nonlinear_zero_variance = false;  // squared series constant

  friend bool operator==(const CorrelationRow&, const CorrelationRow&) = default;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;  // space order
  std::size_t samples = 0;
  std::string response = Dataset::kResponse;

  friend bool operator==(const CorrelationReport&, const CorrelationReport&) = default;
};

// A column whose statistic is undefined is flagged rather than failing the
// whole report; flagged rows carry p = 1 and zero correlations.
inline CorrelationReport analyze(const Dataset& data) {
  if (data.rows() < 3) throw InsufficientDataError("analysis needs at least 3 experiments");
  CorrelationReport rep;
  rep.samples = data.rows();
  for (std::size_t c = 0; c < data.parameter_count(); ++c) {
    CorrelationRow row;
    row.name = data.names[c];
    row.symbol = data.symbols[c];
    try {
      row.linear = linear_corr(data.columns[c], data.response);
      row.p_value = p_value(row.linear, data.rows());
    } catch (const ZeroVarianceError&) {
      row.zero_variance = true;
      row.linear = 0.0;
      row.p_value = 1.0;
    }
    try {
      row.nonlinear = nonlinear_corr(data.columns[c], data.response);
    } catch (const ZeroVarianceError&) {
      row.nonlinear_zero_variance = true;
      row.nonlinear = 0.0;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

struct ReductionResult {
  std::vector<std::string> selected;  // ascending p-value
  double alpha = 0.05;
  std::optional<double> corr_threshold;
  std::string rule;

  friend bool operator==(const ReductionResult&, const ReductionResult&) = default;
};

// Keeps parameters with p < alpha (and |linear| >= threshold when one is
// given), ordered by ascending p-value; ties fall back to name order so the
// result does not depend on the row order of the report.
inline ReductionResult reduce(const CorrelationReport& report, double alpha,
                              std::optional<double> corr_threshold = std::nullopt) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  std::vector<const CorrelationRow*> keep;
  for (const auto& row : report.rows) {
    if (row.zero_variance) continue;
    if (!(row.p_value < alpha)) continue;
    if (corr_threshold && !(std::abs(row.linear) >= *corr_threshold)) continue;
    keep.push_back(&row);
  }
  std::sort(keep.begin(), keep.end(), [](const CorrelationRow* a, const CorrelationRow* b) {
    if (a->p_value != b->p_value) return a->p_value < b->p_value;
    return a->name < b->name;
  });
  ReductionResult out;
  out.alpha = alpha;
  out.corr_threshold = corr_threshold;
  char buf[96];
  std::snprintf(buf, sizeof buf, "p_value < %g", alpha);
  out.rule = buf;
  if (corr_threshold) {
    std::snprintf(buf, sizeof buf, " and |linear_corr| >= %g", *corr_threshold);
    out.rule += buf;
  }
  for (const auto* r : keep) out.selected.push_back(r->name);
  return out;
}

}  // namespace wsnlab
