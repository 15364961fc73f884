#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wsnlab/errors.hpp"
#include "wsnlab/param_catalog.hpp"
#include "wsnlab/simulator.hpp"

namespace wsnlab {

// Column-oriented table of experiments: one series per parameter in space
// order, the response, and the measured outcomes that travel with it.
struct Dataset {
  std::vector<std::string> names;    // parameter names
  std::vector<std::string> symbols;  // parameter symbols, CSV headers
  std::vector<std::vector<double>> columns;
  std::vector<double> response;  // avg_residual_energy
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> received;
  std::vector<std::uint64_t> generated;
  std::vector<std::uint64_t> detected;
  std::vector<std::uint64_t> dropped;
  std::vector<char> performance_ok;
  std::string space_hash;

  static constexpr const char* kResponse = "avg_residual_energy";

  std::size_t rows() const noexcept { return response.size(); }
  std::size_t parameter_count() const noexcept { return columns.size(); }

  std::optional<std::size_t> find(std::string_view key) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == key || symbols[i] == key) return i;
    return std::nullopt;
  }

  const std::vector<double>& column(std::string_view key) const {
    if (auto i = find(key)) return columns[*i];
    throw LookupError("dataset has no parameter column '" + std::string(key) + "'");
  }

  static Dataset empty_for(const ConfigSpace& space) {
    Dataset d;
    for (const auto& desc : space.descriptors()) {
      d.names.push_back(desc.name);
      d.symbols.push_back(desc.symbol);
    }
    d.columns.resize(space.size());
    d.space_hash = wsnlab::space_hash(space);
    return d;
  }

  void append(const ExperimentResult& r) {
    if (r.config.size() != columns.size()) throw ArityError("result/config arity mismatch");
    for (std::size_t i = 0; i < columns.size(); ++i) columns[i].push_back(r.config[i]);
    response.push_back(r.avg_residual_energy);
    seeds.push_back(r.seed);
    received.push_back(r.received_data_packets);
    generated.push_back(r.generated_events);
    detected.push_back(r.detected_events);
    dropped.push_back(r.dropped_packets);
    performance_ok.push_back(r.performance_ok ? 1 : 0);
  }

  // Rows for which keep(row) holds, same column layout.
  template <typename Pred>
  Dataset filter(Pred keep) const {
    Dataset d;
    d.names = names;
    d.symbols = symbols;
    d.columns.resize(columns.size());
    d.space_hash = space_hash;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (!keep(r)) continue;
      for (std::size_t c = 0; c < columns.size(); ++c) d.columns[c].push_back(columns[c][r]);
      d.response.push_back(response[r]);
      d.seeds.push_back(seeds[r]);
      d.received.push_back(received[r]);
      d.generated.push_back(generated[r]);
      d.detected.push_back(detected[r]);
      d.dropped.push_back(dropped[r]);
      d.performance_ok.push_back(performance_ok[r]);
    }
    return d;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace csv {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ParseError("expected a number, got '" + std::string(s) + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value", line);
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ParseError("expected a non-negative integer, got '" + std::string(s) + "'", line);
  return v;
}

}  // namespace csv

inline void write_dataset_csv(std::ostream& os, const Dataset& d) {
  os << "seed";
  for (const auto& s : d.symbols) os << ',' << s;
  os << ',' << Dataset::kResponse
     << ",received_packets,generated_events,detected_events,dropped,performance_ok\n";
  for (std::size_t r = 0; r < d.rows(); ++r) {
    os << d.seeds[r];
    for (const auto& col : d.columns) os << ',' << csv::format_double(col[r]);
    os << ',' << csv::format_double(d.response[r]) << ',' << d.received[r] << ',' << d.generated[r]
       << ',' << d.detected[r] << ',' << d.dropped[r] << ',' << (d.performance_ok[r] ? 1 : 0)
       << '\n';
  }
}

// Parameter columns are whatever sits between `seed` and the response; the
// space, when given, supplies descriptor names for known symbols.
inline Dataset read_dataset_csv(std::istream& is, const ConfigSpace* space = nullptr) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ParseError("empty dataset file", 1);
  ++lineno;
  auto header = csv::split(csv::trim(line));
  const std::vector<std::string_view> tail{Dataset::kResponse, "received_packets", "generated_events",
                                           "detected_events", "dropped", "performance_ok"};
  if (header.size() < 1 + tail.size() || csv::trim(header[0]) != "seed")
    throw ParseError("dataset header must start with 'seed' and end with the outcome columns", lineno);
  const std::size_t nparam = header.size() - 1 - tail.size();
  for (std::size_t k = 0; k < tail.size(); ++k) {
    if (csv::trim(header[1 + nparam + k]) != tail[k])
      throw ParseError("unexpected header column '" + std::string(header[1 + nparam + k]) + "'",
                       lineno);
  }

  Dataset d;
  for (std::size_t c = 0; c < nparam; ++c) {
    std::string s(csv::trim(header[1 + c]));
    std::string name = s;
    if (space) {
      if (auto i = space->find(s)) name = space->descriptors()[*i].name;
    }
    d.symbols.push_back(s);
    d.names.push_back(name);
  }
  d.columns.resize(nparam);
  if (space) d.space_hash = wsnlab::space_hash(*space);

  while (std::getline(is, line)) {
    ++lineno;
    auto t = csv::trim(line);
    if (t.empty()) continue;
    auto f = csv::split(t);
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(f.size()),
                       lineno);
    d.seeds.push_back(csv::parse_uint(f[0], lineno));
    for (std::size_t c = 0; c < nparam; ++c) d.columns[c].push_back(csv::parse_double(f[1 + c], lineno));
    std::size_t k = 1 + nparam;
    d.response.push_back(csv::parse_double(f[k], lineno));
    d.received.push_back(csv::parse_uint(f[k + 1], lineno));
    d.generated.push_back(csv::parse_uint(f[k + 2], lineno));
    d.detected.push_back(csv::parse_uint(f[k + 3], lineno));
    d.dropped.push_back(csv::parse_uint(f[k + 4], lineno));
    auto ok = csv::parse_uint(f[k + 5], lineno);
    if (ok > 1) throw ParseError("performance_ok must be 0 or 1", lineno);
    d.performance_ok.push_back(static_cast<char>(ok));
  }
  return d;
}

}  // namespace wsnlab
