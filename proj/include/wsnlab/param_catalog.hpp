#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsnlab/constituent.hpp"
#include "wsnlab/errors.hpp"
#include "wsnlab/hash.hpp"
#include "wsnlab/world.hpp"

namespace wsnlab {

enum class ParamKind { Continuous, Integer };

struct ParameterDescriptor {
  std::string name;
  std::string symbol;
  Constituent constituent = Constituent::Individual;
  ParamKind kind = ParamKind::Continuous;
  double lower = 0.0;
  double upper = 0.0;
  double default_value = 0.0;
  bool sampled = true;

  friend bool operator==(const ParameterDescriptor&, const ParameterDescriptor&) = default;
};

// Symbols of the sampled parameters, used by the simulator to read a config.
namespace sym {
inline constexpr const char* kTxInterval = "g_Tx";
inline constexpr const char* kHops = "h_iD";
inline constexpr const char* kSenseInterval = "g_sense";
inline constexpr const char* kSenseRadius = "r_sense";
inline constexpr const char* kNetDensity = "net_dens";
inline constexpr const char* kTxRadius = "r_Tx";
inline constexpr const char* kSinks = "snk";
inline constexpr const char* kNeighbors = "n";
}  // namespace sym

class ConfigSpace {
 public:
  ConfigSpace(std::vector<ParameterDescriptor> descriptors, WorldConfig world)
      : descriptors_(std::move(descriptors)), world_(world) {
    for (std::size_t i = 0; i < descriptors_.size(); ++i) {
      const auto& d = descriptors_[i];
      if (d.name.empty() || d.symbol.empty())
        throw InvalidConfigError("descriptor " + std::to_string(i) + " has an empty name or symbol");
      if (!(d.lower <= d.default_value && d.default_value <= d.upper))
        throw InvalidConfigError("descriptor " + d.name + ": lower <= default <= upper violated");
      if (d.kind == ParamKind::Integer &&
          std::floor(d.upper) < std::ceil(d.lower))
        throw InvalidConfigError("descriptor " + d.name + ": empty integer range");
      for (std::size_t j = 0; j < i; ++j) {
        if (descriptors_[j].name == d.name || descriptors_[j].symbol == d.symbol)
          throw InvalidConfigError("duplicate parameter " + d.name);
      }
    }
  }

  const std::vector<ParameterDescriptor>& descriptors() const noexcept { return descriptors_; }
  const WorldConfig& world() const noexcept { return world_; }
  std::size_t size() const noexcept { return descriptors_.size(); }

  // Accepts either the descriptor name or its symbol.
  std::optional<std::size_t> find(std::string_view key) const {
    for (std::size_t i = 0; i < descriptors_.size(); ++i) {
      if (descriptors_[i].name == key || descriptors_[i].symbol == key) return i;
    }
    return std::nullopt;
  }

  std::size_t index_of(std::string_view key) const {
    if (auto i = find(key)) return *i;
    throw LookupError("unknown parameter '" + std::string(key) + "'");
  }

  friend bool operator==(const ConfigSpace&, const ConfigSpace&) = default;

 private:
  std::vector<ParameterDescriptor> descriptors_;
  WorldConfig world_;
};

struct ExperimentConfig {
  std::vector<double> values;  // one per descriptor, ConfigSpace order
  std::uint64_t seed = 0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct Violation {
  std::string parameter;
  std::string bound;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// The eight sampled parameters with their sampling ranges.
inline ConfigSpace default_space(const WorldConfig& world = {}) {
  using C = Constituent;
  using K = ParamKind;
  return ConfigSpace(
      {
          {"transmission_interval", sym::kTxInterval, C::Global, K::Continuous, 1.0, 15.0, 5.0, true},
          {"num_hop", sym::kHops, C::Global, K::Integer, 0.0, 8.0, 3.0, true},
          {"sensor_interval", sym::kSenseInterval, C::Individual, K::Continuous, 0.5, 5.0, 1.0, true},
          {"sense_radius", sym::kSenseRadius, C::Individual, K::Continuous, 5.0, 30.0, 15.0, true},
          {"net_density", sym::kNetDensity, C::Global, K::Integer, 20.0, 150.0, 80.0, true},
          {"transmission_radius", sym::kTxRadius, C::Local, K::Continuous, 10.0, 60.0, 35.0, true},
          {"sink", sym::kSinks, C::Global, K::Integer, 1.0, 5.0, 2.0, true},
          {"neigh", sym::kNeighbors, C::Local, K::Integer, 1.0, 10.0, 5.0, true},
      },
      world);
}

inline ExperimentConfig default_config(const ConfigSpace& space, std::uint64_t seed = 0) {
  ExperimentConfig c;
  c.seed = seed;
  for (const auto& d : space.descriptors()) c.values.push_back(d.default_value);
  return c;
}

namespace detail {

inline double draw(const ParameterDescriptor& d, double lo, double hi, std::mt19937_64& rng) {
  if (d.kind == ParamKind::Integer) {
    auto a = static_cast<long long>(std::ceil(lo));
    auto b = static_cast<long long>(std::floor(hi));
    return static_cast<double>(std::uniform_int_distribution<long long>(a, b)(rng));
  }
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace detail

// Pure function of (space, seed).
inline ExperimentConfig sample_config(const ConfigSpace& space, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5a3u};
  std::mt19937_64 rng(seq);
  ExperimentConfig c;
  c.seed = seed;
  for (const auto& d : space.descriptors()) c.values.push_back(detail::draw(d, d.lower, d.upper, rng));

  // h_iD < net_dens - 1: redraw the hop count from the admissible part of its range.
  auto h = space.find(sym::kHops);
  auto nd = space.find(sym::kNetDensity);
  if (h && nd && c.values[*h] >= c.values[*nd] - 1.0) {
    const auto& hd = space.descriptors()[*h];
    double hi = std::min(hd.upper, c.values[*nd] - 2.0);
    if (hi < hd.lower)
      throw InvalidConfigError("no admissible hop count for net_dens = " +
                               std::to_string(c.values[*nd]));
    c.values[*h] = detail::draw(hd, hd.lower, hi, rng);
  }
  return c;
}

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

// Empty iff every range, integrality, catalog bound, and the hop/density
// constraint hold. Throws ArityError when the value count is wrong.
inline std::vector<Violation> validate(const ExperimentConfig& config, const ConfigSpace& space) {
  if (config.values.size() != space.size())
    throw ArityError("config has " + std::to_string(config.values.size()) + " values, space has " +
                     std::to_string(space.size()) + " descriptors");
  std::vector<Violation> out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& d = space.descriptors()[i];
    double v = config.values[i];
    if (!std::isfinite(v)) {
      out.push_back({d.name, d.symbol + " finite"});
      continue;
    }
    if (v < d.lower) out.push_back({d.name, d.symbol + " >= " + detail::num(d.lower)});
    if (v > d.upper) out.push_back({d.name, d.symbol + " <= " + detail::num(d.upper)});
    if (d.kind == ParamKind::Integer && v != std::floor(v))
      out.push_back({d.name, d.symbol + " integral"});
  }

  // Catalog boundaries, independent of the sampling ranges.
  auto check = [&](const char* s, auto pred, const char* text) {
    if (auto i = space.find(s)) {
      double v = config.values[*i];
      if (std::isfinite(v) && !pred(v)) out.push_back({space.descriptors()[*i].name, text});
    }
  };
  check(sym::kSenseRadius, [](double v) { return v > 0; }, "r_sense > 0");
  check(sym::kSenseInterval, [](double v) { return v >= 0; }, "g_sense >= 0");
  check(sym::kNeighbors, [](double v) { return v >= 1; }, "n >= 1");
  check(sym::kTxRadius, [](double v) { return v >= 0; }, "r_Tx >= 0");
  check(sym::kNetDensity, [](double v) { return v >= 2; }, "net_dens >= 2");
  check(sym::kSinks, [](double v) { return v > 0; }, "Snk > 0");
  check(sym::kHops, [](double v) { return v >= 0; }, "h_iD >= 0");
  check(sym::kTxInterval, [](double v) { return v > 0; }, "g_Tx > 0");

  auto h = space.find(sym::kHops);
  auto nd = space.find(sym::kNetDensity);
  if (h && nd && !(config.values[*h] < config.values[*nd] - 1.0))
    out.push_back({space.descriptors()[*h].name, "h_iD < net_dens - 1"});
  return out;
}

// ---- JSON ------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const ParameterDescriptor& d) {
  nlohmann::ordered_json j;
  j["name"] = d.name;
  j["symbol"] = d.symbol;
  j["constituent"] = std::string(to_string(d.constituent));
  j["kind"] = d.kind == ParamKind::Integer ? "integer" : "continuous";
  j["lower"] = d.lower;
  j["upper"] = d.upper;
  j["default"] = d.default_value;
  j["sampled"] = d.sampled;
  return j;
}

inline ParameterDescriptor descriptor_from_json(const nlohmann::json& j) {
  ParameterDescriptor d;
  d.name = j.at("name").get<std::string>();
  d.symbol = j.at("symbol").get<std::string>();
  auto c = constituent_from_string(j.at("constituent").get<std::string>());
  if (!c) throw DataError("unknown constituent in descriptor " + d.name);
  d.constituent = *c;
  auto kind = j.at("kind").get<std::string>();
  if (kind != "integer" && kind != "continuous")
    throw DataError("unknown kind '" + kind + "' in descriptor " + d.name);
  d.kind = kind == "integer" ? ParamKind::Integer : ParamKind::Continuous;
  d.lower = j.at("lower").get<double>();
  d.upper = j.at("upper").get<double>();
  d.default_value = j.at("default").get<double>();
  d.sampled = j.value("sampled", true);
  return d;
}

inline nlohmann::ordered_json to_json(const ConfigSpace& space) {
  nlohmann::ordered_json j;
  auto& arr = j["descriptors"] = nlohmann::ordered_json::array();
  for (const auto& d : space.descriptors()) arr.push_back(to_json(d));
  j["world"] = nlohmann::ordered_json(nlohmann::json(space.world()));
  return j;
}

inline ConfigSpace space_from_json(const nlohmann::json& j) {
  try {
    std::vector<ParameterDescriptor> ds;
    for (const auto& e : j.at("descriptors")) ds.push_back(descriptor_from_json(e));
    WorldConfig w = j.contains("world") ? j.at("world").get<WorldConfig>() : WorldConfig{};
    return ConfigSpace(std::move(ds), w);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed config space: ") + e.what());
  }
}

inline std::string space_hash(const ConfigSpace& space) {
  return hex64(fnv1a64(to_json(space).dump()));
}

}  // namespace wsnlab
