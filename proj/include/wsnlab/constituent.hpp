#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace wsnlab {

// Task-based energy categories. Every parameter and every energy counter
// belongs to exactly one of them.
enum class Constituent : std::size_t { Individual = 0, Local, Global, Environment, Sink };

inline constexpr std::size_t kConstituentCount = 5;

inline constexpr std::array<Constituent, kConstituentCount> kAllConstituents{
    Constituent::Individual, Constituent::Local, Constituent::Global, Constituent::Environment,
    Constituent::Sink};

constexpr std::string_view to_string(Constituent c) {
  switch (c) {
    case Constituent::Individual: return "individual";
    case Constituent::Local: return "local";
    case Constituent::Global: return "global";
    case Constituent::Environment: return "environment";
    case Constituent::Sink: return "sink";
  }
  return "unknown";
}

inline std::optional<Constituent> constituent_from_string(std::string_view s) {
  for (auto c : kAllConstituents) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

}  // namespace wsnlab
