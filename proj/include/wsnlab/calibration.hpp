#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wsnlab/errors.hpp"
#include "wsnlab/simulator.hpp"
#include "wsnlab/world.hpp"

namespace wsnlab {

struct PerformanceCalibration {
  double mean_events = 0.0;  // N-bar
  double variance = 0.0;     // v, sample variance
  std::size_t seeds = 0;

  PerformanceBand band(double sigma_mult = 1.0) const { return {mean_events, variance, sigma_mult}; }
};

// Mean and sample variance of the number of generated events in delta_t.
inline PerformanceCalibration calibrate_performance(const WorldConfig& world,
                                                    std::span<const std::uint64_t> seeds) {
  require_valid(world);
  if (seeds.size() < 2) throw InsufficientDataError("variance needs at least two seeds");
  std::vector<double> counts;
  counts.reserve(seeds.size());
  for (auto s : seeds) counts.push_back(static_cast<double>(generate_events(world, s).size()));
  double mean = 0.0;
  for (double c : counts) mean += c;
  mean /= static_cast<double>(counts.size());
  double ss = 0.0;
  for (double c : counts) ss += (c - mean) * (c - mean);
  return {mean, ss / static_cast<double>(counts.size() - 1), seeds.size()};
}

}  // namespace wsnlab
