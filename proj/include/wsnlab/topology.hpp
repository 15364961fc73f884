#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "wsnlab/errors.hpp"
#include "wsnlab/param_catalog.hpp"
#include "wsnlab/world.hpp"

namespace wsnlab {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// The sampled parameters of one experiment, read out of an ExperimentConfig.
struct NetworkParams {
  double tx_interval = 5.0;     // g_Tx
  int hops = 0;                 // h_iD, configured relays per chain
  double sense_interval = 1.0;  // g_sense
  double sense_radius = 15.0;   // r_sense
  int node_count = 2;           // net_dens
  double tx_radius = 35.0;      // r_Tx
  int sink_count = 1;           // Snk
  int neighbor_target = 5;      // n, monitoring partners per node
};

inline NetworkParams network_params(const ExperimentConfig& config, const ConfigSpace& space) {
  if (config.values.size() != space.size())
    throw ArityError("config/space arity mismatch");
  NetworkParams p;
  auto get = [&](const char* s, double fallback) {
    auto i = space.find(s);
    return i ? config.values[*i] : fallback;
  };
  p.tx_interval = get(sym::kTxInterval, p.tx_interval);
  p.hops = static_cast<int>(std::lround(get(sym::kHops, p.hops)));
  p.sense_interval = get(sym::kSenseInterval, p.sense_interval);
  p.sense_radius = get(sym::kSenseRadius, p.sense_radius);
  p.node_count = static_cast<int>(std::lround(get(sym::kNetDensity, p.node_count)));
  p.tx_radius = get(sym::kTxRadius, p.tx_radius);
  p.sink_count = static_cast<int>(std::lround(get(sym::kSinks, p.sink_count)));
  p.neighbor_target = static_cast<int>(std::lround(get(sym::kNeighbors, p.neighbor_target)));
  return p;
}

struct NodeGeometry {
  std::size_t nearest_sink = 0;
  double sink_distance = 0.0;              // d_i
  std::vector<std::size_t> neighbors;      // within r_Tx, nearest first
  std::vector<double> neighbor_distances;  // d_ij
  std::vector<std::size_t> monitor_set;    // first n neighbours
  std::size_t covered_count = 0;           // a_i, nodes within r_sense
  double covered_mean_distance = 0.0;      // d_iA
  std::vector<std::size_t> relays;         // relay chain toward the sink
  std::vector<double> hop_distances;       // relays.size() + 1 entries, last hop ends at the sink

  friend bool operator==(const NodeGeometry&, const NodeGeometry&) = default;
};

struct Topology {
  std::vector<Point> nodes;
  std::vector<Point> sinks;
  std::vector<NodeGeometry> geometry;
  std::vector<double> flush_phase;  // first flush at phase * g_Tx, phase in (0, 1]

  double mean_realized_hops() const {
    if (geometry.empty()) return 0.0;
    double s = 0.0;
    for (const auto& g : geometry) s += static_cast<double>(g.relays.size());
    return s / static_cast<double>(geometry.size());
  }

  double mean_monitor_neighbors() const {
    if (geometry.empty()) return 0.0;
    double s = 0.0;
    for (const auto& g : geometry) s += static_cast<double>(g.monitor_set.size());
    return s / static_cast<double>(geometry.size());
  }

  friend bool operator==(const Topology&, const Topology&) = default;
};

// Derives every per-node quantity from explicit positions. Relay chains put
// `hops` equally spaced waypoints on the segment to the nearest sink and
// snap each to the nearest unused node within r_Tx of it; waypoints with no
// such node are skipped.
inline Topology make_topology(std::vector<Point> nodes, std::vector<Point> sinks,
                              const NetworkParams& p, std::vector<double> flush_phase = {}) {
  if (sinks.empty()) throw InvalidConfigError("at least one sink is required");
  Topology t;
  t.nodes = std::move(nodes);
  t.sinks = std::move(sinks);
  const std::size_t n = t.nodes.size();
  t.flush_phase = flush_phase.empty() ? std::vector<double>(n, 1.0) : std::move(flush_phase);
  if (t.flush_phase.size() != n) throw ArityError("flush phase count differs from node count");
  t.geometry.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    auto& g = t.geometry[i];
    const Point pi = t.nodes[i];

    g.sink_distance = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < t.sinks.size(); ++s) {
      double d = distance(pi, t.sinks[s]);
      if (d < g.sink_distance) {
        g.sink_distance = d;
        g.nearest_sink = s;
      }
    }

    std::vector<std::pair<double, std::size_t>> near;
    double covered_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = distance(pi, t.nodes[j]);
      if (d <= p.tx_radius) near.emplace_back(d, j);
      if (d <= p.sense_radius) {
        ++g.covered_count;
        covered_sum += d;
      }
    }
    std::sort(near.begin(), near.end());
    for (auto [d, j] : near) {
      g.neighbors.push_back(j);
      g.neighbor_distances.push_back(d);
    }
    std::size_t m = std::min<std::size_t>(near.size(), static_cast<std::size_t>(std::max(0, p.neighbor_target)));
    g.monitor_set.assign(g.neighbors.begin(), g.neighbors.begin() + static_cast<std::ptrdiff_t>(m));
    g.covered_mean_distance = g.covered_count ? covered_sum / static_cast<double>(g.covered_count) : 0.0;

    const Point sink = t.sinks[g.nearest_sink];
    std::vector<char> used(n, 0);
    used[i] = 1;
    for (int k = 1; k <= p.hops; ++k) {
      double f = static_cast<double>(k) / static_cast<double>(p.hops + 1);
      Point w{pi.x + f * (sink.x - pi.x), pi.y + f * (sink.y - pi.y)};
      std::size_t best = n;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (used[j]) continue;
        double d = distance(w, t.nodes[j]);
        if (d <= p.tx_radius && d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (best == n) continue;
      used[best] = 1;
      g.relays.push_back(best);
    }
    Point prev = pi;
    for (auto r : g.relays) {
      g.hop_distances.push_back(distance(prev, t.nodes[r]));
      prev = t.nodes[r];
    }
    g.hop_distances.push_back(distance(prev, sink));
  }
  return t;
}

// Uniform node placement, sinks grouped in a disc of radius area_side / 20
// around the field centre, and a random flush phase per node.
inline Topology build_topology(const NetworkParams& p, const WorldConfig& world, std::uint64_t seed) {
  if (p.node_count < 2) throw InvalidConfigError("net_dens must be >= 2");
  if (p.sink_count < 1) throw InvalidConfigError("Snk must be >= 1");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x7091u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<Point> nodes(static_cast<std::size_t>(p.node_count));
  for (auto& q : nodes) {
    q.x = u01(rng) * world.area_side;
    q.y = u01(rng) * world.area_side;
  }
  const double cx = world.area_side / 2.0;
  const double radius = world.area_side / 20.0;
  std::vector<Point> sinks(static_cast<std::size_t>(p.sink_count));
  for (auto& s : sinks) {
    double r = radius * std::sqrt(u01(rng));
    double a = 2.0 * std::numbers::pi * u01(rng);
    s = {cx + r * std::cos(a), cx + r * std::sin(a)};
  }
  std::vector<double> phase(nodes.size());
  for (auto& f : phase) f = 1.0 - u01(rng);  // (0, 1]
  return make_topology(std::move(nodes), std::move(sinks), p, std::move(phase));
}

}  // namespace wsnlab
