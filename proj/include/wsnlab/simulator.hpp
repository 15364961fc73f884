#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <string_view>
#include <vector>

#include "wsnlab/constituent.hpp"
#include "wsnlab/errors.hpp"
#include "wsnlab/param_catalog.hpp"
#include "wsnlab/radio.hpp"
#include "wsnlab/topology.hpp"
#include "wsnlab/world.hpp"

namespace wsnlab {

struct Event {
  double arrival = 0.0;
  Point position;
};

// Poisson arrivals with mean interval T over [0, delta_t], uniform positions.
// Depends only on (world, seed), so every config run with the same seed sees
// the same environment.
inline std::vector<Event> generate_events(const WorldConfig& world, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xe17u};
  std::mt19937_64 rng(seq);
  std::exponential_distribution<double> gap(1.0 / world.event_interval_mean);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Event> events;
  double t = gap(rng);
  while (t <= world.delta_t) {
    Event e;
    e.arrival = t;
    e.position = {u01(rng) * world.area_side, u01(rng) * world.area_side};
    events.push_back(e);
    t += gap(rng);
  }
  return events;
}

struct TaskCounters {
  std::array<double, kConstituentCount> energy{};  // J spent per constituent

  std::uint64_t b_sense = 0;  // data packets created from detected events
  std::uint64_t b_store = 0;  // packets placed in a buffer (own or relayed)
  std::uint64_t b_mon = 0;    // neighbour-monitor control packets
  std::uint64_t b_reTx = 0;
  std::uint64_t b_ohear = 0;
  std::uint64_t b_topo = 0;
  std::uint64_t b_rout = 0;   // per-hop route control packets
  std::uint64_t b_pktls = 0;  // data packets lost (overflow, dead relay)
  // No mechanism in this simulator produces these; they stay zero.
  std::uint64_t b_Os = 0;
  std::uint64_t b_sec = 0;
  std::uint64_t b_local = 0;
  std::uint64_t b_global = 0;
  std::uint64_t b_ohead = 0;
  std::uint64_t b_ph = 0;
  double harvested = 0.0;

  double& operator[](Constituent c) { return energy[static_cast<std::size_t>(c)]; }
  double operator[](Constituent c) const { return energy[static_cast<std::size_t>(c)]; }

  double total_energy() const {
    double s = 0.0;
    for (double e : energy) s += e;
    return s;
  }

  friend bool operator==(const TaskCounters&, const TaskCounters&) = default;
};

// Detected-event count band that marks a run as performing well.
struct PerformanceBand {
  double mean_events = 0.0;  // N-bar
  double variance = 0.0;     // v
  double sigma_mult = 1.0;

  bool contains(double detected) const {
    return std::abs(detected - mean_events) <= sigma_mult * std::sqrt(variance);
  }

  // Poisson arrivals: mean and variance both equal delta_t / T.
  static PerformanceBand poisson(const WorldConfig& w, double sigma_mult = 1.0) {
    double m = w.delta_t / w.event_interval_mean;
    return {m, m, sigma_mult};
  }
};

struct ExperimentResult {
  double avg_residual_energy = 0.0;
  std::uint64_t received_data_packets = 0;
  std::uint64_t generated_events = 0;
  std::uint64_t detected_events = 0;
  std::uint64_t dropped_packets = 0;
  std::uint64_t in_flight_packets = 0;
  TaskCounters counters;
  bool performance_ok = false;
  std::uint64_t seed = 0;
  std::vector<double> config;
  std::vector<double> residual;  // per node, J
  double mean_realized_hops = 0.0;
  double mean_monitor_neighbors = 0.0;

  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

struct LogRecord {
  double time = 0.0;
  std::size_t node = 0;
  std::string_view task;
  Constituent constituent = Constituent::Individual;
  double joules = 0.0;
};

using EventLogger = std::function<void(const LogRecord&)>;

// One line per record: time node task constituent joules.
inline EventLogger stream_logger(std::ostream& os) {
  return [&os](const LogRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.1f %zu %.*s %.*s %.17e\n", r.time, r.node,
                  static_cast<int>(r.task.size()), r.task.data(),
                  static_cast<int>(to_string(r.constituent).size()), to_string(r.constituent).data(),
                  r.joules);
    os << buf;
  };
}

namespace detail {

struct Packet {
  std::size_t source = 0;
  std::size_t next_relay = 0;  // index into the source's relay chain
  std::int64_t arrived = 0;    // step at which it entered the current buffer
};

class Simulation {
 public:
  Simulation(const Topology& topo, const NetworkParams& p, const WorldConfig& w,
             const std::vector<Event>& events, const EventLogger* log)
      : topo_(topo), p_(p), w_(w), radio_(RadioModel::from(w)), events_(events), log_(log) {
    const std::size_t n = topo_.nodes.size();
    residual_.assign(n, w_.initial_energy);
    active_.assign(n, 1);
    buffers_.resize(n);
    next_flush_.resize(n);
    for (std::size_t i = 0; i < n; ++i) next_flush_[i] = topo_.flush_phase[i] * p_.tx_interval;
    capacity_ = static_cast<std::size_t>(w_.buffer_capacity);
    control_per_hop_ = static_cast<int>(std::lround(w_.control_per_hop));
  }

  ExperimentResult run() {
    const auto steps = static_cast<std::int64_t>(std::llround(w_.delta_t / w_.tick));
    double next_sense = 0.0;
    double next_monitor = w_.monitor_period;
    std::vector<char> detected(events_.size(), 0);
    std::size_t window_begin = 0;

    for (std::int64_t s = 0; s <= steps; ++s) {
      step_ = s;
      now_ = static_cast<double>(s) * w_.tick;
      const double due = now_ + kTimeEps;

      if (next_sense <= due) {
        int ops = 0;
        while (next_sense <= due) {
          ++ops;
          next_sense += p_.sense_interval;
        }
        sense(ops, detected, window_begin);
      }

      for (std::size_t i = 0; i < topo_.nodes.size(); ++i) {
        while (next_flush_[i] <= due) {
          next_flush_[i] += p_.tx_interval;
          if (active_[i]) flush(i);
        }
      }

      while (next_monitor <= due) {
        next_monitor += w_.monitor_period;
        for (std::size_t i = 0; i < topo_.nodes.size(); ++i)
          if (active_[i]) monitor(i);
      }

      if (s > 0) {
        for (std::size_t i = 0; i < topo_.nodes.size(); ++i)
          if (active_[i]) charge(i, w_.idle_power * w_.tick, Constituent::Local, "idle");
      }
    }

    ExperimentResult r;
    r.generated_events = events_.size();
    r.detected_events = detected_count_;
    r.received_data_packets = received_;
    r.counters = counters_;
    r.dropped_packets = counters_.b_pktls;
    for (std::size_t i = 0; i < buffers_.size(); ++i)
      if (active_[i]) r.in_flight_packets += buffers_[i].size();
    r.residual = residual_;
    double sum = 0.0;
    for (double e : residual_) sum += e;
    r.avg_residual_energy = residual_.empty() ? 0.0 : sum / static_cast<double>(residual_.size());
    r.mean_realized_hops = topo_.mean_realized_hops();
    r.mean_monitor_neighbors = topo_.mean_monitor_neighbors();
    return r;
  }

 private:
  static constexpr double kTimeEps = 1e-9;

  void log(std::size_t node, std::string_view task, Constituent c, double j) {
    if (log_ && *log_) (*log_)({now_, node, task, c, j});
  }

  // Pays up to `amount` from the node's battery. Returns false when the node
  // could not cover the full cost; the node stops in that case, and also
  // whenever its residual drops under the stop threshold.
  bool charge(std::size_t i, double amount, Constituent c, std::string_view task) {
    double pay = std::min(amount, residual_[i]);
    residual_[i] -= pay;
    counters_[c] += pay;
    log(i, task, c, pay);
    bool full = pay == amount;
    if (!full || residual_[i] < w_.stop_threshold) stop(i);
    return full;
  }

  void stop(std::size_t i) {
    if (!active_[i]) return;
    active_[i] = 0;
    counters_.b_pktls += buffers_[i].size();
    buffers_[i].clear();
    log(i, "stop", Constituent::Individual, 0.0);
  }

  void enqueue(std::size_t i, Packet pkt) {
    if (buffers_[i].size() >= capacity_) {
      buffers_[i].pop_front();
      ++counters_.b_pktls;
    }
    pkt.arrived = step_;
    buffers_[i].push_back(pkt);
    ++counters_.b_store;
  }

  void sense(int ops, std::vector<char>& detected, std::size_t& window_begin) {
    const double cost = w_.sense_energy * ops;
    for (std::size_t i = 0; i < topo_.nodes.size(); ++i)
      if (active_[i]) charge(i, cost, Constituent::Individual, "sense");

    while (window_begin < events_.size() &&
           events_[window_begin].arrival + w_.event_duration < now_ - kTimeEps)
      ++window_begin;
    for (std::size_t e = window_begin; e < events_.size(); ++e) {
      const Event& ev = events_[e];
      if (ev.arrival > now_ + kTimeEps) break;
      if (detected[e] || ev.arrival + w_.event_duration < now_ - kTimeEps) continue;
      std::size_t owner = topo_.nodes.size();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < topo_.nodes.size(); ++i) {
        if (!active_[i]) continue;
        double d = distance(topo_.nodes[i], ev.position);
        if (d <= p_.sense_radius && d < best) {
          best = d;
          owner = i;
        }
      }
      if (owner == topo_.nodes.size()) continue;
      detected[e] = 1;
      ++detected_count_;
      ++counters_.b_sense;
      enqueue(owner, Packet{owner, 0, step_});
    }
  }

  // Target of the next hop: the first still-active relay left on the
  // source's chain, or the source's nearest sink. Returns (node or npos, relay index).
  std::pair<std::size_t, std::size_t> next_hop(const Packet& pkt) const {
    const auto& chain = topo_.geometry[pkt.source].relays;
    std::size_t k = pkt.next_relay;
    while (k < chain.size() && !active_[chain[k]]) ++k;
    if (k < chain.size()) return {chain[k], k};
    return {kSink, k};
  }

  Point position_of(std::size_t target, const Packet& pkt) const {
    if (target == kSink) return topo_.sinks[topo_.geometry[pkt.source].nearest_sink];
    return topo_.nodes[target];
  }

  void flush(std::size_t i) {
    auto& buf = buffers_[i];
    std::size_t eligible = 0;
    while (eligible < buf.size() && buf[eligible].arrived < step_) ++eligible;
    if (eligible == 0) return;
    std::vector<Packet> out(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(eligible));
    buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(eligible));

    // Group by link, keeping the order in which links first appear.
    std::vector<std::size_t> link_order;
    std::vector<std::size_t> link_of(out.size());
    std::vector<Point> link_end;
    for (std::size_t k = 0; k < out.size(); ++k) {
      auto [target, idx] = next_hop(out[k]);
      Point end = position_of(target, out[k]);
      std::size_t l = 0;
      while (l < link_order.size() &&
             !(link_order[l] == target && (target != kSink || link_end[l] == end)))
        ++l;
      if (l == link_order.size()) {
        link_order.push_back(target);
        link_end.push_back(end);
      }
      link_of[k] = l;
    }
    std::vector<std::size_t> order(out.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return link_of[a] < link_of[b]; });

    const double data_bits = w_.data_packet_bits;
    const double ctrl_bits = w_.control_packet_bits;
    bool have_link = false;
    std::size_t cur_target = 0;
    Point cur_end{};
    for (std::size_t k : order) {
      Packet pkt = out[k];
      if (!active_[i]) {
        ++counters_.b_pktls;
        continue;
      }
      auto [target, idx] = next_hop(pkt);
      Point end = position_of(target, pkt);
      double d = distance(topo_.nodes[i], end);
      if (!have_link || target != cur_target || !(end == cur_end)) {
        have_link = true;
        cur_target = target;
        cur_end = end;
        for (int c = 0; c < control_per_hop_ && active_[i]; ++c) {
          ++counters_.b_rout;
          charge(i, radio_.tx_energy(ctrl_bits, d), Constituent::Global, "route_ctrl_tx");
          if (target != kSink && active_[target])
            charge(target, radio_.rx_energy(ctrl_bits), Constituent::Global, "route_ctrl_rx");
        }
        if (!active_[i]) {
          ++counters_.b_pktls;
          continue;
        }
        if (target != kSink && !active_[target]) {
          // Relay died during the handshake; retry this packet on the next link.
          auto [t2, i2] = next_hop(pkt);
          target = t2;
          idx = i2;
          end = position_of(target, pkt);
          d = distance(topo_.nodes[i], end);
          cur_target = target;
          cur_end = end;
        }
      }
      if (!charge(i, radio_.tx_energy(data_bits, d), Constituent::Global, "data_tx")) {
        ++counters_.b_pktls;
        continue;
      }
      if (target == kSink) {
        ++received_;
        continue;
      }
      if (!active_[target] ||
          !charge(target, radio_.rx_energy(data_bits), Constituent::Global, "data_rx")) {
        ++counters_.b_pktls;
        continue;
      }
      if (!active_[target]) {
        // Receiving pushed the relay under the stop threshold.
        ++counters_.b_pktls;
        continue;
      }
      pkt.next_relay = idx + 1;
      enqueue(target, pkt);
    }
  }

  void monitor(std::size_t i) {
    const auto& g = topo_.geometry[i];
    const double bits = w_.control_packet_bits;
    for (std::size_t k = 0; k < g.monitor_set.size() && active_[i]; ++k) {
      std::size_t j = g.monitor_set[k];
      if (!active_[j]) continue;
      double d = distance(topo_.nodes[i], topo_.nodes[j]);
      counters_.b_mon += 2;
      charge(i, radio_.tx_energy(bits, d) + radio_.rx_energy(bits), Constituent::Local, "monitor");
    }
  }

  static constexpr std::size_t kSink = static_cast<std::size_t>(-1);

  const Topology& topo_;
  NetworkParams p_;
  WorldConfig w_;
  RadioModel radio_;
  const std::vector<Event>& events_;
  const EventLogger* log_;

  std::vector<double> residual_;
  std::vector<char> active_;
  std::vector<std::deque<Packet>> buffers_;
  std::vector<double> next_flush_;
  std::size_t capacity_ = 0;
  int control_per_hop_ = 1;
  TaskCounters counters_;
  std::uint64_t detected_count_ = 0;
  std::uint64_t received_ = 0;
  std::int64_t step_ = 0;
  double now_ = 0.0;
};

}  // namespace detail

// Runs the tick loop on an explicit topology and event list. Sensing happens
// network-wide every g_sense starting at t = 0; a detected event belongs to
// the nearest active sensor covering it. Each node flushes its buffer every
// g_Tx (first flush at its phase), forwarding every packet one hop along its
// source's relay chain; relays store the packet and forward it at their own
// next flush. One neighbour exchange per monitor period, idle power each tick.
inline ExperimentResult simulate(const Topology& topology, const NetworkParams& params,
                                 const WorldConfig& world, const std::vector<Event>& events,
                                 const EventLogger* logger = nullptr) {
  require_valid(world);
  if (topology.nodes.empty()) throw InvalidConfigError("topology has no nodes");
  if (!(params.tx_interval > 0.0) || !(params.sense_interval > 0.0))
    throw InvalidConfigError("g_Tx and g_sense must be positive for simulation");
  detail::Simulation sim(topology, params, world, events, logger);
  return sim.run();
}

struct RunOptions {
  PerformanceBand band;
  const EventLogger* logger = nullptr;
};

// Full experiment: validation, topology and events from config.seed, then
// the simulation. The world comes from the space.
inline ExperimentResult run_experiment(const ExperimentConfig& config, const ConfigSpace& space,
                                       const RunOptions& options) {
  auto violations = validate(config, space);
  if (!violations.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& v : violations) msg += " [" + v.parameter + ": " + v.bound + "]";
    throw InvalidConfigError(msg);
  }
  const WorldConfig& world = space.world();
  require_valid(world);
  NetworkParams p = network_params(config, space);
  Topology topo = build_topology(p, world, config.seed);
  auto events = generate_events(world, config.seed);
  ExperimentResult r = simulate(topo, p, world, events, options.logger);
  r.seed = config.seed;
  r.config = config.values;
  r.performance_ok = options.band.contains(static_cast<double>(r.detected_events));
  return r;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config, const ConfigSpace& space) {
  return run_experiment(config, space, RunOptions{PerformanceBand::poisson(space.world()), nullptr});
}

}  // namespace wsnlab
