#include <gtest/gtest.h>

#include <cstring>
#include <map>
#include <sstream>

#include "wsnlab/calibration.hpp"
#include "wsnlab/simulator.hpp"

using namespace wsnlab;

namespace {

NetworkParams single_node_params() {
  NetworkParams p;
  p.tx_interval = 2.0;
  p.hops = 0;
  p.sense_interval = 1.0;
  p.sense_radius = 5.0;
  p.node_count = 1;
  p.tx_radius = 35.0;
  p.sink_count = 1;
  p.neighbor_target = 5;
  return p;
}

WorldConfig short_world() {
  WorldConfig w;
  w.delta_t = 10.0;
  w.event_interval_mean = 0.01;
  return w;
}

}  // namespace

TEST(Radio, ZeroDistanceEqualsReceive) {
  RadioModel r = RadioModel::from(WorldConfig{});
  EXPECT_DOUBLE_EQ(r.tx_energy(2000, 0), r.rx_energy(2000));
  EXPECT_DOUBLE_EQ(r.rx_energy(2000), 5e-8 * 2000);
}

TEST(Radio, HandEvaluation) {
  RadioModel r = RadioModel::from(WorldConfig{});
  EXPECT_NEAR(r.tx_energy(1000, 10), 6e-5, 1e-18);
}

TEST(Radio, QuadraticLaw) {
  RadioModel r = RadioModel::from(WorldConfig{});
  for (double d : {1.0, 7.5, 40.0}) {
    double k = 256;
    EXPECT_NEAR(r.tx_energy(k, 2 * d) - r.tx_energy(k, d), 3 * 1e-10 * k * d * d, 1e-15);
  }
}

TEST(World, DefaultsValid) { EXPECT_TRUE(world_violations(WorldConfig{}).empty()); }

TEST(World, BufferWindowConstraint) {
  WorldConfig w;
  w.buffer_capacity = 1000;
  EXPECT_THROW(require_valid(w), InvalidConfigError);
  w = WorldConfig{};
  w.initial_energy = 0;
  EXPECT_FALSE(world_violations(w).empty());
  w = WorldConfig{};
  w.stop_threshold = 0;
  EXPECT_TRUE(world_violations(w).empty());
}

TEST(Topology, DirectHopWhenNoRelays) {
  auto t = make_topology({{0, 0}}, {{10, 0}}, single_node_params());
  ASSERT_EQ(t.geometry.size(), 1u);
  EXPECT_TRUE(t.geometry[0].relays.empty());
  ASSERT_EQ(t.geometry[0].hop_distances.size(), 1u);
  EXPECT_DOUBLE_EQ(t.geometry[0].hop_distances[0], 10.0);
  EXPECT_DOUBLE_EQ(t.geometry[0].sink_distance, 10.0);
}

TEST(Topology, EquallySpacedRelaysInDenseField) {
  std::vector<Point> nodes;
  for (int x = 0; x <= 99; ++x) nodes.push_back({static_cast<double>(x), 0.0});
  NetworkParams p = single_node_params();
  p.hops = 3;
  p.node_count = 100;
  auto t = make_topology(nodes, {{100, 0}}, p);
  const auto& g = t.geometry[0];
  ASSERT_EQ(g.relays.size(), 3u);
  EXPECT_EQ(g.relays, (std::vector<std::size_t>{25, 50, 75}));
  for (double d : g.hop_distances) EXPECT_NEAR(d, 25.0, 1e-12);
}

TEST(Topology, SparseFieldShortensChain) {
  NetworkParams p = single_node_params();
  p.hops = 4;
  p.node_count = 2;
  p.tx_radius = 10;
  auto t = make_topology({{0, 0}, {100, 100}}, {{100, 0}}, p);
  EXPECT_TRUE(t.geometry[0].relays.empty());
  EXPECT_EQ(t.mean_realized_hops(), 0.0);
}

TEST(Topology, RandomFieldInvariants) {
  WorldConfig w;
  auto space = default_space(w);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto cfg = sample_config(space, seed);
    auto p = network_params(cfg, space);
    auto t = build_topology(p, w, seed);
    EXPECT_EQ(t.nodes.size(), static_cast<std::size_t>(p.node_count));
    EXPECT_EQ(t.sinks.size(), static_cast<std::size_t>(p.sink_count));
    for (auto s : t.sinks) EXPECT_LE(distance(s, {100, 100}), w.area_side / 20 + 1e-12);
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& g = t.geometry[i];
      EXPECT_LE(g.relays.size(), static_cast<std::size_t>(p.hops));
      EXPECT_EQ(g.hop_distances.size(), g.relays.size() + 1);
      double sum = 0;
      for (double d : g.hop_distances) sum += d;
      EXPECT_GE(sum, g.sink_distance - 1e-9);
      EXPECT_LE(g.monitor_set.size(), static_cast<std::size_t>(p.neighbor_target));
      for (double d : g.neighbor_distances) EXPECT_LE(d, p.tx_radius);
      EXPECT_GT(t.flush_phase[i], 0.0);
      EXPECT_LE(t.flush_phase[i], 1.0);
    }
    EXPECT_EQ(t, build_topology(p, w, seed));
  }
}

TEST(Topology, RejectsTooFewNodes) {
  NetworkParams p = single_node_params();
  EXPECT_THROW(build_topology(p, WorldConfig{}, 1), InvalidConfigError);
  p.node_count = 10;
  p.sink_count = 0;
  EXPECT_THROW(build_topology(p, WorldConfig{}, 1), InvalidConfigError);
}

TEST(Events, DeterministicAndOrdered) {
  WorldConfig w;
  auto a = generate_events(w, 9);
  auto b = generate_events(w, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].arrival, b[i].arrival);
    if (i) {
      EXPECT_LE(a[i - 1].arrival, a[i].arrival);
    }
    EXPECT_LE(a[i].arrival, w.delta_t);
  }
}

TEST(Calibration, PoissonMeanAndVariance) {
  WorldConfig w;
  w.delta_t = 100;
  w.event_interval_mean = 10;
  w.buffer_capacity = 1;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 1000; ++s) seeds.push_back(s);
  auto c = calibrate_performance(w, seeds);
  EXPECT_NEAR(c.mean_events, 10.0, 2.0 * std::sqrt(10.0 / 1000.0) * 2.0);
  EXPECT_NEAR(c.variance, c.mean_events, 0.15 * c.mean_events);
}

TEST(Calibration, IdenticalSeedsHaveZeroVariance) {
  std::vector<std::uint64_t> seeds(30, 77);
  EXPECT_EQ(calibrate_performance(WorldConfig{}, seeds).variance, 0.0);
}

TEST(Calibration, NeedsTwoSeeds) {
  std::vector<std::uint64_t> one{1};
  EXPECT_THROW(calibrate_performance(WorldConfig{}, one), InsufficientDataError);
}

TEST(PerformanceBandTest, OneSigma) {
  PerformanceBand b{100, 25, 1.0};
  EXPECT_TRUE(b.contains(105));
  EXPECT_TRUE(b.contains(95));
  EXPECT_FALSE(b.contains(106));
  b.sigma_mult = 2;
  EXPECT_TRUE(b.contains(110));
}

TEST(Simulate, SingleNodeHandLedger) {
  WorldConfig w = short_world();
  auto p = single_node_params();
  auto t = make_topology({{0, 0}}, {{10, 0}}, p);
  std::vector<Event> events{{0.05, {1, 0}}};
  auto r = simulate(t, p, w, events);

  // Sensing at t = 0, 1, ..., 10; idle over the window; one flush at t = 2
  // carrying the packet detected at t = 1, with one route control packet.
  const double sensing = 11 * 1e-5;
  const double idle = 1e-6 * 10;
  const double data = 5e-8 * 2000 + 1e-10 * 2000 * 100;
  const double ctrl = 5e-8 * 256 + 1e-10 * 256 * 100;
  EXPECT_NEAR(r.residual[0], 0.05 - sensing - idle - data - ctrl, 1e-15);
  EXPECT_NEAR(r.counters[Constituent::Individual], sensing, 1e-15);
  EXPECT_NEAR(r.counters[Constituent::Local], idle, 1e-15);
  EXPECT_NEAR(r.counters[Constituent::Global], data + ctrl, 1e-15);
  EXPECT_EQ(r.received_data_packets, 1u);
  EXPECT_EQ(r.detected_events, 1u);
  EXPECT_EQ(r.counters.b_rout, 1u);
  EXPECT_EQ(r.counters.b_mon, 0u);
  EXPECT_EQ(r.in_flight_packets, 0u);
}

TEST(Simulate, NoEventsMeansOnlyHousekeeping) {
  WorldConfig sparse;
  sparse.delta_t = 100;
  sparse.event_interval_mean = 1000;  // not a valid world; only used to draw arrivals
  std::uint64_t seed = 0;
  while (!generate_events(sparse, seed).empty()) ++seed;

  WorldConfig w = short_world();
  NetworkParams p = single_node_params();
  p.node_count = 3;
  auto t = make_topology({{0, 0}, {5, 0}, {0, 5}}, {{20, 0}}, p);
  auto r = simulate(t, p, w, generate_events(sparse, seed));
  EXPECT_EQ(r.generated_events, 0u);
  EXPECT_EQ(r.received_data_packets, 0u);
  EXPECT_EQ(r.counters.b_rout, 0u);
  EXPECT_EQ(r.counters[Constituent::Global], 0.0);
  EXPECT_GT(r.counters[Constituent::Individual], 0.0);
  EXPECT_GT(r.counters[Constituent::Local], 0.0);
  EXPECT_GT(r.counters.b_mon, 0u);
}

TEST(Simulate, RelayPaysReceiveAndForward) {
  WorldConfig w = short_world();
  NetworkParams p = single_node_params();
  p.node_count = 2;
  p.hops = 1;
  p.neighbor_target = 0;
  auto t = make_topology({{0, 0}, {10, 0}}, {{20, 0}}, p, {1.0, 0.5});
  ASSERT_EQ(t.geometry[0].relays, (std::vector<std::size_t>{1}));
  std::vector<Event> events{{0.05, {0, 1}}};
  auto r = simulate(t, p, w, events);
  EXPECT_EQ(r.received_data_packets, 1u);
  // Node 0 forwards at t = 2 to node 1, which forwards at t = 3.
  const double data = 5e-8 * 2000 + 1e-10 * 2000 * 100;
  const double ctrl = 5e-8 * 256 + 1e-10 * 256 * 100;
  const double sensing = 11 * 1e-5, idle = 1e-5;
  EXPECT_NEAR(r.residual[0], 0.05 - sensing - idle - data - ctrl, 1e-15);
  EXPECT_NEAR(r.residual[1], 0.05 - sensing - idle - 5e-8 * 2000 - 5e-8 * 256 - data - ctrl, 1e-15);
  EXPECT_EQ(r.counters.b_rout, 2u);
}

TEST(Simulate, BufferOverflowDropsOldest) {
  WorldConfig w = short_world();
  w.buffer_capacity = 2;
  NetworkParams p = single_node_params();
  p.tx_interval = 9.5;
  std::vector<Event> events;
  for (int k = 0; k < 5; ++k) events.push_back({0.1 + k, {1, 0}});
  auto t = make_topology({{0, 0}}, {{10, 0}}, p);
  auto r = simulate(t, p, w, events);
  EXPECT_EQ(r.detected_events, 5u);
  EXPECT_EQ(r.counters.b_pktls, 3u);
  EXPECT_EQ(r.received_data_packets, 2u);
}

TEST(Simulate, EnergyConservationAndPacketChain) {
  auto space = default_space();
  const WorldConfig& w = space.world();
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    auto r = run_experiment(sample_config(space, seed), space);
    double initial = w.initial_energy * static_cast<double>(r.residual.size());
    double residual = 0;
    for (double e : r.residual) {
      EXPECT_GE(e, 0.0);
      EXPECT_LE(e, w.initial_energy);
      residual += e;
    }
    EXPECT_NEAR(initial - residual, r.counters.total_energy(), 1e-9 * initial) << seed;
    EXPECT_EQ(r.received_data_packets + r.in_flight_packets + r.counters.b_pktls, r.counters.b_sense) << seed;
    EXPECT_LE(r.received_data_packets, r.counters.b_sense);
    EXPECT_EQ(r.counters.b_sense, r.detected_events);
    EXPECT_LE(r.detected_events, r.generated_events);
    EXPECT_GE(r.avg_residual_energy, 0.0);
    EXPECT_LE(r.avg_residual_energy, w.initial_energy);
    EXPECT_EQ(r.counters[Constituent::Environment], 0.0);
    EXPECT_EQ(r.counters[Constituent::Sink], 0.0);
  }
}

TEST(Simulate, BitIdenticalReruns) {
  auto space = default_space();
  for (std::uint64_t seed : {3ull, 44ull, 555ull}) {
    auto cfg = sample_config(space, seed);
    auto a = run_experiment(cfg, space);
    auto b = run_experiment(cfg, space);
    EXPECT_EQ(a, b);
    EXPECT_EQ(std::memcmp(a.residual.data(), b.residual.data(), a.residual.size() * sizeof(double)), 0);
  }
}

TEST(Simulate, StoppedNodesStaySilent) {
  WorldConfig w;
  w.initial_energy = 0.004;
  auto space = default_space(w);
  std::size_t stops = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::map<std::size_t, double> stopped_at;
    std::vector<std::string> violations;
    EventLogger logger = [&](const LogRecord& rec) {
      auto it = stopped_at.find(rec.node);
      if (it != stopped_at.end()) {
        violations.push_back(std::string(rec.task) + " by node " + std::to_string(rec.node));
        return;
      }
      if (rec.task == "stop") stopped_at[rec.node] = rec.time;
    };
    RunOptions opt{PerformanceBand::poisson(w), &logger};
    auto r = run_experiment(sample_config(space, seed), space, opt);
    EXPECT_TRUE(violations.empty()) << violations.front();
    stops += stopped_at.size();
    for (auto [node, time] : stopped_at) EXPECT_LT(r.residual[node], w.stop_threshold);
  }
  EXPECT_GT(stops, 0u);
}

TEST(Simulate, EventLogLinesSumToSpentEnergy) {
  auto space = default_space();
  std::ostringstream os;
  EventLogger logger = stream_logger(os);
  RunOptions opt{PerformanceBand::poisson(space.world()), &logger};
  auto r = run_experiment(sample_config(space, 8), space, opt);
  std::istringstream is(os.str());
  double t, j, sum = 0;
  std::size_t node;
  std::string task, constituent;
  std::size_t lines = 0;
  while (is >> t >> node >> task >> constituent >> j) {
    sum += j;
    ++lines;
    EXPECT_TRUE(constituent_from_string(constituent).has_value());
  }
  EXPECT_GT(lines, 0u);
  EXPECT_NEAR(sum, r.counters.total_energy(), 1e-9 * r.counters.total_energy());
}

TEST(Simulate, InvalidConfigRejectedBeforeRunning) {
  auto space = default_space();
  auto cfg = default_config(space);
  cfg.values[space.index_of("g_Tx")] = 0;
  EXPECT_THROW(run_experiment(cfg, space), InvalidConfigError);
}

TEST(Simulate, MonitorChargesTheInitiator) {
  WorldConfig w = short_world();
  NetworkParams p = single_node_params();
  p.node_count = 2;
  p.neighbor_target = 1;
  auto t = make_topology({{0, 0}, {3, 4}}, {{100, 100}}, p);
  auto r = simulate(t, p, w, {});
  // Monitor rounds at t = 5 and t = 10; both nodes exchange with each other.
  const double ex = 5e-8 * 256 + 1e-10 * 256 * 25 + 5e-8 * 256;
  EXPECT_NEAR(r.counters[Constituent::Local], 2 * (1e-5 + 2 * ex), 1e-15);
  EXPECT_EQ(r.counters.b_mon, 8u);
}
