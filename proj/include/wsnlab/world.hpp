#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsnlab/errors.hpp"

namespace wsnlab {

// Fixed physical and application constants of the simulated world. Values
// that vary per experiment live in ExperimentConfig instead.
struct WorldConfig {
  double area_side = 200.0;          // m, square field
  double delta_t = 60.0;             // observation window
  double initial_energy = 0.05;      // J per node
  double event_interval_mean = 0.06;  // T, mean time between event arrivals
  double buffer_capacity = 100;      // n_buf, packets per node
  double data_packet_bits = 2000;
  double control_packet_bits = 256;
  double radio_e_elec = 5e-8;    // J/bit
  double radio_e_amp = 1e-10;    // J/bit/m^2
  double idle_power = 1e-6;      // J per time unit
  double stop_threshold = 1e-3;  // J

  double sense_energy = 1e-5;      // J per sensing operation
  double monitor_period = 5.0;     // one neighbour exchange per period
  double control_per_hop = 1.0;    // control packets per hop per flush
  double event_duration = 2.0;     // an event stays detectable this long
  double tick = 0.1;               // simulation clock increment

  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(WorldConfig, area_side, delta_t, initial_energy,
                                                event_interval_mean, buffer_capacity,
                                                data_packet_bits, control_packet_bits, radio_e_elec,
                                                radio_e_amp, idle_power, stop_threshold,
                                                sense_energy, monitor_period, control_per_hop,
                                                event_duration, tick)

// Returns one message per violated invariant; empty when the world is usable.
inline std::vector<std::string> world_violations(const WorldConfig& w) {
  std::vector<std::string> out;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " > 0");
  };
  positive(w.area_side, "area_side");
  positive(w.delta_t, "delta_t");
  positive(w.initial_energy, "initial_energy");
  positive(w.event_interval_mean, "event_interval_mean");
  positive(w.buffer_capacity, "buffer_capacity");
  positive(w.data_packet_bits, "data_packet_bits");
  positive(w.control_packet_bits, "control_packet_bits");
  positive(w.radio_e_elec, "radio_e_elec");
  positive(w.radio_e_amp, "radio_e_amp");
  positive(w.idle_power, "idle_power");
  positive(w.sense_energy, "sense_energy");
  positive(w.monitor_period, "monitor_period");
  positive(w.event_duration, "event_duration");
  positive(w.tick, "tick");
  if (!(w.control_per_hop >= 0.0)) out.push_back("control_per_hop >= 0");
  if (!(w.stop_threshold >= 0.0)) out.push_back("stop_threshold >= 0");
  if (w.buffer_capacity != std::floor(w.buffer_capacity)) out.push_back("buffer_capacity integral");
  // n_buf * T << delta_t, read as a factor of ten.
  if (w.buffer_capacity * w.event_interval_mean > w.delta_t / 10.0 + 1e-12)
    out.push_back("buffer_capacity * event_interval_mean <= delta_t / 10");
  return out;
}

inline void require_valid(const WorldConfig& w) {
  auto v = world_violations(w);
  if (v.empty()) return;
  std::string msg = "invalid world config:";
  for (const auto& s : v) msg += " [" + s + "]";
  throw InvalidConfigError(msg);
}

}  // namespace wsnlab
