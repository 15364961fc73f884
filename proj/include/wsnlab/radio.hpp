#pragma once

#include "wsnlab/world.hpp"

namespace wsnlab {

// First-order radio model: electronics cost per bit on both ends, plus a
// free-space amplifier term growing with the square of the distance.
struct RadioModel {
  double e_elec = 5e-8;  // J/bit
  double e_amp = 1e-10;  // J/bit/m^2

  static RadioModel from(const WorldConfig& w) { return {w.radio_e_elec, w.radio_e_amp}; }

  double tx_energy(double bits, double distance_m) const {
    return e_elec * bits + e_amp * bits * distance_m * distance_m;
  }

  double rx_energy(double bits) const { return e_elec * bits; }
};

}  // namespace wsnlab
