#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vibronic/timetag.hpp"

namespace vibronic {

// A two-level emitter under CW excitation: exponential excitation waits
// alternate with exponential emission delays; one photon per cycle.
struct EmitterConfig {
  double excitation_rate_hz = 1e6;
  double excited_lifetime_s = 4e-9;
  std::vector<double> branching;     // per-band emission probability, sum <= 1
  std::vector<int> phonon_tags;      // phonons emitted per band photon (0/1/2)

  void validate(std::size_t band_count) const;
};

// Bunched background: Poisson-timed photon pairs inside one band, the
// second photon delayed by an exponential. Models background luminescence
// with classical intensity correlations.
struct CascadeBackground {
  std::uint8_t band = 0;
  double rate_hz = 0.0;    // pair rate
  double delay_s = 4e-9;   // mean separation within a pair
};

struct SceneConfig {
  std::size_t band_count = 1;
  double duration_s = 1.0;
  std::uint64_t seed = 0;
  std::vector<EmitterConfig> emitters;
  std::vector<double> background_rates_hz;       // per band, Poisson
  std::vector<CascadeBackground> cascades;       // optional
  std::vector<double> detection_efficiency;      // per band, in [0, 1]
  std::vector<std::vector<double>> misassignment;  // row-stochastic, optional
  double jitter_sigma_s = 0.0;

  void validate() const;
};

struct SimulationResult {
  TimeTagStream photons;
  TimeTagStream phonons;
};

// Deterministic given the scene (including seed). Photon and phonon
// streams come back sorted by (timestamp, channel, origin).
SimulationResult simulate(const SceneConfig& scene);

SceneConfig load_scene_json(const std::string& path);
SceneConfig parse_scene_json(const std::string& text);

}  // namespace vibronic
