#pragma once

namespace vibronic {

// Boltzmann constant in meV per kelvin.
inline constexpr double kBoltzmannMeVPerK = 0.0861733;

// Reduced Planck constant in meV * ps.
inline constexpr double kHbarMeVPs = 0.6582119569;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace vibronic
