#pragma once

#include <numbers>

namespace wgmspin {

inline constexpr double pi = std::numbers::pi;

/// CODATA 2018 exact values.
inline constexpr double speed_of_light = 299792458.0;              // m/s
inline constexpr double hbar = 1.054571817e-34;                     // J s

/// Mass density assumed when a configuration does not name one (glass-like).
inline constexpr double default_density = 2000.0;                   // kg/m^3

/// Conversions from SI to the c = hbar = 1 convention with lengths kept in meters.
namespace natural {

/// rad/s -> 1/m
inline constexpr double rate(double si) { return si / speed_of_light; }
/// J -> 1/m
inline constexpr double energy(double si) { return si / (hbar * speed_of_light); }
/// kg m^2 -> m
inline constexpr double inertia(double si) { return si * speed_of_light / hbar; }
/// J s -> dimensionless (units of hbar)
inline constexpr double action(double si) { return si / hbar; }

}  // namespace natural

}  // namespace wgmspin
