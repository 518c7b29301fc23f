#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "wgmspin/coupling.hpp"
#include "wgmspin/wgm.hpp"

namespace testing_support {

inline wgmspin::SphereParams benchmark_sphere() {
  return wgmspin::SphereParams::make(10e-6, std::sqrt(2.31));
}

inline wgmspin::KWindow benchmark_window() {
  return wgmspin::KWindow::from_wavelengths(740e-9, 747e-9);
}

inline constexpr double benchmark_wavelength = 743.25e-9;

/// The TE l = 120 resonance near 743 nm, with its profile; computed once.
inline const wgmspin::ModeRecord& benchmark_mode() {
  static const wgmspin::ModeRecord mode = [] {
    const auto found = wgmspin::find_resonance(wgmspin::Polarization::TE, 120, benchmark_window(),
                                               benchmark_sphere());
    if (found.modes.size() != 1) throw std::runtime_error("benchmark mode not found");
    return found.modes.front();
  }();
  return mode;
}

inline const wgmspin::CouplingConstants& benchmark_coupling() {
  static const wgmspin::CouplingConstants c = wgmspin::compute_lambda(benchmark_mode(), benchmark_sphere());
  return c;
}

inline std::complex<double> random_complex(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return std::polar(radius * u(rng) + 1e-3, 2.0 * M_PI * u(rng));
}

}  // namespace testing_support
