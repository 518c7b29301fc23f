#pragma once

// File formats: mode tables (CSV, JSON), coupling constants (JSON) and
// trajectories (CSV). Numbers are written as shortest round-trip decimals.

#include <ostream>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "wgmspin/coupling.hpp"
#include "wgmspin/dynamics.hpp"
#include "wgmspin/format.hpp"
#include "wgmspin/wgm.hpp"

namespace wgmspin {

inline constexpr const char* mode_table_header = "pol,l,k0,lambda_vac,kappa_c,Q";
inline constexpr const char* trajectory_header =
    "t,omega_x,omega_y,omega_z,S_x,S_y,S_z,abs_omega,abs_S,K_x,K_y,K_z,H_r";

inline void write_mode_table_csv(std::ostream& os, std::span<const ModeRecord> modes) {
  os << mode_table_header << '\n';
  for (const ModeRecord& m : modes) {
    os << to_string(m.polarization) << ',' << m.l << ',' << format_double(m.k0) << ','
       << format_double(m.vacuum_wavelength()) << ',' << format_double(m.kappa_c) << ','
       << format_double(m.Q) << '\n';
  }
}

inline nlohmann::ordered_json mode_table_json(std::span<const ModeRecord> modes) {
  auto rows = nlohmann::ordered_json::array();
  for (const ModeRecord& m : modes) {
    rows.push_back({{"pol", std::string(to_string(m.polarization))},
                    {"l", m.l},
                    {"k0", m.k0},
                    {"lambda_vac", m.vacuum_wavelength()},
                    {"kappa_c", m.kappa_c},
                    {"Q", m.Q}});
  }
  return rows;
}

inline nlohmann::ordered_json coupling_json(const CouplingConstants& c) {
  nlohmann::ordered_json j{{"lambda", c.lambda}, {"I", c.I}, {"l", c.l}};
  if (c.mode) {
    j["k0"] = c.mode->k0;
    j["kappa_c"] = c.mode->kappa_c;
    j["Q"] = c.mode->Q;
  } else {
    j["k0"] = nullptr;
    j["kappa_c"] = nullptr;
    j["Q"] = nullptr;
  }
  return j;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "# SI units; S_x,S_y,S_z and abs_S in units of hbar; K in kg m^2/s; H_r in J\n";
  os << trajectory_header << '\n';
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const SpinState& s = tr.samples[i];
    const Monitors& m = tr.monitors[i];
    os << format_double(s.t);
    for (int k = 0; k < 3; ++k) os << ',' << format_double(s.omega[k]);
    for (int k = 0; k < 3; ++k) os << ',' << format_double(s.S[k]);
    os << ',' << format_double(m.abs_omega) << ',' << format_double(m.abs_S);
    for (int k = 0; k < 3; ++k) os << ',' << format_double(m.K[k]);
    os << ',' << format_double(m.H_r) << '\n';
  }
}

}  // namespace wgmspin
