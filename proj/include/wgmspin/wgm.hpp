#pragma once

// Whispering-gallery resonances of a homogeneous dielectric sphere in vacuum.
//
// Resonances are quasinormal modes: zeros of the boundary-matching determinant
// in the lower half of the complex wavenumber plane, with an outgoing h_l^(1)
// exterior. A pole at k0 - i*kappa_c/2 describes a Lorentzian line of full
// width kappa_c, so Q = k0 / kappa_c is the usual quality factor.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wgmspin/constants.hpp"
#include "wgmspin/format.hpp"
#include "wgmspin/specfun.hpp"

namespace wgmspin {

/// Geometry and material of the sphere. SI units throughout.
struct SphereParams {
  double R = 0.0;                  ///< radius, m
  double n = 1.0;                  ///< refractive index; epsilon = n^2 inside
  double rho = default_density;    ///< mass density, kg/m^3
  double I = 0.0;                  ///< moment of inertia, kg m^2
  bool inertia_overridden = false;

  static double solid_sphere_inertia(double R, double rho) {
    return 0.4 * (4.0 / 3.0 * pi * R * R * R * rho) * R * R;
  }

  static SphereParams make(double R, double n, double rho = default_density) {
    SphereParams p;
    p.R = R;
    p.n = n;
    p.rho = rho;
    p.I = solid_sphere_inertia(R, rho);
    p.validate();
    return p;
  }

  SphereParams with_inertia(double inertia) const {
    SphereParams p = *this;
    p.I = inertia;
    p.inertia_overridden = true;
    p.validate();
    return p;
  }

  double epsilon() const { return n * n; }

  /// n = 1 is admitted: the uniform-medium limit is a meaningful reference case.
  void validate() const {
    auto require = [](bool ok, const char* field, const char* rule) {
      if (!ok) throw std::invalid_argument(std::string(field) + " must be " + rule);
    };
    require(std::isfinite(R) && R > 0.0, "R", "positive");
    require(std::isfinite(n) && n >= 1.0, "n", ">= 1");
    require(std::isfinite(rho) && rho > 0.0, "rho", "positive");
    require(std::isfinite(I) && I > 0.0, "I", "positive");
  }
};

enum class Polarization { TE, TM };

inline std::string_view to_string(Polarization p) { return p == Polarization::TE ? "TE" : "TM"; }

inline Polarization parse_polarization(std::string_view s) {
  if (s == "TE" || s == "te") return Polarization::TE;
  if (s == "TM" || s == "tm") return Polarization::TM;
  throw std::invalid_argument("polarization must be TE or TM");
}

/// Closed interval of real wavenumbers, 1/m.
struct KWindow {
  double lo = 0.0;
  double hi = 0.0;

  static KWindow from_wavelengths(double lambda_min, double lambda_max) {
    return {2.0 * pi / lambda_max, 2.0 * pi / lambda_min};
  }
  bool contains(double k) const { return k >= lo && k <= hi; }
};

/// Tabulated real-k continuum mode with delta-in-k normalization:
/// r u(r) -> sqrt(2/pi) sin(k r - l pi/2 + phase_shift) as r -> infinity.
struct RadialProfile {
  std::vector<double> r;
  std::vector<double> u;
  double k = 0.0;
  double amplitude = 0.0;   ///< u = amplitude * j_l(n k r) inside
  double regular = 0.0;     ///< outside: u = amplitude * (regular j_l(kr) + irregular y_l(kr))
  double irregular = 0.0;
  double phase_shift = 0.0;

  bool empty() const { return r.empty(); }
};

struct ModeRecord {
  Polarization polarization = Polarization::TE;
  int l = 1;
  double k0 = 0.0;        ///< 1/m
  double kappa_c = 0.0;   ///< full linewidth in wavenumber, 1/m
  double Q = 0.0;
  double residual = 0.0;  ///< |D| / term scale at the pole
  RadialProfile radial_profile;

  complex pole() const { return {k0, -0.5 * kappa_c}; }
  double vacuum_wavelength() const { return 2.0 * pi / k0; }
};

/// The matching determinant split as D = psi_part + i chi_part, with both
/// parts and their k-derivatives analytic in k. Keeping the parts separate
/// preserves the tiny psi contribution that sets the linewidth.
struct Characteristic {
  complex psi_part;
  complex chi_part;
  complex dpsi_part;   ///< d/dk
  complex dchi_part;   ///< d/dk
  double scale = 0.0;  ///< sum of term magnitudes; |value| / scale is the relative residual

  complex value() const { return psi_part + complex{0.0, 1.0} * chi_part; }
  complex derivative() const { return dpsi_part + complex{0.0, 1.0} * dchi_part; }
  double relative_residual() const { return scale > 0.0 ? std::abs(value()) / scale : 0.0; }
};

namespace detail {

inline Characteristic characteristic(Polarization pol, int l, complex k, const SphereParams& p) {
  if (k == complex{0.0, 0.0}) throw std::domain_error("characteristic: k = 0");
  const complex x = k * p.R;
  const complex nx = p.n * x;
  const RiccatiParts in = riccati_parts(l, nx);
  const RiccatiParts out = riccati_parts(l, x);
  const double ll = static_cast<double>(l) * (l + 1);
  const complex d2psi_in = (ll / (nx * nx) - 1.0) * in.psi;
  const complex d2psi_out = (ll / (x * x) - 1.0) * out.psi;
  const complex d2chi_out = (ll / (x * x) - 1.0) * out.chi;
  const double n = p.n;
  const double n2 = n * n;
  Characteristic c;
  if (pol == Polarization::TE) {
    // D = n psi'(nx) xi(x) - psi(nx) xi'(x)
    c.psi_part = n * in.dpsi * out.psi - in.psi * out.dpsi;
    c.chi_part = n * in.dpsi * out.chi - in.psi * out.dchi;
    c.dpsi_part = p.R * (n2 * d2psi_in * out.psi - in.psi * d2psi_out);
    c.dchi_part = p.R * (n2 * d2psi_in * out.chi - in.psi * d2chi_out);
    c.scale = n * std::abs(in.dpsi) * std::abs(complex{out.psi} + complex{0, 1} * out.chi) +
              std::abs(in.psi) * std::abs(complex{out.dpsi} + complex{0, 1} * out.dchi);
  } else {
    // D = psi'(nx) xi(x) - n psi(nx) xi'(x)
    c.psi_part = in.dpsi * out.psi - n * in.psi * out.dpsi;
    c.chi_part = in.dpsi * out.chi - n * in.psi * out.dchi;
    c.dpsi_part = p.R * (n * d2psi_in * out.psi + (1.0 - n2) * in.dpsi * out.dpsi -
                         n * in.psi * d2psi_out);
    c.dchi_part = p.R * (n * d2psi_in * out.chi + (1.0 - n2) * in.dpsi * out.dchi -
                         n * in.psi * d2chi_out);
    c.scale = std::abs(in.dpsi) * std::abs(complex{out.psi} + complex{0, 1} * out.chi) +
              n * std::abs(in.psi) * std::abs(complex{out.dpsi} + complex{0, 1} * out.dchi);
  }
  return c;
}

}  // namespace detail

inline Characteristic te_characteristic_terms(int l, complex k, const SphereParams& p) {
  return detail::characteristic(Polarization::TE, l, k, p);
}

inline Characteristic tm_characteristic_terms(int l, complex k, const SphereParams& p) {
  return detail::characteristic(Polarization::TM, l, k, p);
}

/// TE matching residual; zeros in the lower half k-plane are TE quasinormal modes.
inline complex te_characteristic(int l, complex k, const SphereParams& p) {
  return te_characteristic_terms(l, k, p).value();
}

/// TM matching residual (1/epsilon enters the derivative condition).
inline complex tm_characteristic(int l, complex k, const SphereParams& p) {
  return tm_characteristic_terms(l, k, p).value();
}

inline Characteristic characteristic_terms(Polarization pol, int l, complex k,
                                           const SphereParams& p) {
  return detail::characteristic(pol, l, k, p);
}

// ---------------------------------------------------------------------------
// Continuum solutions and profiles

/// Real-k solution of the TE radial problem, delta-in-k normalized.
struct ContinuumSolution {
  int l = 0;
  double k = 0.0;
  double R = 0.0;
  double n = 1.0;
  double amplitude = 0.0;
  double regular = 0.0;
  double irregular = 0.0;
  double phase_shift = 0.0;

  double operator()(double r) const {
    if (r <= R) return amplitude * spherical_bessel_j(l, n * k * r).real();
    const double x = k * r;
    return amplitude * (regular * spherical_bessel_j(l, x).real() +
                        irregular * spherical_bessel_y(l, x).real());
  }
};

namespace detail {

// Exterior coefficients for an interior reference solution scale * j_l(n k r).
// Continuity of u and du/dr at R with W[psi, chi] = 1 gives
//   regular = -chi_part / n,  irregular = psi_part / n  (times scale).
inline ContinuumSolution assemble_continuum(int l, double k, const SphereParams& p,
                                            double regular, double irregular, double scale) {
  ContinuumSolution s;
  s.l = l;
  s.k = k;
  s.R = p.R;
  s.n = p.n;
  const double norm = std::hypot(regular, irregular);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::runtime_error("continuum solution: degenerate exterior coefficients");
  }
  // r u -> (regular sin(kr - l pi/2) - irregular cos(kr - l pi/2)) / k, scaled.
  const double normalization = std::sqrt(2.0 / pi) * k / norm;
  s.amplitude = normalization * scale;
  s.regular = regular / scale;
  s.irregular = irregular / scale;
  s.phase_shift = std::atan2(-irregular, regular);
  return s;
}

}  // namespace detail

/// Continuum solution at an arbitrary real wavenumber (no resonance assumed).
inline ContinuumSolution continuum_solution(int l, double k, const SphereParams& p,
                                            double interior_scale = 1.0) {
  if (!(k > 0.0)) throw std::invalid_argument("continuum_solution: k must be positive");
  const Characteristic c = te_characteristic_terms(l, complex{k, 0.0}, p);
  const double regular = -interior_scale * c.chi_part.real() / p.n;
  const double irregular = interior_scale * c.psi_part.real() / p.n;
  return detail::assemble_continuum(l, k, p, regular, irregular, interior_scale);
}

/// Continuum solution at the resonance peak k0 of a TE mode.
///
/// The regular exterior coefficient vanishes at the peak to first order. When
/// its computed value at k0 is no larger than what rounding of k0 to a double
/// (plus rounding of the terms) can produce, the line is too narrow to sample
/// and the coefficient is taken from the pole condition instead,
/// chi_part(k0) = (kappa_c / 2) d psi_part / dk.
inline ContinuumSolution resonant_solution(const ModeRecord& mode, const SphereParams& p,
                                           double interior_scale = 1.0) {
  if (mode.polarization != Polarization::TE) {
    throw std::invalid_argument("resonant_solution: TE modes only");
  }
  const Characteristic c = te_characteristic_terms(mode.l, complex{mode.k0, 0.0}, p);
  const double eps = std::numeric_limits<double>::epsilon();
  double chi = c.chi_part.real();
  const double k_spacing = std::nextafter(mode.k0, HUGE_VAL) - mode.k0;
  const double floor = 8.0 * eps * c.scale + 4.0 * k_spacing * std::abs(c.dchi_part);
  if (std::abs(chi) <= floor) chi = 0.5 * mode.kappa_c * c.dpsi_part.real();
  const double regular = -interior_scale * chi / p.n;
  const double irregular = interior_scale * c.psi_part.real() / p.n;
  return detail::assemble_continuum(mode.l, mode.k0, p, regular, irregular, interior_scale);
}

/// Uniform grid with a node exactly at R, a multiple of four intervals inside
/// the sphere and at least `points_per_wavelength` nodes per interior wavelength,
/// continued with the same spacing out to extent * R.
inline std::vector<double> default_profile_grid(double k0, const SphereParams& p,
                                                double points_per_wavelength = 80.0,
                                                double extent = 3.0) {
  const double interior_wavelength = 2.0 * pi / (p.n * k0);
  const double target = interior_wavelength / points_per_wavelength;
  std::size_t intervals = static_cast<std::size_t>(std::ceil(p.R / target));
  intervals = std::max<std::size_t>(4, (intervals + 3) / 4 * 4);
  const double h = p.R / static_cast<double>(intervals);
  const std::size_t total = static_cast<std::size_t>(std::ceil(extent * p.R / h - 1e-9));
  std::vector<double> grid;
  grid.reserve(std::max(total, intervals) + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    grid.push_back(p.R * (static_cast<double>(i) / static_cast<double>(intervals)));
  }
  for (std::size_t i = intervals + 1; i <= total; ++i) grid.push_back(h * static_cast<double>(i));
  return grid;
}

inline RadialProfile tabulate(const ContinuumSolution& s, std::span<const double> grid) {
  RadialProfile prof;
  prof.k = s.k;
  prof.amplitude = s.amplitude;
  prof.regular = s.regular;
  prof.irregular = s.irregular;
  prof.phase_shift = s.phase_shift;
  prof.r.assign(grid.begin(), grid.end());
  prof.u.reserve(grid.size());
  for (double r : grid) prof.u.push_back(s(r));
  return prof;
}

/// Resonant continuum profile u(k0, r) of a TE mode on the given radii.
inline RadialProfile radial_profile(const ModeRecord& mode, const SphereParams& p,
                                    std::span<const double> grid, double interior_scale = 1.0) {
  if (grid.empty() || !std::is_sorted(grid.begin(), grid.end()) || grid.front() < 0.0) {
    throw std::invalid_argument("radial_profile: grid must be sorted non-negative radii");
  }
  if (grid.back() < p.R) {
    throw std::invalid_argument("radial_profile: grid does not reach the sphere surface");
  }
  return tabulate(resonant_solution(mode, p, interior_scale), grid);
}

// ---------------------------------------------------------------------------
// Resonance search

struct ResonanceSearchOptions {
  double scan_step = 0.01;          ///< seed scan spacing in x = k R
  double pole_tolerance = 1e-10;    ///< on |D| / term scale
  int max_iterations = 60;
  double max_loss = 0.5;            ///< keep poles with kappa_c / k0 below this
  bool tabulate_profile = true;     ///< TE only
  double points_per_wavelength = 80.0;
  double profile_extent = 3.0;
};

struct ResonanceSearch {
  std::vector<ModeRecord> modes;
  std::vector<std::string> diagnostics;  ///< one line per rejected seed
};

/// Complex Newton refinement of a pole from a (usually real) seed, using the
/// analytic k-derivative of the matching determinant.
struct PoleRefinement {
  complex k;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline PoleRefinement refine_pole(Polarization pol, int l, complex seed, const SphereParams& p,
                                  int max_iterations = 60) {
  const double eps = std::numeric_limits<double>::epsilon();
  PoleRefinement out{seed};
  int settled = 0;
  for (int it = 0; it < max_iterations; ++it) {
    const Characteristic c = characteristic_terms(pol, l, out.k, p);
    const complex d = c.derivative();
    if (d == complex{0.0, 0.0} || !std::isfinite(std::abs(d))) break;
    const complex step = c.value() / d;
    out.k -= step;
    out.iterations = it + 1;
    if (!std::isfinite(out.k.real()) || !std::isfinite(out.k.imag()) || out.k.real() <= 0.0) break;
    // A couple of extra passes once the real part has settled tighten the
    // imaginary part, which can sit twenty orders below the real part.
    if (std::abs(step) <= 4.0 * eps * std::abs(out.k)) {
      if (++settled >= 2) {
        out.converged = true;
        break;
      }
    }
  }
  if (std::isfinite(out.k.real()) && std::isfinite(out.k.imag()) && out.k.real() > 0.0) {
    out.residual = characteristic_terms(pol, l, out.k, p).relative_residual();
  } else {
    out.residual = std::numeric_limits<double>::infinity();
  }
  return out;
}

inline ResonanceSearch find_resonance(Polarization pol, int l, KWindow window,
                                      const SphereParams& p,
                                      const ResonanceSearchOptions& opt = {}) {
  p.validate();
  if (l < 1) throw std::invalid_argument("find_resonance: l must be >= 1");
  if (!(window.lo > 0.0) || !(window.hi > window.lo) || !std::isfinite(window.hi)) {
    throw std::invalid_argument("find_resonance: window must be a bounded positive interval");
  }
  ResonanceSearch result;

  const double x_lo = window.lo * p.R;
  const double x_hi = window.hi * p.R;
  const std::size_t samples =
      std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil((x_hi - x_lo) / opt.scan_step)) + 1);
  std::vector<double> ks(samples);
  std::vector<double> mag(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    ks[i] = x / p.R;
    mag[i] = std::abs(characteristic_terms(pol, l, complex{ks[i], 0.0}, p).value());
  }

  std::vector<complex> poles;
  for (std::size_t i = 1; i + 1 < samples; ++i) {
    if (!(mag[i] < mag[i - 1] && mag[i] <= mag[i + 1])) continue;
    const PoleRefinement ref = refine_pole(pol, l, complex{ks[i], 0.0}, p, opt.max_iterations);
    const std::string where = "seed k=" + format_double(ks[i]) + ": ";
    if (!ref.converged || !(ref.residual <= opt.pole_tolerance)) {
      result.diagnostics.push_back(where + "Newton did not converge (residual " +
                                   format_double(ref.residual) + ")");
      continue;
    }
    if (!(ref.k.imag() < 0.0)) {
      result.diagnostics.push_back(where + "converged off the lower half plane");
      continue;
    }
    if (!window.contains(ref.k.real())) {
      result.diagnostics.push_back(where + "converged outside the window to k=" +
                                   format_double(ref.k.real()));
      continue;
    }
    if (!(-2.0 * ref.k.imag() / ref.k.real() < opt.max_loss)) {
      result.diagnostics.push_back(where + "pole too lossy");
      continue;
    }
    const bool duplicate = std::any_of(poles.begin(), poles.end(), [&](complex q) {
      return std::abs(q - ref.k) <= 1e-9 * std::abs(q);
    });
    if (duplicate) continue;
    poles.push_back(ref.k);

    ModeRecord m;
    m.polarization = pol;
    m.l = l;
    m.k0 = ref.k.real();
    m.kappa_c = -2.0 * ref.k.imag();
    m.Q = m.k0 / m.kappa_c;
    m.residual = ref.residual;
    if (opt.tabulate_profile && pol == Polarization::TE) {
      const auto grid = default_profile_grid(m.k0, p, opt.points_per_wavelength, opt.profile_extent);
      m.radial_profile = radial_profile(m, p, grid);
    }
    result.modes.push_back(std::move(m));
  }
  std::sort(result.modes.begin(), result.modes.end(),
            [](const ModeRecord& a, const ModeRecord& b) { return a.k0 < b.k0; });
  return result;
}

}  // namespace wgmspin
