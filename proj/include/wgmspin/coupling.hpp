#pragma once

// Rotational coupling of a TE whispering-gallery multiplet to the sphere:
// the coupling constant Lambda, the optical angular momentum S of a set of
// mode amplitudes, Zeeman-type shifts and the closed-form rate estimates.

#include <cmath>
#include <complex>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgmspin/constants.hpp"
#include "wgmspin/format.hpp"
#include "wgmspin/specfun.hpp"
#include "wgmspin/wgm.hpp"

namespace wgmspin {

struct CouplingConstants {
  double lambda = 0.0;                 ///< dimensionless
  double I = 0.0;                      ///< kg m^2
  int l = 0;
  std::optional<ModeRecord> mode;      ///< absent for hand-specified constants

  static CouplingConstants manual(double lambda, double inertia, int l = 0) {
    return {lambda, inertia, l, std::nullopt};
  }
};

/// Thrown when the profile grid cannot deliver the requested quadrature accuracy.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimated, int refinement)
      : std::runtime_error(what), estimated_error(estimated), refinement_factor(refinement) {}
  double estimated_error;
  int refinement_factor;  ///< grid density multiplier expected to meet the bound
};

struct SimpsonEstimate {
  double value = 0.0;
  double error = 0.0;  ///< Richardson estimate |S_h - S_2h| / 15
};

/// Composite Simpson on uniformly spaced samples; needs a multiple of four
/// intervals so the half-density rule is also defined.
inline SimpsonEstimate simpson_richardson(std::span<const double> f, double h) {
  const std::size_t intervals = f.size() - 1;
  if (f.size() < 5 || intervals % 4 != 0) {
    throw std::invalid_argument("simpson_richardson: need 4m+1 samples");
  }
  auto simpson = [&](std::size_t stride) {
    const std::size_t n = intervals / stride;
    double sum = f[0] + f[intervals];
    for (std::size_t i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f[i * stride];
    return sum * static_cast<double>(stride) * h / 3.0;
  };
  const double fine = simpson(1);
  const double coarse = simpson(2);
  return {fine, std::abs(fine - coarse) / 15.0};
}

struct LambdaOptions {
  double relative_tolerance = 1e-4;
};

/// Lambda = pi kappa_c * integral_0^R (eps - 1) r^2 u(k0, r)^2 dr on the mode's
/// tabulated profile. The interior part of the grid must be uniform with a
/// node at R and a multiple of four intervals (default_profile_grid is).
inline CouplingConstants compute_lambda(const ModeRecord& mode, const SphereParams& p,
                                        const LambdaOptions& opt = {}) {
  p.validate();
  if (mode.polarization != Polarization::TE) {
    throw std::invalid_argument("compute_lambda: TE mode required");
  }
  CouplingConstants out{0.0, p.I, mode.l, mode};
  const double contrast = p.epsilon() - 1.0;
  if (contrast == 0.0) return out;

  RadialProfile profile = mode.radial_profile;
  if (profile.empty()) {
    profile = radial_profile(mode, p, default_profile_grid(mode.k0, p));
  }
  const auto& r = profile.r;
  std::size_t surface = 0;
  while (surface < r.size() && r[surface] < p.R) ++surface;
  if (r.empty() || r.front() != 0.0 || surface == r.size() || r[surface] != p.R) {
    throw std::invalid_argument("compute_lambda: profile grid needs nodes at r = 0 and r = R");
  }
  const double h = p.R / static_cast<double>(surface);
  for (std::size_t i = 1; i <= surface; ++i) {
    if (std::abs((r[i] - r[i - 1]) - h) > 1e-9 * h) {
      throw std::invalid_argument("compute_lambda: interior grid must be uniform");
    }
  }
  std::vector<double> f(surface + 1);
  for (std::size_t i = 0; i <= surface; ++i) {
    f[i] = contrast * r[i] * r[i] * profile.u[i] * profile.u[i];
  }
  const SimpsonEstimate s = simpson_richardson(f, h);
  const double relative = s.value != 0.0 ? s.error / std::abs(s.value) : 0.0;
  if (relative > opt.relative_tolerance) {
    const int factor =
        static_cast<int>(std::ceil(std::pow(relative / opt.relative_tolerance, 0.25)));
    throw QuadratureError("compute_lambda: estimated quadrature error " + format_double(relative) +
                              " exceeds bound; refine grid by a factor " + std::to_string(factor),
                          relative, factor);
  }
  out.lambda = pi * mode.kappa_c * s.value;
  return out;
}

// ---------------------------------------------------------------------------
// Optical angular momentum of a coherent multiplet

struct OpticalAngularMomentum {
  Eigen::Vector3d S = Eigen::Vector3d::Zero();  ///< units of hbar
  double photon_number = 0.0;
  int l = 0;
};

/// S_i = alpha^dagger L_i alpha with amplitudes ordered m = -l..l.
inline OpticalAngularMomentum optical_S_from_amplitudes(const Eigen::VectorXcd& alpha,
                                                        const AngularMomentumMatrices& L) {
  if (alpha.size() != L.dimension()) {
    throw std::invalid_argument("optical_S_from_amplitudes: expected " +
                                std::to_string(L.dimension()) + " amplitudes, got " +
                                std::to_string(alpha.size()));
  }
  OpticalAngularMomentum out;
  out.l = L.l;
  out.photon_number = alpha.squaredNorm();
  for (int i = 0; i < 3; ++i) out.S[i] = alpha.dot(L.component(i) * alpha).real();
  return out;
}

inline OpticalAngularMomentum optical_S_from_amplitudes(const Eigen::VectorXcd& alpha) {
  const auto dim = alpha.size();
  if (dim < 1 || dim % 2 == 0) {
    throw std::invalid_argument("optical_S_from_amplitudes: length must be 2l+1");
  }
  return optical_S_from_amplitudes(alpha, angular_momentum_matrices(static_cast<int>(dim / 2)));
}

/// All N photons in the single azimuthal mode m.
inline Eigen::VectorXcd single_mode_amplitudes(int l, int m, double photons) {
  if (std::abs(m) > l) throw std::invalid_argument("single_mode_amplitudes: |m| > l");
  if (photons < 0.0) throw std::invalid_argument("single_mode_amplitudes: N < 0");
  Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(2 * l + 1);
  alpha[m + l] = std::sqrt(photons);
  return alpha;
}

/// exp(-i angle axis.L) alpha, the rotation of a multiplet state.
inline Eigen::VectorXcd rotate_amplitudes(const Eigen::VectorXcd& alpha,
                                          const AngularMomentumMatrices& L,
                                          const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d a = axis.normalized();
  const Eigen::MatrixXcd generator =
      a.x() * L.component(0) + a.y() * L.component(1) + a.z() * L.component(2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(generator);
  const Eigen::VectorXcd phases =
      (eig.eigenvalues().cast<complex>() * complex{0.0, -angle}).array().exp();
  const Eigen::MatrixXcd& V = eig.eigenvectors();
  return V * phases.asDiagonal() * (V.adjoint() * alpha);
}

// ---------------------------------------------------------------------------
// Frequency shifts and rate estimates

/// m Lambda omega_z, rad/s.
inline double zeeman_shift(int m, double lambda, double omega_z) {
  return static_cast<double>(m) * lambda * omega_z;
}

/// Smallest spin rate omega_z (rad/s) with |m| Lambda omega_z equal to the
/// cavity linewidth c k0 / Q.
inline double resolvability_threshold(double lambda, int m, double Q, double k0) {
  if (m == 0) throw std::domain_error("resolvability_threshold: m = 0 has no shift");
  if (!(Q > 0.0) || !(k0 > 0.0)) {
    throw std::invalid_argument("resolvability_threshold: Q and k0 must be positive");
  }
  if (!(lambda > 0.0)) throw std::domain_error("resolvability_threshold: Lambda must be positive");
  return speed_of_light * k0 / Q / (std::abs(m) * lambda);
}

struct PrecessionEstimate {
  double exact_hz = 0.0;       ///< Lambda (Lambda - 1) N l hbar / I / 2 pi
  double simplified_hz = 0.0;  ///< (n^2 - 1) N hbar l / (rho R^5) / 2 pi
};

/// Mechanical precession rate with <S> = N l (highest-weight occupation).
inline PrecessionEstimate precession_rate_estimate(const SphereParams& p, double photons, int l,
                                                   double lambda) {
  if (photons < 0.0) throw std::invalid_argument("precession_rate_estimate: N < 0");
  const double S = photons * l;
  PrecessionEstimate e;
  e.exact_hz = lambda * (lambda - 1.0) * S * hbar / p.I / (2.0 * pi);
  e.simplified_hz = (p.epsilon() - 1.0) * S * hbar / (p.rho * std::pow(p.R, 5)) / (2.0 * pi);
  return e;
}

}  // namespace wgmspin
