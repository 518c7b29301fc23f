#pragma once

// Mean-field rotational dynamics of the sphere and its optical multiplet:
//   dS/dt = Lambda w x S,   I dw/dt = Lambda (Lambda - 1) hbar (w x S)
// and the general torque equation I dw/dt = -w x G + dG/dt, plus Euler-angle
// kinematics. S is carried in units of hbar, everything else in SI.
//
// The first system conserves K = I w - (Lambda - 1) hbar S, and
// dS/dt = (Lambda / I) K x S, so both S and w rotate rigidly about K at the
// rate Lambda |K| / I. step_wgm applies that rotation exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "wgmspin/constants.hpp"
#include "wgmspin/coupling.hpp"
#include "wgmspin/format.hpp"

namespace wgmspin {

using Eigen::Quaterniond;
using Eigen::Vector3d;

struct SpinState {
  Vector3d omega = Vector3d::Zero();              ///< rad/s
  Vector3d S = Vector3d::Zero();                  ///< units of hbar
  Quaterniond orientation = Quaterniond::Identity();
  double t = 0.0;                                 ///< s
};

/// Stepping produced a non-finite state or a monitor left its tolerance.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Kinematics. Euler angles are z-y-z: R = Rz(alpha) Ry(beta) Rz(gamma).

struct EulerAngles {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
};

inline Vector3d euler_rates_to_omega(const EulerAngles& a, const EulerAngles& rate) {
  const double sa = std::sin(a.alpha), ca = std::cos(a.alpha);
  const double sb = std::sin(a.beta), cb = std::cos(a.beta);
  return {rate.gamma * sb * ca - rate.beta * sa, rate.gamma * sb * sa + rate.beta * ca,
          rate.alpha + rate.gamma * cb};
}

inline Eigen::Matrix3d rotation_from_euler(const EulerAngles& a) {
  using Eigen::AngleAxisd;
  return (AngleAxisd(a.alpha, Vector3d::UnitZ()) * AngleAxisd(a.beta, Vector3d::UnitY()) *
          AngleAxisd(a.gamma, Vector3d::UnitZ()))
      .toRotationMatrix();
}

inline Quaterniond orientation_from_euler(const EulerAngles& a) {
  return Quaterniond(rotation_from_euler(a)).normalized();
}

/// Inverse of orientation_from_euler with beta in [0, pi]. At beta = 0 or pi
/// only alpha +- gamma is defined; gamma is then reported as 0.
inline EulerAngles euler_from_orientation(const Quaterniond& q) {
  const Eigen::Matrix3d R = q.normalized().toRotationMatrix();
  EulerAngles a;
  a.beta = std::acos(std::clamp(R(2, 2), -1.0, 1.0));
  const double sb = std::sin(a.beta);
  if (sb > 1e-12) {
    a.alpha = std::atan2(R(1, 2), R(0, 2));
    a.gamma = std::atan2(R(2, 1), -R(2, 0));
  } else {
    a.alpha = std::atan2(R(1, 0), R(0, 0));
    a.gamma = 0.0;
  }
  return a;
}

/// Canonical angular momentum from the momenta conjugate to the Euler angles.
inline Vector3d canonical_J(const EulerAngles& a, const EulerAngles& p) {
  const double sb = std::sin(a.beta);
  if (std::abs(sb) < 1e-12) {
    throw std::domain_error("canonical_J: sin(beta) = 0, Euler coordinates are degenerate");
  }
  const double sa = std::sin(a.alpha), ca = std::cos(a.alpha);
  const double cot = std::cos(a.beta) / sb;
  const double csc = 1.0 / sb;
  return {-cot * ca * p.alpha - sa * p.beta + csc * ca * p.gamma,
          -cot * sa * p.alpha + ca * p.beta + csc * sa * p.gamma, p.alpha};
}

/// J = I w - Gamma with the optical term Gamma = Lambda hbar S.
inline Vector3d canonical_J(const SpinState& s, const CouplingConstants& c) {
  return c.I * s.omega - c.lambda * hbar * s.S;
}

/// K = I w - (Lambda - 1) hbar S, kg m^2 / s.
inline Vector3d conserved_K(const SpinState& s, const CouplingConstants& c) {
  return c.I * s.omega - (c.lambda - 1.0) * hbar * s.S;
}

// ---------------------------------------------------------------------------
// Exact stepping of the coupled precession

namespace detail {

using lvec = Eigen::Matrix<long double, 3, 1>;

inline lvec widen(const Vector3d& v) { return v.cast<long double>(); }

// Rodrigues rotation of v about unit axis n by angle with cos/sin supplied.
inline lvec rotate(const lvec& v, const lvec& n, long double c, long double s) {
  return v * c + n.cross(v) * s + n * (n.dot(v)) * (1.0L - c);
}

// Rounds a long double vector to double while putting back the length the
// exact rotation should have kept.
inline Vector3d narrow_with_length(const lvec& v, long double length) {
  const long double current = v.norm();
  if (current == 0.0L) return Vector3d::Zero();
  return (v * (length / current)).cast<double>();
}

inline Quaterniond exp_rotation(const Vector3d& rate, double dt) {
  const double angle = rate.norm() * dt;
  if (angle == 0.0) return Quaterniond::Identity();
  return Quaterniond(Eigen::AngleAxisd(angle, rate / rate.norm()));
}

}  // namespace detail

/// Precession rate vector of (S, w) about K: (Lambda / I) K, rad/s.
inline Vector3d precession_vector(const SpinState& s, const CouplingConstants& c) {
  return (c.lambda / c.I) * conserved_K(s, c);
}

/// One step of the exact flow. Orientation follows R(t) = exp(W t) exp((w0 - W) t) R(0)
/// with W the precession vector, which is the exact solution for w(t)
/// rotating uniformly about W.
inline SpinState step_wgm(const SpinState& state, double dt, const CouplingConstants& c) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_wgm: dt must be positive");
  if (!(c.I > 0.0)) throw std::invalid_argument("step_wgm: I must be positive");
  using detail::lvec;
  const long double I = c.I;
  const long double lam = c.lambda;
  const long double h = hbar;
  const lvec w = detail::widen(state.omega);
  const lvec S = detail::widen(state.S);
  const lvec K = I * w - (lam - 1.0L) * h * S;

  SpinState next = state;
  next.t = state.t + dt;
  const long double Knorm = K.norm();
  const long double angle = lam * Knorm / I * static_cast<long double>(dt);
  if (Knorm > 0.0L && angle != 0.0L) {
    const lvec n = K / Knorm;
    const long double co = std::cos(angle), si = std::sin(angle);
    next.S = detail::narrow_with_length(detail::rotate(S, n, co, si), S.norm());
    next.omega = detail::narrow_with_length(detail::rotate(w, n, co, si), w.norm());
  }
  const Vector3d W = (lam / I * K).cast<double>();
  next.orientation = (detail::exp_rotation(W, dt) * detail::exp_rotation(state.omega - W, dt) *
                      state.orientation)
                         .normalized();
  return next;
}

/// Reverses the direction of motion: under (w, S) -> (-w, -S) the
/// precession equations run backwards in time.
inline SpinState time_reversed(SpinState s) {
  s.omega = -s.omega;
  s.S = -s.S;
  return s;
}

/// Rotating-frame energy Lambda (J + hbar S)^2 / 2I + (1 - Lambda) J^2 / 2I
/// + Lambda (Lambda - 1) hbar^2 S^2 / 2I with J = I w - Lambda hbar S, in J.
/// The sum equals (1/2) I w^2 identically; the terms themselves can be many
/// orders larger, so it is accumulated in extended precision.
inline double rotating_frame_energy(const SpinState& s, const CouplingConstants& c) {
  using detail::lvec;
  const long double I = c.I;
  const long double lam = c.lambda;
  const lvec hS = detail::widen(s.S) * static_cast<long double>(hbar);
  const lvec J = I * detail::widen(s.omega) - lam * hS;
  const long double e = lam * (J + hS).squaredNorm() + (1.0L - lam) * J.squaredNorm() +
                        lam * (lam - 1.0L) * hS.squaredNorm();
  return static_cast<double>(e / (2.0L * I));
}

// ---------------------------------------------------------------------------
// General torque equation

struct GammaSample {
  Vector3d gamma = Vector3d::Zero();      ///< kg m^2 / s
  Vector3d gamma_rate = Vector3d::Zero(); ///< kg m^2 / s^2
};

struct GammaProvider {
  std::function<GammaSample(double t)> sample;
  bool static_field = false;  ///< dG/dt vanishes identically; enables |w| projection

  static GammaProvider constant(const Vector3d& g) {
    return {[g](double) { return GammaSample{g, Vector3d::Zero()}; }, true};
  }
};

/// Classic RK4 step of I dw/dt = -w x G + dG/dt. S is left untouched; the
/// orientation advances by the midpoint angular velocity.
inline SpinState step_general(const SpinState& state, double dt, const GammaProvider& field,
                              double inertia) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_general: dt must be positive");
  if (!(inertia > 0.0)) throw std::invalid_argument("step_general: I must be positive");
  if (!field.sample) throw std::invalid_argument("step_general: empty field provider");
  auto rhs = [&](double t, const Vector3d& w) {
    const GammaSample g = field.sample(t);
    return Vector3d((-w.cross(g.gamma) + g.gamma_rate) / inertia);
  };
  const double t = state.t;
  const Vector3d& w = state.omega;
  const Vector3d k1 = rhs(t, w);
  const Vector3d k2 = rhs(t + 0.5 * dt, w + 0.5 * dt * k1);
  const Vector3d k3 = rhs(t + 0.5 * dt, w + 0.5 * dt * k2);
  const Vector3d k4 = rhs(t + dt, w + dt * k3);

  SpinState next = state;
  next.t = t + dt;
  next.omega = w + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (field.static_field) {
    // A static field conserves both w.Gamma and |w|; RK4 shrinks the part
    // precessing about Gamma slightly, so rescale that part alone.
    const detail::lvec W = detail::widen(w);
    const detail::lvec g = detail::widen(field.sample(t).gamma);
    detail::lvec N = detail::widen(next.omega);
    if (g.norm() > 0.0L) {
      const detail::lvec axis = g / g.norm();
      const detail::lvec parallel = W.dot(axis) * axis;
      const detail::lvec perp = N - N.dot(axis) * axis;
      const long double target = (W - parallel).norm();
      N = perp.norm() > 0.0L ? detail::lvec(parallel + perp * (target / perp.norm())) : W;
    }
    next.omega = detail::narrow_with_length(N, W.norm());
  }
  next.orientation =
      (detail::exp_rotation(0.5 * (w + next.omega), dt) * state.orientation).normalized();
  return next;
}

// ---------------------------------------------------------------------------
// Trajectories

struct Monitors {
  double abs_S = 0.0;
  double abs_omega = 0.0;
  Vector3d K = Vector3d::Zero();
  double H_r = 0.0;
};

inline Monitors monitor(const SpinState& s, const CouplingConstants& c) {
  return {s.S.norm(), s.omega.norm(), conserved_K(s, c), rotating_frame_energy(s, c)};
}

struct Trajectory {
  std::vector<SpinState> samples;
  std::vector<Monitors> monitors;

  std::size_t size() const { return samples.size(); }
};

/// Largest relative departure of each monitor from its first sample. Vector K
/// is measured against |K(0)|. A monitor that starts at zero is measured in
/// absolute terms.
struct Drift {
  double abs_S = 0.0;
  double abs_omega = 0.0;
  double K = 0.0;
  double H_r = 0.0;

  double max() const { return std::max({abs_S, abs_omega, K, H_r}); }
};

inline Drift drift(const Trajectory& tr) {
  Drift d;
  if (tr.monitors.empty()) return d;
  const Monitors& m0 = tr.monitors.front();
  auto rel = [](double change, double ref) { return ref != 0.0 ? change / std::abs(ref) : change; };
  for (const Monitors& m : tr.monitors) {
    d.abs_S = std::max(d.abs_S, rel(std::abs(m.abs_S - m0.abs_S), m0.abs_S));
    d.abs_omega = std::max(d.abs_omega, rel(std::abs(m.abs_omega - m0.abs_omega), m0.abs_omega));
    d.K = std::max(d.K, rel((m.K - m0.K).norm(), m0.K.norm()));
    d.H_r = std::max(d.H_r, rel(std::abs(m.H_r - m0.H_r), m0.H_r));
  }
  return d;
}

struct SimulationOptions {
  double drift_tolerance = 1e-8;  ///< abort when any monitor drifts further
};

/// Steps the exact precession flow n_steps times, recording the initial state
/// and every sample_every-th step (and always the last one).
inline Trajectory simulate(const SpinState& initial, const CouplingConstants& c, double dt,
                           long n_steps, long sample_every = 1, const SimulationOptions& opt = {}) {
  if (n_steps < 1) throw std::invalid_argument("simulate: n_steps must be at least 1");
  if (sample_every < 1) throw std::invalid_argument("simulate: sample_every must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("simulate: dt must be positive");

  Trajectory tr;
  const std::size_t expected = static_cast<std::size_t>(n_steps / sample_every) + 2;
  tr.samples.reserve(expected);
  tr.monitors.reserve(expected);
  tr.samples.push_back(initial);
  tr.monitors.push_back(monitor(initial, c));
  const Monitors& m0 = tr.monitors.front();

  SpinState s = initial;
  for (long i = 1; i <= n_steps; ++i) {
    s = step_wgm(s, dt, c);
    s.t = initial.t + static_cast<double>(i) * dt;
    if (i % sample_every != 0 && i != n_steps) continue;
    if (!s.omega.allFinite() || !s.S.allFinite()) {
      throw NumericalFailure("simulate: non-finite state at step " + std::to_string(i));
    }
    tr.samples.push_back(s);
    tr.monitors.push_back(monitor(s, c));
    Trajectory window;
    window.monitors = {m0, tr.monitors.back()};
    const Drift d = drift(window);
    if (d.max() > opt.drift_tolerance) {
      throw NumericalFailure("simulate: monitor drift " + format_double(d.max()) + " at step " +
                             std::to_string(i) + " exceeds " +
                             format_double(opt.drift_tolerance) + "; reduce dt");
    }
  }
  return tr;
}

/// Mean rotation rate (Hz) of the component of w perpendicular to K, from the
/// unwrapped azimuth across samples. Empty when that component vanishes, when
/// fewer than two samples exist, or when consecutive samples are too far apart
/// in angle to unwrap.
inline std::optional<double> measure_precession_hz(const Trajectory& tr) {
  if (tr.size() < 2) return std::nullopt;
  const Vector3d K = tr.monitors.front().K;
  if (K.norm() == 0.0) return std::nullopt;
  const Vector3d n = K.normalized();
  const Vector3d e1 = n.unitOrthogonal();
  const Vector3d e2 = n.cross(e1);

  double total = 0.0;
  double previous = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const Vector3d& w = tr.samples[i].omega;
    const Vector3d perp = w - n * n.dot(w);
    if (!(perp.norm() > 1e-9 * w.norm())) return std::nullopt;
    const double phase = std::atan2(perp.dot(e2), perp.dot(e1));
    if (i > 0) {
      double step = phase - previous;
      step -= 2.0 * pi * std::round(step / (2.0 * pi));
      if (std::abs(step) > 0.5 * pi) return std::nullopt;
      total += step;
    }
    previous = phase;
  }
  const double span = tr.samples.back().t - tr.samples.front().t;
  if (!(span > 0.0)) return std::nullopt;
  return std::abs(total) / (2.0 * pi * span);
}

/// Rate of uniform precession predicted by the flow, Lambda |K| / I / 2 pi.
inline double predicted_precession_hz(const SpinState& s, const CouplingConstants& c) {
  return c.lambda * conserved_K(s, c).norm() / c.I / (2.0 * pi);
}

/// Largest step recommended for accurate orientation bookkeeping:
/// 0.01 * min(2 pi / (Lambda |w|), 2 pi I / (Lambda |Lambda - 1| hbar |S|)).
inline double recommended_dt(const SpinState& s, const CouplingConstants& c) {
  double limit = HUGE_VAL;
  const double a = c.lambda * s.omega.norm();
  if (a > 0.0) limit = std::min(limit, 2.0 * pi / a);
  const double b = c.lambda * std::abs(c.lambda - 1.0) * hbar * s.S.norm();
  if (b > 0.0) limit = std::min(limit, 2.0 * pi * c.I / b);
  return 0.01 * limit;
}

}  // namespace wgmspin
