#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "wgmspin/dynamics.hpp"

using namespace wgmspin;
using Eigen::Matrix3d;

namespace {

const CouplingConstants& benchmark_constants() { return testing_support::benchmark_coupling(); }

// S-dominated benchmark-scale state: |S| = N l with N = 1e5, l = 120, tilted.
SpinState benchmark_state() {
  SpinState s;
  s.S = 1.2e7 * Vector3d(std::sin(0.3), 0.0, std::cos(0.3));
  s.omega = Vector3d(1e-9, 0.0, 0.0);
  return s;
}

// Comparable mechanical and optical angular momentum, so K is far from both.
SpinState mixed_state(const CouplingConstants& c) {
  SpinState s;
  s.S = 1.2e7 * Vector3d(0.2, -0.5, 0.84).normalized();
  const double balance = std::abs(c.lambda - 1.0) * hbar * 1.2e7 / c.I;
  s.omega = balance * Vector3d(0.7, 0.1, -0.3).normalized();
  return s;
}

double angle_between(const Vector3d& a, const Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Vector3d rodrigues(const Vector3d& v, const Vector3d& axis, double angle) {
  const Vector3d n = axis.normalized();
  return v * std::cos(angle) + n.cross(v) * std::sin(angle) + n * n.dot(v) * (1 - std::cos(angle));
}

Vector3d axial(const Matrix3d& A) { return {A(2, 1), A(0, 2), A(1, 0)}; }

}  // namespace

TEST(Kinematics, EulerRatesSimpleCases) {
  EXPECT_EQ(euler_rates_to_omega({0.4, 0.0, 1.0}, {2.5, 0.0, 0.0}), Vector3d(0, 0, 2.5));
  const Vector3d w = euler_rates_to_omega({0.0, M_PI / 2, 0.0}, {0.0, 1.5, 0.0});
  EXPECT_NEAR((w - Vector3d(0, 1.5, 0)).norm(), 0.0, 1e-15);
}

TEST(Kinematics, EulerRatesMatchFiniteDifference) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const EulerAngles a{u(rng), 0.1 + std::abs(u(rng)) * 0.9, u(rng)};
    const EulerAngles r{u(rng), u(rng), u(rng)};
    const double h = 1e-7;
    auto at = [&](double t) {
      return rotation_from_euler({a.alpha + r.alpha * t, a.beta + r.beta * t, a.gamma + r.gamma * t});
    };
    const Matrix3d Rdot = (at(h) - at(-h)) / (2 * h);
    const Matrix3d W = Rdot * at(0).transpose();
    EXPECT_LT((axial(0.5 * (W - W.transpose())) - euler_rates_to_omega(a, r)).norm(), 1e-6);
  }
}

TEST(Kinematics, EulerRoundTrip) {
  const EulerAngles a{0.7, 1.1, -2.2};
  const EulerAngles b = euler_from_orientation(orientation_from_euler(a));
  EXPECT_NEAR(b.alpha, a.alpha, 1e-12);
  EXPECT_NEAR(b.beta, a.beta, 1e-12);
  EXPECT_NEAR(b.gamma, a.gamma, 1e-12);
}

TEST(Kinematics, CanonicalJSimpleCases) {
  EXPECT_EQ(canonical_J({0.3, 0.8, 0.1}, {2.0, 0.0, 0.0}).z(), 2.0);
  const Vector3d J = canonical_J({0.0, M_PI / 2, 0.0}, {0.0, 0.0, 3.0});
  EXPECT_NEAR((J - Vector3d(3, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_THROW(canonical_J({0.3, 0.0, 0.1}, {1, 1, 1}), std::domain_error);
  EXPECT_THROW(canonical_J({0.3, M_PI, 0.1}, {1, 1, 1}), std::domain_error);
}

TEST(Kinematics, CanonicalJIsKineticMomentumWithoutField) {
  // Momenta conjugate to the Euler rates of the free rotor L = I w^2 / 2,
  // taken by central differences of L in each rate.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double I = 3.0;
  for (int i = 0; i < 20; ++i) {
    const EulerAngles a{u(rng), 0.2 + std::abs(u(rng)) * 0.7, u(rng)};
    const EulerAngles r{u(rng), u(rng), u(rng)};
    auto L = [&](EulerAngles rr) { return 0.5 * I * euler_rates_to_omega(a, rr).squaredNorm(); };
    const double h = 1e-5;
    auto p_of = [&](double EulerAngles::*field) {
      EulerAngles up = r, dn = r;
      up.*field += h;
      dn.*field -= h;
      return (L(up) - L(dn)) / (2 * h);
    };
    const EulerAngles p{p_of(&EulerAngles::alpha), p_of(&EulerAngles::beta), p_of(&EulerAngles::gamma)};
    EXPECT_LT((canonical_J(a, p) - I * euler_rates_to_omega(a, r)).norm(), 1e-8);
  }
}

TEST(StepWgm, ParallelVectorsAreFixed) {
  const auto& c = benchmark_constants();
  SpinState s;
  s.S = Vector3d(0, 0, 1.2e7);
  s.omega = Vector3d(0, 0, 3e-8);
  const SpinState n = step_wgm(s, 1e4, c);
  EXPECT_LT((n.S - s.S).norm(), 1e-15 * s.S.norm());
  EXPECT_LT((n.omega - s.omega).norm(), 1e-15 * s.omega.norm());
}

TEST(StepWgm, NoCouplingLeavesVectorsConstant) {
  const auto c = CouplingConstants::manual(0.0, benchmark_constants().I);
  SpinState s = mixed_state(benchmark_constants());
  SpinState n = s;
  for (int i = 0; i < 100; ++i) n = step_wgm(n, 1e4, c);
  EXPECT_EQ(n.S, s.S);
  EXPECT_EQ(n.omega, s.omega);
  // The orientation then turns uniformly about the fixed w.
  const Quaterniond expected =
      Quaterniond(Eigen::AngleAxisd(s.omega.norm() * 1e6, s.omega.normalized()));
  EXPECT_LT(n.orientation.angularDistance(expected), 1e-9);
}

TEST(StepWgm, MatchesClosedFormPrecession) {
  const auto& c = benchmark_constants();
  const SpinState s0 = mixed_state(c);
  const Vector3d K = conserved_K(s0, c);
  const double rate = c.lambda * K.norm() / c.I;
  const double dt = 0.37 / rate;
  SpinState s = s0;
  double worst = 0.0;
  for (int i = 1; i <= 10000; ++i) {
    s = step_wgm(s, dt, c);
    const double angle = rate * dt * i;
    worst = std::max({worst, angle_between(s.S, rodrigues(s0.S, K, angle)),
                      angle_between(s.omega, rodrigues(s0.omega, K, angle))});
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(StepWgm, OrientationFollowsAngularVelocity) {
  const auto& c = benchmark_constants();
  SpinState s = mixed_state(c);
  s.orientation = orientation_from_euler({0.3, 1.0, -0.4});
  const double dt = 1e-3 / (c.lambda * conserved_K(s, c).norm() / c.I);
  const SpinState a = step_wgm(s, dt, c);
  const SpinState b = step_wgm(a, dt, c);
  const Matrix3d Rdot = (b.orientation.toRotationMatrix() - s.orientation.toRotationMatrix()) / (2 * dt);
  const Vector3d w = axial(Rdot * a.orientation.toRotationMatrix().transpose());
  EXPECT_LT((w - a.omega).norm(), 1e-6 * a.omega.norm());
  EXPECT_NEAR(b.orientation.norm(), 1.0, 1e-12);
}

TEST(StepWgm, RejectsNonPositiveStep) {
  EXPECT_THROW(step_wgm(benchmark_state(), 0.0, benchmark_constants()), std::invalid_argument);
  EXPECT_THROW(step_wgm(benchmark_state(), -1.0, benchmark_constants()), std::invalid_argument);
}

TEST(Energy, SpecialCases) {
  const auto& c = benchmark_constants();
  SpinState s;
  s.omega = Vector3d(1e-3, 2e-3, -1e-3);
  EXPECT_NEAR(rotating_frame_energy(s, c), 0.5 * c.I * s.omega.squaredNorm(),
              1e-14 * 0.5 * c.I * s.omega.squaredNorm());
  SpinState t;
  t.S = Vector3d(1e6, -2e6, 3e5);
  EXPECT_EQ(rotating_frame_energy(t, CouplingConstants::manual(1.0, c.I)), 0.0);
}

TEST(Energy, EqualsKineticEnergyForAnyState) {
  const auto& c = benchmark_constants();
  const SpinState s = mixed_state(c);
  const double kinetic = 0.5 * c.I * s.omega.squaredNorm();
  EXPECT_NEAR(rotating_frame_energy(s, c), kinetic, 1e-12 * kinetic);
}

TEST(Conservation, MonitorsHoldOverManySteps) {
  const auto& c = benchmark_constants();
  for (const SpinState& s0 : {benchmark_state(), mixed_state(c)}) {
    const double dt = 0.01 * 2 * M_PI / (c.lambda * conserved_K(s0, c).norm() / c.I);
    const Trajectory tr = simulate(s0, c, dt, 100000, 1000);
    const Drift d = drift(tr);
    EXPECT_LE(d.abs_S, 1e-13);
    EXPECT_LE(d.abs_omega, 1e-13);
    EXPECT_LE(d.K, 1e-12);
    EXPECT_LE(d.H_r, 1e-10);
    for (const auto& s : tr.samples) EXPECT_NEAR(s.orientation.norm(), 1.0, 1e-12);
  }
}

TEST(Conservation, TimeReversalOfUnitScaleStates) {
  // I = hbar puts I w and hbar S on the same scale with O(1) components, so
  // an absolute tolerance is meaningful.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = CouplingConstants::manual(1.0 + u(rng) * 0.9, hbar);
    SpinState s0;
    s0.S = Vector3d(u(rng), u(rng), u(rng));
    s0.omega = Vector3d(u(rng), u(rng), u(rng));
    SpinState s = s0;
    for (int i = 0; i < 2000; ++i) s = step_wgm(s, 0.01, c);
    s = time_reversed(s);
    for (int i = 0; i < 2000; ++i) s = step_wgm(s, 0.01, c);
    s = time_reversed(s);
    EXPECT_LE((s.S - s0.S).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((s.omega - s0.omega).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Conservation, TimeReversalAtBenchmarkScale) {
  const auto& c = benchmark_constants();
  const SpinState s0 = mixed_state(c);
  const double dt = 0.05 / (c.lambda * conserved_K(s0, c).norm() / c.I);
  SpinState s = s0;
  for (int i = 0; i < 5000; ++i) s = step_wgm(s, dt, c);
  s = time_reversed(s);
  for (int i = 0; i < 5000; ++i) s = step_wgm(s, dt, c);
  s = time_reversed(s);
  EXPECT_LE((s.S - s0.S).norm() / s0.S.norm(), 1e-12);
  EXPECT_LE((s.omega - s0.omega).norm() / s0.omega.norm(), 1e-12);
}

TEST(StepGeneral, ConstantFieldPrecessesAtGammaOverI) {
  const double I = 2.0, G = 3.0;
  const auto field = GammaProvider::constant(Vector3d(0, 0, G));
  SpinState s;
  s.omega = Vector3d(1.0, 0.0, 0.5);
  const double period = 2 * M_PI * I / G;
  const int n = 2000;
  const double dt = 5 * period / n;
  double phase = 0.0, previous = 0.0;
  for (int i = 1; i <= n; ++i) {
    s = step_general(s, dt, field, I);
    const double now = std::atan2(s.omega.y(), s.omega.x());
    double d = now - previous;
    d -= 2 * M_PI * std::round(d / (2 * M_PI));
    phase += d;
    previous = now;
    ASSERT_NEAR(s.omega.norm(), std::hypot(1.0, 0.5), 1e-14);
  }
  EXPECT_NEAR(phase / (n * dt), G / I, 1e-6 * G / I);
  EXPECT_NEAR(s.omega.z(), 0.5, 1e-12);
}

TEST(StepGeneral, NoFieldKeepsOmega) {
  const auto field = GammaProvider::constant(Vector3d::Zero());
  SpinState s;
  s.omega = Vector3d(0.1, -0.2, 0.3);
  const SpinState n = step_general(s, 0.1, field, 1.0);
  EXPECT_EQ(n.omega, s.omega);
}

TEST(StepGeneral, LinearRampIntegratesDirectly) {
  // Gamma(t) = (g0 + a t) e with w(0) = 0 stays parallel to Gamma, so
  // I w(t) = Gamma(t) - Gamma(0) exactly.
  const Vector3d e = Vector3d(1.0, -2.0, 0.5).normalized();
  const double g0 = 0.4, a = 1.3, I = 0.7;
  GammaProvider field{[&](double t) { return GammaSample{(g0 + a * t) * e, a * e}; }, false};
  SpinState s;
  const double dt = 0.01;
  for (int i = 0; i < 1000; ++i) s = step_general(s, dt, field, I);
  const Vector3d expected = (a * s.t) * e / I;
  EXPECT_LT((s.omega - expected).norm(), 1e-10 * expected.norm());
}

TEST(StepGeneral, ProviderErrorsPropagate) {
  GammaProvider bad{[](double) -> GammaSample { throw std::runtime_error("field model"); }, false};
  EXPECT_THROW(step_general(SpinState{}, 0.1, bad, 1.0), std::runtime_error);
  EXPECT_THROW(step_general(SpinState{}, 0.1, GammaProvider{}, 1.0), std::invalid_argument);
}

TEST(Simulate, Preconditions) {
  EXPECT_THROW(simulate(benchmark_state(), benchmark_constants(), 1.0, 0), std::invalid_argument);
  EXPECT_THROW(simulate(benchmark_state(), benchmark_constants(), 1.0, 10, 0), std::invalid_argument);
}

TEST(Simulate, SamplingDoesNotChangeStates) {
  const auto& c = benchmark_constants();
  const Trajectory every = simulate(benchmark_state(), c, 1e4, 100, 1);
  const Trajectory tenth = simulate(benchmark_state(), c, 1e4, 100, 10);
  ASSERT_EQ(every.size(), 101u);
  ASSERT_EQ(tenth.size(), 11u);
  for (std::size_t i = 0; i < tenth.size(); ++i) {
    EXPECT_EQ(tenth.samples[i].t, every.samples[10 * i].t);
    EXPECT_EQ(tenth.samples[i].S, every.samples[10 * i].S);
    EXPECT_EQ(tenth.samples[i].omega, every.samples[10 * i].omega);
  }
  for (std::size_t i = 1; i < every.size(); ++i) EXPECT_GT(every.samples[i].t, every.samples[i - 1].t);
  EXPECT_EQ(every.monitors.size(), every.samples.size());
}

TEST(Simulate, DriftBeyondToleranceAborts) {
  SimulationOptions strict;
  strict.drift_tolerance = 1e-300;
  EXPECT_THROW(simulate(mixed_state(benchmark_constants()), benchmark_constants(), 1e4, 100, 1, strict),
               NumericalFailure);
}

TEST(Simulate, RestStateIsConstant) {
  const Trajectory tr = simulate(SpinState{}, benchmark_constants(), 1.0, 50, 5);
  for (const auto& s : tr.samples) {
    EXPECT_EQ(s.S, Vector3d::Zero());
    EXPECT_EQ(s.omega, Vector3d::Zero());
  }
  EXPECT_FALSE(measure_precession_hz(tr).has_value());
}

TEST(Simulate, BenchmarkScalePrecessionRate) {
  const auto& c = benchmark_constants();
  const SpinState s0 = benchmark_state();
  ASSERT_LT(c.I * s0.omega.norm(), 0.01 * std::abs(c.lambda - 1) * hbar * s0.S.norm());
  const Trajectory tr = simulate(s0, c, 1e4, 10000, 10);
  const auto measured = measure_precession_hz(tr);
  ASSERT_TRUE(measured.has_value());
  const auto predicted = precession_rate_estimate(testing_support::benchmark_sphere(), 1e5, 120, c.lambda);
  EXPECT_NEAR(*measured, predicted.exact_hz, 0.01 * predicted.exact_hz);
}

TEST(Simulate, NoPhotonsMeansNoMeasuredPrecession) {
  SpinState s;
  s.omega = Vector3d(1e-9, 0, 0);
  const Trajectory tr = simulate(s, benchmark_constants(), 1e4, 100, 10);
  EXPECT_FALSE(measure_precession_hz(tr).has_value());
  for (const auto& x : tr.samples) EXPECT_LT((x.omega - s.omega).norm(), 1e-15 * s.omega.norm());
}
