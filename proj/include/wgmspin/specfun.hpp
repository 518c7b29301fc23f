#pragma once

// Spherical Bessel and Hankel functions of integer order and complex argument,
// Riccati-Bessel combinations, and orbital angular-momentum matrices.
//
// Validated range: l <= 500, |z| <= 300. Orders above 500 are rejected.
// Arguments beyond |z| = 300 are evaluated with the same algorithms but
// accuracy(l, z) reports them as relaxed.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace wgmspin {

using complex = std::complex<double>;

inline constexpr int max_bessel_order = 500;
inline constexpr double validated_argument = 300.0;
inline constexpr int max_angular_momentum = 1000;

enum class Accuracy { validated, relaxed };

inline Accuracy accuracy(int l, complex z) {
  return (l <= max_bessel_order && std::abs(z) <= validated_argument)
             ? Accuracy::validated
             : Accuracy::relaxed;
}

namespace detail {

inline void check_order(int l) {
  if (l < 0 || l > max_bessel_order) {
    throw std::domain_error("spherical Bessel order " + std::to_string(l) +
                            " outside [0, " + std::to_string(max_bessel_order) + "]");
  }
}

inline complex checked(complex v, const char* what) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    throw std::overflow_error(std::string(what) + ": result not representable");
  }
  return v;
}

// Complex number carried as mantissa * 2^exponent so that long products of
// recurrence ratios neither underflow nor overflow before the end.
struct ScaledComplex {
  complex mantissa{1.0, 0.0};
  long exponent = 0;

  void multiply(complex f) {
    mantissa *= f;
    const double mag = std::max(std::abs(mantissa.real()), std::abs(mantissa.imag()));
    if (mag > 0.0 && (mag > 0x1p200 || mag < 0x1p-200)) {
      int e = 0;
      std::frexp(mag, &e);
      mantissa = {std::ldexp(mantissa.real(), -e), std::ldexp(mantissa.imag(), -e)};
      exponent += e;
    }
  }

  complex value() const {
    if (exponent > 4096) return {HUGE_VAL, HUGE_VAL};
    if (exponent < -4096) return {0.0, 0.0};
    const int e = static_cast<int>(exponent);
    return {std::ldexp(mantissa.real(), e), std::ldexp(mantissa.imag(), e)};
  }
};

// Ratios j_k / j_{k-1} for k = 1..l from the backward (Miller) recurrence,
// j_{k-1} + j_{k+1} = (2k+1)/z j_k, started far above the turning point.
inline std::vector<complex> bessel_j_ratios(int l, complex z) {
  const double az = std::abs(z);
  const int start = std::max(l, static_cast<int>(std::ceil(az))) + 40 +
                    static_cast<int>(std::ceil(5.0 * std::cbrt(az)));
  std::vector<complex> ratio(static_cast<std::size_t>(l) + 1);
  complex r{0.0, 0.0};
  for (int k = start; k >= 1; --k) {
    r = 1.0 / (static_cast<double>(2 * k + 1) / z - r);
    if (k <= l) ratio[static_cast<std::size_t>(k)] = r;
  }
  return ratio;
}

// j_l(z) and j_{l-1}(z) together; j_{-1}(z) = cos z / z.
inline std::pair<complex, complex> bessel_j_pair(int l, complex z) {
  const complex j0 = std::sin(z) / z;
  const complex jm1 = std::cos(z) / z;
  if (l == 0) return {jm1, j0};
  const complex j1 = (j0 - std::cos(z)) / z;
  if (l == 1) return {j0, j1};

  const auto ratio = bessel_j_ratios(l, z);
  // Normalize on whichever of j_0, j_1 is away from a zero.
  ScaledComplex acc;
  int first;
  if (std::abs(j0) >= std::abs(j1)) {
    acc.mantissa = j0;
    first = 1;
  } else {
    acc.mantissa = j1;
    first = 2;
  }
  for (int k = first; k < l; ++k) acc.multiply(ratio[static_cast<std::size_t>(k)]);
  const complex jlm1 = acc.value();
  acc.multiply(ratio[static_cast<std::size_t>(l)]);
  return {jlm1, acc.value()};
}

// Upward recurrence for a dominant solution from its l = -1 and l = 0 members.
inline std::pair<complex, complex> upward(int l, complex z, complex fm1, complex f0) {
  complex prev = fm1;
  complex cur = f0;
  for (int k = 0; k < l; ++k) {
    const complex next = static_cast<double>(2 * k + 1) / z * cur - prev;
    prev = cur;
    cur = next;
  }
  return {prev, cur};
}

// Below this |Im z| the upward recurrences for y_l and h_l^(1) lose at most a
// factor e^{2|Im z|} through growth of the companion solution.
inline constexpr double near_real = 1.0;

inline std::pair<complex, complex> hankel2_pair(int l, complex z) {
  const complex e = std::exp(complex{0.0, -1.0} * z);
  return upward(l, z, e / z, complex{0.0, 1.0} * e / z);
}

// In the lower half plane h^(1) decreases relative to h^(2) as l grows, so it
// is recovered as 2 j - h^(2) with h^(2) taken upward. In the upper half plane
// upward recurrence of h^(1) is stable.
inline std::pair<complex, complex> hankel1_pair(int l, complex z) {
  if (z.imag() < -near_real) {
    const auto [jm1, j] = bessel_j_pair(l, z);
    const auto [gm1, g] = hankel2_pair(l, z);
    return {2.0 * jm1 - gm1, 2.0 * j - g};
  }
  const complex e = std::exp(complex{0.0, 1.0} * z);
  return upward(l, z, e / z, complex{0.0, -1.0} * e / z);
}

// Near the real axis y_l is taken upward directly, which keeps the small
// imaginary part of y_l(x - i eta) accurate relative to itself. Further out it
// is assembled from j_l and the stable Hankel function.
inline std::pair<complex, complex> bessel_y_pair(int l, complex z) {
  if (std::abs(z.imag()) <= near_real) {
    return upward(l, z, std::sin(z) / z, -std::cos(z) / z);
  }
  const complex minus_i{0.0, -1.0};
  const auto [jm1, j] = bessel_j_pair(l, z);
  if (z.imag() > 0.0) {
    const auto [hm1, h] = hankel1_pair(l, z);
    return {minus_i * (hm1 - jm1), minus_i * (h - j)};
  }
  const auto [gm1, g] = hankel2_pair(l, z);
  return {minus_i * (jm1 - gm1), minus_i * (j - g)};
}

}  // namespace detail

/// Spherical Bessel function of the first kind, j_l(z).
inline complex spherical_bessel_j(int l, complex z) {
  detail::check_order(l);
  if (z == complex{0.0, 0.0}) return l == 0 ? 1.0 : 0.0;
  return detail::checked(detail::bessel_j_pair(l, z).second, "spherical_bessel_j");
}

/// Spherical Bessel function of the second kind, y_l(z).
inline complex spherical_bessel_y(int l, complex z) {
  detail::check_order(l);
  if (z == complex{0.0, 0.0}) throw std::domain_error("spherical_bessel_y: z = 0");
  return detail::checked(detail::bessel_y_pair(l, z).second, "spherical_bessel_y");
}

/// Outgoing spherical Hankel function h_l^(1)(z) = j_l(z) + i y_l(z).
inline complex spherical_hankel1(int l, complex z) {
  detail::check_order(l);
  if (z == complex{0.0, 0.0}) throw std::domain_error("spherical_hankel1: z = 0");
  return detail::checked(detail::hankel1_pair(l, z).second, "spherical_hankel1");
}

struct RiccatiBessel {
  complex psi;     ///< x j_l(x)
  complex dpsi;    ///< d/dx [x j_l(x)]
  complex xi;      ///< x h_l^(1)(x)
  complex dxi;     ///< d/dx [x h_l^(1)(x)]
};

inline RiccatiBessel riccati_bessel(int l, complex x) {
  detail::check_order(l);
  if (x == complex{0.0, 0.0}) throw std::domain_error("riccati_bessel: x = 0");
  const auto [jm1, j] = detail::bessel_j_pair(l, x);
  const auto [hm1, h] = detail::hankel1_pair(l, x);
  const double dl = l;
  RiccatiBessel out{x * j, x * jm1 - dl * j, x * h, x * hm1 - dl * h};
  for (complex v : {out.psi, out.dpsi, out.xi, out.dxi}) detail::checked(v, "riccati_bessel");
  return out;
}

/// Real and imaginary Riccati parts of the outgoing solution kept apart:
/// xi = psi + i chi with chi = x y_l(x). Near the real axis inside the
/// centrifugal barrier |chi| exceeds |psi| by many orders of magnitude, so
/// forming xi first would discard psi entirely.
struct RiccatiParts {
  complex psi, dpsi;
  complex chi, dchi;
};

inline RiccatiParts riccati_parts(int l, complex x) {
  detail::check_order(l);
  if (x == complex{0.0, 0.0}) throw std::domain_error("riccati_parts: x = 0");
  const auto [jm1, j] = detail::bessel_j_pair(l, x);
  const auto [ym1, y] = detail::bessel_y_pair(l, x);
  const double dl = l;
  RiccatiParts out{x * j, x * jm1 - dl * j, x * y, x * ym1 - dl * y};
  for (complex v : {out.psi, out.dpsi, out.chi, out.dchi}) detail::checked(v, "riccati_parts");
  return out;
}

using MatrixXcl = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;

/// Components of the orbital angular momentum operator in the |l, m> basis,
/// rows and columns ordered m = -l, ..., +l. Stored in extended precision:
/// at l ~ 100 the double-rounded ladder coefficients alone leave ~1e-12 in
/// l(l+1). Use component() for double-precision arithmetic.
struct AngularMomentumMatrices {
  int l = 0;
  MatrixXcl Lx, Ly, Lz;

  int dimension() const { return 2 * l + 1; }
  const MatrixXcl& operator[](int axis) const { return axis == 0 ? Lx : (axis == 1 ? Ly : Lz); }
  Eigen::MatrixXcd component(int axis) const { return (*this)[axis].cast<complex>(); }
};

inline AngularMomentumMatrices angular_momentum_matrices(int l) {
  if (l < 0 || l > max_angular_momentum) {
    throw std::domain_error("angular_momentum_matrices: l = " + std::to_string(l));
  }
  using cl = std::complex<long double>;
  const int dim = 2 * l + 1;
  const long double ll = static_cast<long double>(l) * (l + 1);
  MatrixXcl raise = MatrixXcl::Zero(dim, dim);
  AngularMomentumMatrices out;
  out.l = l;
  out.Lz = MatrixXcl::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const long double m = i - l;
    out.Lz(i, i) = m;
    if (i + 1 < dim) raise(i + 1, i) = std::sqrt(ll - m * (m + 1));
  }
  const MatrixXcl lower = raise.adjoint();
  out.Lx = cl{0.5L, 0.0L} * (raise + lower);
  out.Ly = cl{0.0L, -0.5L} * (raise - lower);
  return out;
}

}  // namespace wgmspin
