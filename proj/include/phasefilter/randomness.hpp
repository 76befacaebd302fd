#pragma once

#include <cmath>
#include <numbers>

#include "phasefilter/hermitian.hpp"
#include "phasefilter/rng.hpp"

namespace phasefilter {

/// Normalized i.i.d. standard complex Gaussian vector (X + iY, X and Y real
/// N(0,1)), which is uniform on the unit sphere of C^n.
inline ComplexVector haar_unit_vector(std::size_t n, RngHandle& rng) {
  if (n == 0) throw DomainError("haar_unit_vector needs n >= 1");
  ComplexVector v(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      v[i] = {re, im};
    }
    if (v.norm_squared() > 0.0) return v.normalized();
  }
}

/// G + G^dagger with G i.i.d. standard complex Gaussian. Exactly Hermitian.
inline ComplexMatrix gaussian_hermitian(std::size_t n, RngHandle& rng) {
  if (n == 0) throw DomainError("gaussian_hermitian needs n >= 1");
  ComplexMatrix g(n, n);
  for (auto& z : g.entries()) {
    const double re = rng.normal();
    const double im = rng.normal();
    z = {re, im};
  }
  ComplexMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    h(i, i) = 2.0 * g(i, i).real();
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx z = g(i, j) + std::conj(g(j, i));
      h(i, j) = z;
      h(j, i) = std::conj(z);
    }
  }
  return h;
}

struct PerturbationSpec {
  PerturbationSpec(double eps, int l) : epsilon(eps), exponent(l) {
    if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("perturbation epsilon must lie in [0, 1)");
    if (l < 2) throw DomainError("perturbation exponent must be >= 2");
  }
  double epsilon;
  int exponent;

  double scale() const { return std::pow(epsilon, exponent); }
};

/// A + eps^l (G + G^dagger). The result keeps A's separation promise and
/// grows its norm bound by the Frobenius norm of the perturbation.
inline HermitianInput perturb(const HermitianInput& a, const PerturbationSpec& spec, RngHandle& rng) {
  const double s = spec.scale();
  ComplexMatrix e = gaussian_hermitian(a.dim(), rng);
  e *= s;
  const double enorm = e.frobenius_norm();
  ComplexMatrix out = a.matrix();
  out += e;
  return HermitianInput::trusted(std::move(out), a.norm_bound() + enorm, a.separation(), enorm);
}

/// Standard normal CDF.
inline double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

// Lower-tail inverse for z in (0, 0.5]: rational start, then Newton.
inline double lower_inverse_cdf(double z, double tol) {
  // Abramowitz & Stegun 26.2.23, |error| < 4.5e-4.
  const double t = std::sqrt(-2.0 * std::log(z));
  double x = -(t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                       (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t));
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int it = 0; it < 100; ++it) {
    const double f = gaussian_cdf(x) - z;
    if (std::abs(f) <= tol) break;
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    if (!(pdf > 0.0)) break;
    const double next = x - f / pdf;
    if (next == x) break;
    x = next;
  }
  return x;
}

}  // namespace detail

/// x with |Phi(x) - z| <= 2^-bits, by Newton iteration on the erf-based CDF.
inline double gaussian_inverse_cdf(double z, int bits) {
  if (!(z > 0.0 && z < 1.0)) throw DomainError("gaussian_inverse_cdf needs z in (0, 1)");
  if (bits < 1) throw DomainError("gaussian_inverse_cdf needs bits >= 1");
  if (z == 0.5) return 0.0;
  const double tol = std::ldexp(1.0, -std::min(bits, 60));
  if (z < 0.5) return detail::lower_inverse_cdf(z, tol);
  return -detail::lower_inverse_cdf(1.0 - z, tol);
}

/// Gaussian sample from a b-bit uniform grid point pushed through the
/// inverse CDF, as in the bit-complexity model.
inline double quantized_gaussian(RngHandle& rng, int bits) {
  if (bits < 1 || bits > 52) throw DomainError("quantized_gaussian needs 1 <= bits <= 52");
  const std::uint64_t k = rng.uniform_int(0, (std::uint64_t{1} << bits) - 1);
  const double z = (static_cast<double>(k) + 0.5) * std::ldexp(1.0, -bits);
  return gaussian_inverse_cdf(z, bits);
}

}  // namespace phasefilter
