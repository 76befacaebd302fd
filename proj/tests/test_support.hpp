#pragma once

#include <cmath>
#include <vector>

#include "phasefilter/phasefilter.hpp"

namespace testing_support {

namespace pf = phasefilter;

inline pf::ComplexMatrix random_matrix(std::size_t r, std::size_t c, pf::RngHandle& rng) {
  pf::ComplexMatrix m(r, c);
  for (auto& z : m.entries()) z = {rng.normal(), rng.normal()};
  return m;
}

inline double max_abs_diff(const pf::ComplexMatrix& a, const pf::ComplexMatrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) d = std::max(d, std::abs(a.entries()[i] - b.entries()[i]));
  return d;
}

/// Random Hermitian matrix with spectral norm at most `norm`.
inline pf::ComplexMatrix random_hermitian(std::size_t n, double norm, pf::RngHandle& rng) {
  pf::ComplexMatrix g = pf::gaussian_hermitian(n, rng);
  g *= norm / pf::spectral_norm(g);
  return g;
}

inline pf::ComplexMatrix diag(std::vector<double> d) { return pf::ComplexMatrix::diagonal(std::span<const double>(d)); }

/// Operator 2-norm of a - b.
inline double op_norm_diff(const pf::ComplexMatrix& a, const pf::ComplexMatrix& b) {
  pf::ComplexMatrix d = a;
  d -= b;
  return pf::spectral_norm(d);
}

}  // namespace testing_support
