#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "phasefilter/linalg.hpp"
#include "phasefilter/oracle.hpp"

namespace phasefilter {

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr std::size_t kSeparationOracleMaxDim = 64;

/// A validated square Hermitian PSD matrix with its norm bound and eigenphase
/// separation. Immutable once built.
class HermitianInput {
 public:
  HermitianInput() = default;

  /// Checks shape, Hermiticity and semidefiniteness. The separation is
  /// measured by the oracle for n <= 64; above that the declared value is
  /// trusted (and required when the oracle cannot run).
  static HermitianInput validate(ComplexMatrix m, std::optional<double> declared_separation = std::nullopt) {
    if (!m.square() || m.rows() == 0) throw ShapeError("HermitianInput needs a non-empty square matrix");
    for (const auto& z : m.entries())
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw DomainError("matrix has non-finite entries");
    if (m.hermiticity_defect() > kHermitianTolerance) throw DomainError("matrix is not Hermitian within 1e-12");
    for (std::size_t i = 0; i < m.rows(); ++i) {
      m(i, i) = m(i, i).real();
      for (std::size_t j = i + 1; j < m.cols(); ++j) m(j, i) = std::conj(m(i, j));
    }

    const std::size_t n = m.rows();
    if (n > kOracleMaxDim) {
      if (!declared_separation) throw ScaleError("n > 512: separation must be declared");
      const double bound = m.frobenius_norm();
      return trusted(std::move(m), bound, *declared_separation);
    }
    const auto eig = jacobi_eigh(m);
    if (eig.eigenvalues.front() < -kPsdTolerance) throw DomainError("matrix is not positive semidefinite");
    const double bound = std::max(std::abs(eig.eigenvalues.front()), std::abs(eig.eigenvalues.back())) +
                         eig.residual_bound;
    double separation = 0.0;
    if (n <= kSeparationOracleMaxDim || !declared_separation)
      separation = measure_separation(eig);
    else
      separation = *declared_separation;
    return trusted(std::move(m), bound, separation);
  }

  /// No checks. For matrices the library produced itself.
  static HermitianInput trusted(ComplexMatrix m, double norm_bound, double separation,
                                double perturbation_norm = 0.0) {
    HermitianInput h;
    h.matrix_ = std::move(m);
    h.norm_bound_ = norm_bound;
    h.separation_ = separation;
    h.perturbation_norm_ = perturbation_norm;
    return h;
  }

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return matrix_.rows(); }
  double norm_bound() const noexcept { return norm_bound_; }
  double separation() const noexcept { return separation_; }
  /// Frobenius norm of the most recent perturbation applied to produce this
  /// matrix; 0 for unperturbed input.
  double perturbation_norm() const noexcept { return perturbation_norm_; }

 private:
  ComplexMatrix matrix_;
  double norm_bound_ = 0.0;
  double separation_ = 0.0;
  double perturbation_norm_ = 0.0;
};

inline constexpr double kTaylorMaxScaledNorm = 8.0;

/// sum_{m<s} (i c A)^m / m!. Rejects |c| * norm_bound > 8.
inline ComplexMatrix taylor_exp(const HermitianInput& a, int terms, double scale,
                                MultiplyStrategy strategy = MultiplyStrategy::blocked,
                                const PrecisionBudget* budget = nullptr) {
  if (terms < 1) throw DomainError("taylor_exp needs s >= 1");
  if (std::abs(scale) * a.norm_bound() > kTaylorMaxScaledNorm)
    throw DomainError("taylor_exp: |c| * ||A|| exceeds 8");
  return taylor_series_exp(a.matrix(), terms, scale, strategy, budget);
}

inline EigenDecomposition jacobi_eigh(const HermitianInput& a) { return jacobi_eigh(a.matrix()); }

inline ComplexMatrix oracle_exp(const HermitianInput& a, double scale) { return oracle_exp(a.matrix(), scale); }

}  // namespace phasefilter
