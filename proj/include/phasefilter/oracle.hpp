#pragma once

// Ground truth for everything else: a cyclic Jacobi eigensolver for dense
// complex Hermitian matrices, the exponential built from it, eigenvector
// matching and separation measurement. Depends on linalg only, never on the
// filter, sampler or diagonalizer.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "phasefilter/linalg.hpp"

namespace phasefilter {

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // column k pairs with eigenvalues[k]
  double residual_bound = 0.0;      // max_k |A v_k - lambda_k v_k|

  std::size_t size() const noexcept { return eigenvalues.size(); }
  ComplexVector vector(std::size_t k) const { return eigenvectors.column(k); }
};

inline constexpr std::size_t kOracleMaxDim = 512;
inline constexpr int kJacobiMaxSweeps = 100;

/// Hermiticity tolerance used to validate inputs across the library.
inline constexpr double kHermitianTolerance = 1e-12;

/// Cyclic Jacobi. Each rotation first removes the phase of a_pq with a
/// diagonal unitary, then applies the real symmetric rotation that zeroes it.
/// Fixed row-major sweep order, so the result is deterministic.
inline EigenDecomposition jacobi_eigh(const ComplexMatrix& input) {
  if (!input.square()) throw ShapeError("jacobi_eigh needs a square matrix");
  const std::size_t n = input.rows();
  if (n > kOracleMaxDim) throw ScaleError("oracle limited to n <= 512");
  if (input.hermiticity_defect() > kHermitianTolerance * std::max(1.0, input.max_abs()))
    throw DomainError("jacobi_eigh input is not Hermitian");

  ComplexMatrix a = input;
  // Symmetrize exactly so rounding in the input cannot leak into the sweeps.
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = a(i, i).real();
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx avg = 0.5 * (a(i, j) + std::conj(a(j, i)));
      a(i, j) = avg;
      a(j, i) = std::conj(avg);
    }
  }
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double scale = std::max(a.frobenius_norm(), std::numeric_limits<double>::min());

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += std::norm(a(i, j));
    return std::sqrt(2.0 * s);
  };

  bool converged = false;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    if (off_norm() <= 1e-15 * scale) {
      converged = true;
      break;
    }
    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double mag = std::abs(a(p, q));
        if (mag <= 1e-300 || mag <= 1e-18 * scale) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        ++rotations;
        // Phase step: scale row/column q so a_pq becomes real positive.
        const cplx e = a(p, q) / mag;
        const cplx ec = std::conj(e);
        for (std::size_t k = 0; k < n; ++k) {
          a(k, q) *= ec;
          v(k, q) *= ec;
        }
        for (std::size_t k = 0; k < n; ++k) a(q, k) *= e;
        a(q, q) = a(q, q).real();

        const double app = a(p, p).real(), aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, p) = app - t * mag;
        a(q, q) = aqq + t * mag;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    if (rotations == 0) converged = true;
  }
  if (!converged && off_norm() > 1e-12 * scale) throw OracleError("Jacobi did not converge in 100 sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]).real();
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const ComplexVector vk = out.vector(k);
    ComplexVector r = input * vk;
    r -= cplx(out.eigenvalues[k]) * vk;
    out.residual_bound = std::max(out.residual_bound, r.norm());
  }
  return out;
}

/// Exact 2-norm from the eigenvalues of m^dagger m.
inline double spectral_norm(const ComplexMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  const auto e = jacobi_eigh(matmul(m.adjoint(), m, MultiplyStrategy::naive));
  return std::sqrt(std::max(0.0, e.eigenvalues.back()));
}

/// V diag(e^{i scale lambda_k}) V^dagger.
inline ComplexMatrix exp_from_decomposition(const EigenDecomposition& d, double scale) {
  const std::size_t n = d.size();
  ComplexMatrix scaled = d.eigenvectors;
  for (std::size_t k = 0; k < n; ++k) {
    const cplx phase = std::polar(1.0, scale * d.eigenvalues[k]);
    for (std::size_t r = 0; r < n; ++r) scaled(r, k) *= phase;
  }
  return matmul(scaled, d.eigenvectors.adjoint(), MultiplyStrategy::naive);
}

inline ComplexMatrix oracle_exp(const ComplexMatrix& a, double scale) {
  return exp_from_decomposition(jacobi_eigh(a), scale);
}

/// Minimal circular distance between fractional parts of distinct
/// eigenvalues, i.e. the eigenphase gap of e^{2 pi i A}. The definition in
/// terms of {2 pi lambda} would differ by the 2 pi placement only.
inline double measure_separation(std::span<const double> eigenvalues) {
  double best = 0.5;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i)
    for (std::size_t j = i + 1; j < eigenvalues.size(); ++j)
      best = std::min(best, circular_distance(eigenvalues[i], eigenvalues[j]));
  return best;
}

inline double measure_separation(const EigenDecomposition& d) { return measure_separation(d.eigenvalues); }

struct MatchPair {
  std::size_t candidate;
  std::size_t target;
  double distance;
};

struct MatchReport {
  std::vector<MatchPair> pairs;                 // optimal assignment
  std::vector<std::size_t> unmatched_candidates;  // more candidates than targets
  std::vector<std::size_t> duplicated_targets;    // nearest target of 2+ candidates
  double max_distance = 0.0;

  /// Every target covered once and every assigned distance within delta.
  bool perfect(std::size_t targets, double delta) const {
    return pairs.size() == targets && unmatched_candidates.empty() && max_distance <= delta;
  }
};

namespace detail {

// Hungarian algorithm (shortest augmenting path) on a rows <= cols cost
// matrix. Returns the column assigned to each row.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const std::size_t m = n ? cost[0].size() : 0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> assign(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j]) assign[p[j] - 1] = j - 1;
  return assign;
}

}  // namespace detail

/// Minimum total phase-invariant distance assignment of candidates to the
/// oracle eigenvectors.
inline MatchReport match_eigenvectors(std::span<const ComplexVector> candidates, const EigenDecomposition& truth) {
  MatchReport report;
  const std::size_t k = candidates.size(), n = truth.size();
  if (k == 0 || n == 0) {
    for (std::size_t c = 0; c < k; ++c) report.unmatched_candidates.push_back(c);
    return report;
  }
  std::vector<ComplexVector> targets;
  targets.reserve(n);
  for (std::size_t t = 0; t < n; ++t) targets.push_back(truth.vector(t));

  std::vector<std::vector<double>> dist(k, std::vector<double>(n));
  std::vector<std::size_t> nearest_count(n, 0);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t best = 0;
    for (std::size_t t = 0; t < n; ++t) {
      dist[c][t] = phase_distance(candidates[c], targets[t]);
      if (dist[c][t] < dist[c][best]) best = t;
    }
    ++nearest_count[best];
  }
  for (std::size_t t = 0; t < n; ++t)
    if (nearest_count[t] > 1) report.duplicated_targets.push_back(t);

  if (k <= n) {
    const auto assign = detail::hungarian(dist);
    for (std::size_t c = 0; c < k; ++c) report.pairs.push_back({c, assign[c], dist[c][assign[c]]});
  } else {
    std::vector<std::vector<double>> transposed(n, std::vector<double>(k));
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t t = 0; t < n; ++t) transposed[t][c] = dist[c][t];
    const auto assign = detail::hungarian(transposed);
    std::vector<char> used(k, 0);
    for (std::size_t t = 0; t < n; ++t) {
      report.pairs.push_back({assign[t], t, dist[assign[t]][t]});
      used[assign[t]] = 1;
    }
    for (std::size_t c = 0; c < k; ++c)
      if (!used[c]) report.unmatched_candidates.push_back(c);
    std::sort(report.pairs.begin(), report.pairs.end(),
              [](const MatchPair& x, const MatchPair& y) { return x.candidate < y.candidate; });
  }
  for (const auto& p : report.pairs) report.max_distance = std::max(report.max_distance, p.distance);
  return report;
}

/// Index of the oracle eigenvector closest (up to phase) to v.
inline std::pair<std::size_t, double> nearest_eigenvector(const ComplexVector& v, const EigenDecomposition& truth) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const double d = phase_distance(v, truth.vector(t));
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  return {best, best_d};
}

}  // namespace phasefilter
