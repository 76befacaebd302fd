#pragma once

// Dense complex vectors and matrices plus the handful of kernels the filter
// needs: products, repeated squaring, the truncated Taylor exponential, the
// Hadamard filter step and b-bit truncation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phasefilter/errors.hpp"

namespace phasefilter {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class ComplexVector {
 public:
  ComplexVector() = default;
  explicit ComplexVector(std::size_t dim) : entries_(dim) {}
  explicit ComplexVector(std::vector<cplx> entries) : entries_(std::move(entries)) {}
  ComplexVector(std::initializer_list<cplx> entries) : entries_(entries) {}

  static ComplexVector basis(std::size_t dim, std::size_t k) {
    ComplexVector e(dim);
    e[k] = 1.0;
    return e;
  }

  std::size_t dim() const noexcept { return entries_.size(); }
  cplx& operator[](std::size_t i) { return entries_[i]; }
  const cplx& operator[](std::size_t i) const { return entries_[i]; }
  std::span<const cplx> entries() const noexcept { return entries_; }
  std::span<cplx> entries() noexcept { return entries_; }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& z : entries_) s += std::norm(z);
    return s;
  }
  double norm() const { return std::sqrt(norm_squared()); }

  ComplexVector& operator+=(const ComplexVector& o) {
    require_same(o);
    for (std::size_t i = 0; i < dim(); ++i) entries_[i] += o.entries_[i];
    return *this;
  }
  ComplexVector& operator-=(const ComplexVector& o) {
    require_same(o);
    for (std::size_t i = 0; i < dim(); ++i) entries_[i] -= o.entries_[i];
    return *this;
  }
  ComplexVector& operator*=(cplx s) {
    for (auto& z : entries_) z *= s;
    return *this;
  }

  friend ComplexVector operator+(ComplexVector a, const ComplexVector& b) { return a += b; }
  friend ComplexVector operator-(ComplexVector a, const ComplexVector& b) { return a -= b; }
  friend ComplexVector operator*(cplx s, ComplexVector a) { return a *= s; }
  friend bool operator==(const ComplexVector&, const ComplexVector&) = default;

  /// Unit vector in the same direction. Throws on a zero vector.
  ComplexVector normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw DomainError("cannot normalize a zero vector");
    ComplexVector out = *this;
    out *= 1.0 / n;
    return out;
  }

 private:
  void require_same(const ComplexVector& o) const {
    if (o.dim() != dim()) throw ShapeError("vector dimension mismatch");
  }
  std::vector<cplx> entries_;
};

/// <a, b> = sum conj(a_i) b_i.
inline cplx inner(const ComplexVector& a, const ComplexVector& b) {
  if (a.dim() != b.dim()) throw ShapeError("inner product dimension mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// min over phases of |v - e^{i theta} w| for unit vectors, i.e. sqrt(2 - 2|<v,w>|).
/// Computed from the aligned difference to avoid cancellation near 0.
inline double phase_distance(const ComplexVector& v, const ComplexVector& w) {
  const cplx ip = inner(w, v);
  const double a = std::abs(ip);
  const cplx phase = a > 0.0 ? ip / a : cplx(1.0, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i) s += std::norm(v[i] - phase * w[i]);
  return std::sqrt(s);
}

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) throw ShapeError("entry count does not match rows x cols");
  }
  /// Row-major nested initializer, for tests and small fixtures.
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    entries_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged initializer");
      entries_.insert(entries_.end(), r.begin(), r.end());
    }
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static ComplexMatrix diagonal(std::span<const cplx> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static ComplexMatrix diagonal(std::span<const double> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  /// Matrix whose columns are the given vectors.
  static ComplexMatrix from_columns(std::span<const ComplexVector> cols) {
    if (cols.empty()) return {};
    ComplexMatrix m(cols[0].dim(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) m.set_column(j, cols[j]);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  std::span<const cplx> entries() const noexcept { return entries_; }
  std::span<cplx> entries() noexcept { return entries_; }

  ComplexVector column(std::size_t c) const {
    ComplexVector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }
  void set_column(std::size_t c, const ComplexVector& v) {
    if (v.dim() != rows_) throw ShapeError("column length mismatch");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
  }

  ComplexMatrix adjoint() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    require_same(o);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += o.entries_[i];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    require_same(o);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= o.entries_[i];
    return *this;
  }
  ComplexMatrix& operator*=(cplx s) {
    for (auto& z : entries_) z *= s;
    return *this;
  }
  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : entries_) m = std::max(m, std::abs(z));
    return m;
  }
  /// Frobenius norm; an upper bound on the operator norm.
  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& z : entries_) s += std::norm(z);
    return std::sqrt(s);
  }
  /// max |m - m^dagger| entrywise; zero for exactly Hermitian input.
  double hermiticity_defect() const {
    if (!square()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = r; c < cols_; ++c)
        d = std::max(d, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
    return d;
  }

 private:
  void require_same(const ComplexMatrix& o) const {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw ShapeError("matrix shape mismatch");
  }
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> entries_;
};

inline ComplexVector operator*(const ComplexMatrix& m, const ComplexVector& v) {
  if (m.cols() != v.dim()) throw ShapeError("matrix-vector dimension mismatch");
  ComplexVector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    cplx s = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c) * v[c];
    out[r] = s;
  }
  return out;
}

enum class MultiplyStrategy { naive, blocked, strassen };

inline const char* to_string(MultiplyStrategy s) {
  switch (s) {
    case MultiplyStrategy::naive: return "naive";
    case MultiplyStrategy::blocked: return "blocked";
    case MultiplyStrategy::strassen: return "strassen";
  }
  return "?";
}

namespace detail {

inline void require_product_shape(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: a.cols (" + std::to_string(a.cols()) + ") != b.rows (" +
                     std::to_string(b.rows()) + ")");
}

inline ComplexMatrix matmul_naive(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline ComplexMatrix matmul_blocked(const ComplexMatrix& a, const ComplexMatrix& b,
                                    std::size_t block = 32) {
  ComplexMatrix out(a.rows(), b.cols());
  const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
  for (std::size_t ii = 0; ii < n; ii += block)
    for (std::size_t kk = 0; kk < m; kk += block)
      for (std::size_t jj = 0; jj < p; jj += block) {
        const std::size_t ie = std::min(ii + block, n);
        const std::size_t ke = std::min(kk + block, m);
        const std::size_t je = std::min(jj + block, p);
        for (std::size_t i = ii; i < ie; ++i)
          for (std::size_t k = kk; k < ke; ++k) {
            const cplx aik = a(i, k);
            for (std::size_t j = jj; j < je; ++j) out(i, j) += aik * b(k, j);
          }
      }
  return out;
}

// Copy of the (r0, c0) quadrant of size h x h, zero padded past the edge.
inline ComplexMatrix quadrant(const ComplexMatrix& m, std::size_t r0, std::size_t c0, std::size_t h) {
  ComplexMatrix q(h, h);
  for (std::size_t r = 0; r < h && r0 + r < m.rows(); ++r)
    for (std::size_t c = 0; c < h && c0 + c < m.cols(); ++c) q(r, c) = m(r0 + r, c0 + c);
  return q;
}

inline void place(ComplexMatrix& out, const ComplexMatrix& q, std::size_t r0, std::size_t c0) {
  for (std::size_t r = 0; r < q.rows() && r0 + r < out.rows(); ++r)
    for (std::size_t c = 0; c < q.cols() && c0 + c < out.cols(); ++c) out(r0 + r, c0 + c) = q(r, c);
}

inline ComplexMatrix matmul_strassen(const ComplexMatrix& a, const ComplexMatrix& b, std::size_t cutover) {
  const std::size_t big = std::max({a.rows(), a.cols(), b.cols()});
  if (big <= cutover) return matmul_naive(a, b);
  const std::size_t h = (big + 1) / 2;
  const auto a11 = quadrant(a, 0, 0, h), a12 = quadrant(a, 0, h, h);
  const auto a21 = quadrant(a, h, 0, h), a22 = quadrant(a, h, h, h);
  const auto b11 = quadrant(b, 0, 0, h), b12 = quadrant(b, 0, h, h);
  const auto b21 = quadrant(b, h, 0, h), b22 = quadrant(b, h, h, h);

  const auto m1 = matmul_strassen(a11 + a22, b11 + b22, cutover);
  const auto m2 = matmul_strassen(a21 + a22, b11, cutover);
  const auto m3 = matmul_strassen(a11, b12 - b22, cutover);
  const auto m4 = matmul_strassen(a22, b21 - b11, cutover);
  const auto m5 = matmul_strassen(a11 + a12, b22, cutover);
  const auto m6 = matmul_strassen(a21 - a11, b11 + b12, cutover);
  const auto m7 = matmul_strassen(a12 - a22, b21 + b22, cutover);

  ComplexMatrix out(a.rows(), b.cols());
  place(out, m1 + m4 - m5 + m7, 0, 0);
  place(out, m3 + m5, 0, h);
  place(out, m2 + m4, h, 0);
  place(out, m1 - m2 + m3 + m6, h, h);
  return out;
}

}  // namespace detail

/// Strassen recursion falls back to the triple loop at or below this size.
inline constexpr std::size_t kStrassenCutover = 64;

inline ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b,
                            MultiplyStrategy strategy = MultiplyStrategy::blocked,
                            std::size_t strassen_cutover = kStrassenCutover) {
  detail::require_product_shape(a, b);
  switch (strategy) {
    case MultiplyStrategy::naive: return detail::matmul_naive(a, b);
    case MultiplyStrategy::blocked: return detail::matmul_blocked(a, b);
    case MultiplyStrategy::strassen: return detail::matmul_strassen(a, b, std::max<std::size_t>(1, strassen_cutover));
  }
  return detail::matmul_naive(a, b);
}

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) { return matmul(a, b); }

/// Per-entry rounding applied after every product in bit-budget mode.
struct PrecisionBudget {
  explicit PrecisionBudget(int b) : bits(b) {
    if (b < 8) throw DomainError("precision budget needs at least 8 bits");
  }
  int bits;
};

/// Rounds x to `bits` significant bits, ties to even.
inline double round_significand(double x, int bits) {
  if (bits >= 53 || x == 0.0 || !std::isfinite(x)) return x;
  int e = 0;
  const double m = std::frexp(x, &e);  // |m| in [0.5, 1)
  return std::ldexp(std::nearbyint(std::ldexp(m, bits)), e - bits);
}

/// Keeps the top b bits of the real and imaginary part of every entry.
inline ComplexMatrix truncate(const ComplexMatrix& m, PrecisionBudget budget) {
  ComplexMatrix out = m;
  for (auto& z : out.entries())
    z = {round_significand(z.real(), budget.bits), round_significand(z.imag(), budget.bits)};
  return out;
}

inline ComplexVector truncate(const ComplexVector& v, PrecisionBudget budget) {
  ComplexVector out = v;
  for (auto& z : out.entries())
    z = {round_significand(z.real(), budget.bits), round_significand(z.imag(), budget.bits)};
  return out;
}

/// u^m by repeated squaring; O(log m) products. An optional budget truncates
/// every intermediate product.
inline ComplexMatrix power_by_squaring(const ComplexMatrix& u, std::uint64_t m,
                                       MultiplyStrategy strategy = MultiplyStrategy::blocked,
                                       const PrecisionBudget* budget = nullptr) {
  if (!u.square()) throw ShapeError("power_by_squaring needs a square matrix");
  auto finish = [&](ComplexMatrix x) { return budget ? truncate(x, *budget) : x; };
  ComplexMatrix result = ComplexMatrix::identity(u.rows());
  ComplexMatrix base = u;
  bool first = true;
  while (m > 0) {
    if (m & 1u) {
      result = first ? base : finish(matmul(result, base, strategy));
      first = false;
    }
    m >>= 1;
    if (m > 0) base = finish(matmul(base, base, strategy));
  }
  return result;
}

/// sum_{k<s} (i c A)^k / k! by Horner's rule (s - 1 products). The caller is
/// responsible for the norm precondition; see taylor_exp in hermitian.hpp.
inline ComplexMatrix taylor_series_exp(const ComplexMatrix& a, int terms, double scale,
                                       MultiplyStrategy strategy = MultiplyStrategy::blocked,
                                       const PrecisionBudget* budget = nullptr) {
  if (!a.square()) throw ShapeError("taylor_series_exp needs a square matrix");
  if (terms < 1) throw DomainError("taylor_series_exp needs at least one term");
  const std::size_t n = a.rows();
  ComplexMatrix x = a;
  x *= cplx(0.0, scale);
  if (budget) x = truncate(x, *budget);
  ComplexMatrix result = ComplexMatrix::identity(n);
  for (int k = terms - 1; k >= 1; --k) {
    result = matmul(x, result, strategy);
    result *= 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i) result(i, i) += 1.0;
    if (budget) result = truncate(result, *budget);
  }
  return result;
}

/// Smallest term count whose truncation error is below `error` for a Hermitian
/// argument of scaled norm `scaled_norm`. Both the 2^{-s} e^{x} form and the
/// exact remainder x^s / s! must clear the target.
inline int taylor_terms_for(double error, double scaled_norm) {
  if (!(error > 0.0)) throw DomainError("taylor error target must be positive");
  const double x = std::max(scaled_norm, 0.0);
  for (int s = 1; s < 4096; ++s) {
    const double geometric = std::exp(x - s * std::numbers::ln2);
    const double remainder = std::exp(s * std::log(std::max(x, 1e-300)) - std::lgamma(s + 1.0));
    if (geometric <= error && remainder <= error) return s;
  }
  throw ScaleError("taylor term count exceeds 4096");
}

/// Hadamard step on (1/sqrt 2)[v, uv]: w0 = (v + uv)/2, w1 = (v - uv)/2.
inline std::pair<ComplexVector, ComplexVector> filter_step(const ComplexVector& v, const ComplexVector& uv) {
  if (v.dim() != uv.dim()) throw ShapeError("filter_step dimension mismatch");
  ComplexVector w0(v.dim()), w1(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) {
    w0[i] = 0.5 * (v[i] + uv[i]);
    w1[i] = 0.5 * (v[i] - uv[i]);
  }
  return {std::move(w0), std::move(w1)};
}

/// Fractional part in [0, 1), also for negative input.
inline double frac(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

/// Circular distance of x to 0 on the unit circle [0, 1).
inline double circular_distance(double x, double y) {
  const double d = frac(x - y);
  return std::min(d, 1.0 - d);
}

}  // namespace phasefilter
