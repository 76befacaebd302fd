#pragma once

// Fractional-part sequences and their discrepancy.
//
// star_discrepancy_exact works with anchored boxes [0, u) and [0, u]. The
// unanchored family of all sub-boxes gives a value at most 2^s times larger.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phasefilter/linalg.hpp"
#include "phasefilter/randomness.hpp"
#include "phasefilter/rng.hpp"

namespace phasefilter {

/// N points in [0,1)^s, stored point-major.
class FracSequence {
 public:
  FracSequence(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw DomainError("sequence dimension must be >= 1");
    if (coords_.size() % dim_ != 0) throw ShapeError("coordinate count is not a multiple of the dimension");
    for (double c : coords_)
      if (!(c >= 0.0 && c < 1.0)) throw DomainError("sequence coordinate outside [0, 1)");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / dim_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double coord(std::size_t i, std::size_t d) const { return coords_[i * dim_ + d]; }
  std::span<const double> coords() const noexcept { return coords_; }

  /// Every coordinate shifted by c modulo 1.
  FracSequence shifted(double c) const {
    std::vector<double> out = coords_;
    for (auto& x : out) x = frac(x + c);
    return FracSequence(dim_, std::move(out));
  }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

enum class EstimateKind { exact, monte_carlo_lower_bound };

inline const char* to_string(EstimateKind k) {
  return k == EstimateKind::exact ? "exact" : "monte-carlo-lower-bound";
}

struct SequenceReport {
  std::size_t n = 0;
  std::size_t s = 0;
  double discrepancy = 0.0;
  EstimateKind kind = EstimateKind::exact;
  std::optional<double> r_sum;
  std::optional<std::uint64_t> seed;

  nlohmann::json to_json() const {
    nlohmann::json j{{"n", n}, {"s", s}, {"method", to_string(kind)}, {"value", discrepancy}};
    j["r_sum"] = r_sum ? nlohmann::json(*r_sum) : nlohmann::json(nullptr);
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    return j;
  }
};

/// Point n has coordinates frac(g_i n / N), n = 0..N-1. Exact integer
/// arithmetic before the division.
inline FracSequence multiples_sequence(std::span<const std::int64_t> g, std::int64_t modulus) {
  if (g.empty()) throw DomainError("multiples_sequence needs s >= 1");
  if (modulus < 2) throw DomainError("multiples_sequence needs N >= 2");
  std::vector<double> coords;
  coords.reserve(g.size() * static_cast<std::size_t>(modulus));
  for (std::int64_t n = 0; n < modulus; ++n)
    for (std::int64_t gi : g) {
      const __int128 r = (static_cast<__int128>(gi) * n) % modulus;
      const auto rr = static_cast<std::int64_t>(r < 0 ? r + modulus : r);
      coords.push_back(static_cast<double>(rr) / static_cast<double>(modulus));
    }
  return FracSequence(g.size(), std::move(coords));
}

/// Point m has coordinates frac(m lambda_i), m = 0..M-1.
inline FracSequence eigen_multiples_sequence(std::span<const double> lambdas, std::uint64_t count) {
  if (lambdas.empty()) throw DomainError("eigen_multiples_sequence needs s >= 1");
  std::vector<double> coords;
  coords.reserve(lambdas.size() * count);
  for (std::uint64_t m = 0; m < count; ++m)
    for (double l : lambdas) {
      // Reduce lambda first so m * lambda keeps its fractional bits.
      coords.push_back(frac(static_cast<double>(m) * frac(l)));
    }
  return FracSequence(lambdas.size(), std::move(coords));
}

inline constexpr std::size_t kExact1dMaxPoints = 10'000'000;
inline constexpr std::size_t kExact2dMaxPoints = 20'000;

namespace detail {

inline double star_discrepancy_1d(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
    d = std::max({d, hi - x[i], x[i] - lo});
  }
  return d;
}

// One sweep over the distinct x values. cnt[r] holds the number of points
// already swept whose y-rank is <= r. Before a column is inserted the open
// box [0,u) x [0,v) gives the deficit, after insertion the closed box gives
// the excess.
inline double star_discrepancy_2d(const FracSequence& seq) {
  const std::size_t n = seq.size();
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = seq.coord(i, 1);
  std::vector<double> yv = ys;
  std::sort(yv.begin(), yv.end());
  yv.erase(std::unique(yv.begin(), yv.end()), yv.end());
  const std::size_t k = yv.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return seq.coord(a, 0) < seq.coord(b, 0); });
  std::vector<std::uint32_t> rank(n);
  for (std::size_t i = 0; i < n; ++i)
    rank[i] = static_cast<std::uint32_t>(std::lower_bound(yv.begin(), yv.end(), ys[i]) - yv.begin());

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<std::uint32_t> cnt(k, 0);
  std::vector<std::uint32_t> fresh;
  double d = 0.0;
  std::size_t pos = 0;
  while (pos < n) {
    const double u = seq.coord(order[pos], 0);
    fresh.clear();
    while (pos < n && seq.coord(order[pos], 0) == u) fresh.push_back(rank[order[pos++]]);
    std::sort(fresh.begin(), fresh.end());
    std::size_t f = 0;
    std::uint32_t below_prev = 0;  // cnt[r-1] before insertion
    for (std::size_t r = 0; r < k; ++r) {
      const std::uint32_t before = cnt[r];
      d = std::max(d, u * yv[r] - below_prev * inv_n);
      while (f < fresh.size() && fresh[f] <= r) ++f;
      const std::uint32_t after = before + static_cast<std::uint32_t>(f);
      cnt[r] = after;
      d = std::max(d, after * inv_n - u * yv[r]);
      below_prev = before;
    }
    // v = 1 with the open box in u.
    d = std::max(d, u - (k ? below_prev : 0) * inv_n);
  }
  // u = 1: open in u covers every point.
  std::uint32_t below = 0;
  for (std::size_t r = 0; r < k; ++r) {
    d = std::max(d, yv[r] - below * inv_n);
    below = cnt[r];
  }
  return std::min(1.0, d);
}

}  // namespace detail

/// Exact anchored star discrepancy for s <= 2. O(N log N) for s = 1 and
/// O(N^2) for s = 2.
inline double star_discrepancy_exact(const FracSequence& seq) {
  const std::size_t n = seq.size();
  if (n == 0) throw DomainError("empty sequence");
  if (seq.dim() == 1) {
    if (n > kExact1dMaxPoints) throw ScaleError("exact 1-D discrepancy limited to 1e7 points");
    return detail::star_discrepancy_1d({seq.coords().begin(), seq.coords().end()});
  }
  if (seq.dim() == 2) {
    if (n > kExact2dMaxPoints) throw ScaleError("exact 2-D discrepancy limited to 20000 points");
    return detail::star_discrepancy_2d(seq);
  }
  throw ScaleError("exact discrepancy only for s <= 2; use star_discrepancy_mc");
}

/// 1-D discrepancy over all subintervals [u, v) of [0, 1). Invariant under
/// shifts modulo 1 when intervals may wrap around, which this formula
/// computes: 1/N + max_i(x_i - i/N) - min_i(x_i - i/N) on sorted points.
inline double extreme_discrepancy_1d(const FracSequence& seq) {
  if (seq.dim() != 1) throw ShapeError("extreme_discrepancy_1d needs s = 1");
  std::vector<double> x(seq.coords().begin(), seq.coords().end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double hi = -2.0, lo = 2.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] - static_cast<double>(i) / n;
    hi = std::max(hi, e);
    lo = std::min(lo, e);
  }
  return std::min(1.0, 1.0 / n + hi - lo);
}

/// Largest |fraction - volume| over `trials` random anchored boxes [0, u).
/// A lower bound on the star discrepancy.
inline double star_discrepancy_mc(const FracSequence& seq, std::size_t trials, RngHandle& rng) {
  if (trials == 0) throw DomainError("star_discrepancy_mc needs trials >= 1");
  const std::size_t n = seq.size(), s = seq.dim();
  std::vector<double> u(s);
  double best = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    double vol = 1.0;
    for (std::size_t d = 0; d < s; ++d) {
      u[d] = rng.uniform();
      vol *= u[d];
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool inside = true;
      for (std::size_t d = 0; d < s && inside; ++d) inside = seq.coord(i, d) < u[d];
      count += inside;
    }
    best = std::max(best, std::abs(static_cast<double>(count) / static_cast<double>(n) - vol));
  }
  return best;
}

inline constexpr std::int64_t kRSumMaxModulus = 512;

/// Sum of 1/r(h) over nonzero h in [-P/2, P/2)^s with h.g = 0 mod P, where
/// r(h) = prod max(1, |h_i|). `cutoff` further limits |h_i| (0 = no limit).
inline double niederreiter_r_sum(std::span<const std::int64_t> g, std::int64_t P, std::int64_t cutoff = 0) {
  const std::size_t s = g.size();
  if (s == 0) throw DomainError("niederreiter_r_sum needs s >= 1");
  if (s > 3 || P > kRSumMaxModulus) throw ScaleError("niederreiter_r_sum limited to s <= 3, P <= 512");
  if (P < 1) throw DomainError("niederreiter_r_sum needs P >= 1");
  std::int64_t lo = -(P / 2), hi = (P + 1) / 2 - 1;  // [-P/2, P/2) on the integers
  if (cutoff > 0) {
    lo = std::max(lo, -cutoff);
    hi = std::min(hi, cutoff);
  }
  std::vector<std::int64_t> gm(s);
  for (std::size_t i = 0; i < s; ++i) gm[i] = ((g[i] % P) + P) % P;

  std::vector<std::int64_t> h(s, lo);
  double total = 0.0;
  for (;;) {
    std::int64_t dot = 0;
    bool zero = true;
    double r = 1.0;
    for (std::size_t i = 0; i < s; ++i) {
      dot = (dot + h[i] * gm[i]) % P;
      if (h[i] != 0) {
        zero = false;
        r *= static_cast<double>(std::abs(h[i]));
      }
    }
    if (!zero && dot == 0) total += 1.0 / r;
    std::size_t i = 0;
    while (i < s && h[i] == hi) h[i++] = lo;
    if (i == s) break;
    ++h[i];
  }
  return total;
}

namespace detail {

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod(r, a, m);
    a = mulmod(a, a, m);
    e >>= 1;
  }
  return r;
}

}  // namespace detail

/// Deterministic Miller-Rabin; the first 13 prime bases cover every n below
/// 3.3e24, so all 64-bit inputs.
inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  static constexpr std::uint64_t bases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};
  for (std::uint64_t p : bases) {
    if (n == p) return true;
    if (n % p == 0) return false;
  }
  std::uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (std::uint64_t a : bases) {
    std::uint64_t x = detail::powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = detail::mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

struct Modulus {
  std::uint64_t M;
  std::uint64_t prime;
};

inline constexpr std::uint64_t kMaxModulus = std::uint64_t{1} << 62;

/// p = least prime >= eps^{-l/2}, M = p^3.
inline Modulus choose_modulus(double epsilon, int l) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("choose_modulus needs 0 < epsilon < 1");
  if (l < 1) throw DomainError("choose_modulus needs l >= 1");
  const double target = std::pow(epsilon, -0.5 * l);
  if (!(target < 2e6)) throw ScaleError("choose_modulus: p^3 would exceed 2^62");
  // Absorb pow() rounding so exact powers like 0.1^-1 land on 10, not 11.
  auto p = static_cast<std::uint64_t>(std::ceil(target * (1.0 - 1e-12)));
  if (p < 2) p = 2;
  while (!is_prime(p)) ++p;
  const unsigned __int128 m = static_cast<unsigned __int128>(p) * p * p;
  if (m > kMaxModulus) throw ScaleError("choose_modulus: p^3 exceeds 2^62");
  return {static_cast<std::uint64_t>(m), p};
}

/// Perturbs the first s eigenvalues by N(0, eps^{2l}) noise and measures the
/// discrepancy of frac(m lambda'), m = 0..M-1. Exact for s <= 2, otherwise a
/// Monte Carlo lower bound with 10^4 boxes.
inline SequenceReport pseudorandomness_trial(std::span<const double> lambdas, const PerturbationSpec& spec,
                                             std::uint64_t M, std::size_t s, RngHandle& rng) {
  if (s == 0 || lambdas.size() < s) throw DomainError("pseudorandomness_trial needs 1 <= s <= lambdas.size()");
  const double sigma = spec.scale();
  std::vector<double> perturbed(s);
  for (std::size_t i = 0; i < s; ++i) perturbed[i] = lambdas[i] + sigma * rng.normal();
  const auto seq = eigen_multiples_sequence(perturbed, M);
  SequenceReport rep;
  rep.n = M;
  rep.s = s;
  rep.seed = rng.seed();
  if (s <= 2) {
    rep.discrepancy = star_discrepancy_exact(seq);
    rep.kind = EstimateKind::exact;
  } else {
    rep.discrepancy = star_discrepancy_mc(seq, 10'000, rng);
    rep.kind = EstimateKind::monte_carlo_lower_bound;
  }
  return rep;
}

}  // namespace phasefilter
