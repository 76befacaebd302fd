#pragma once

// One filter iteration and the parameter schedule that drives it.
//
// Band half-widths are in units of eigenphase x = {m lambda}:
//   B  = 1 / (2 pi log^a n)
//   B' = B / sqrt(2 log(n^3 / delta) + 1)
// With p = ceil(8 log^{2a}(n) log(n^3/delta)) every x in B' keeps at least
// 1/e of its weight after p steps and every x outside B keeps at most
// delta / n^3.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phasefilter/discrepancy.hpp"
#include "phasefilter/hermitian.hpp"
#include "phasefilter/linalg.hpp"
#include "phasefilter/oracle.hpp"
#include "phasefilter/randomness.hpp"
#include "phasefilter/rng.hpp"

namespace phasefilter {

enum class ScheduleMode { paper_formula, manual_override };

inline const char* to_string(ScheduleMode m) {
  return m == ScheduleMode::paper_formula ? "paper-formula" : "manual-override";
}

enum class BandKind { B, B_prime };

struct Band {
  double half_width;
  BandKind kind;
};

inline constexpr double kMaxBandHalfWidth = 0.49;

/// ((1 + cos 2 pi x) / 2)^p, the weight kept by eigenphase x after p steps.
inline double predicted_attenuation(double x, int p) {
  if (p < 0) throw DomainError("predicted_attenuation needs p >= 0");
  const double c = std::cos(std::numbers::pi * x);
  return std::pow(c * c, p);
}

/// Circular distance of x to 0 is at most the half-width.
inline bool in_band(double x, const Band& band) {
  const double f = frac(x);
  return std::min(f, 1.0 - f) <= band.half_width;
}

struct FilterSchedule {
  std::size_t n = 0;
  double a = 1.0;
  int p = 1;
  int t = 2;
  std::uint64_t M = 2;
  int l = 2;
  double epsilon = 0.1;
  double delta = 1e-3;
  double nu = 1.0;
  ScheduleMode mode = ScheduleMode::manual_override;
  bool clamped = false;
  double b_half_width = kMaxBandHalfWidth;
  double b_prime_half_width = kMaxBandHalfWidth;

  Band band_b() const { return {b_half_width, BandKind::B}; }
  Band band_b_prime() const { return {b_prime_half_width, BandKind::B_prime}; }
  PerturbationSpec perturbation() const { return {epsilon, l}; }
  /// Error target for the exponential of each iteration.
  double exponential_error() const { return epsilon / static_cast<double>(M); }

  /// Every quantity from the input size, target accuracy and separation.
  /// Natural logs throughout.
  static FilterSchedule paper_formula(std::size_t n, double delta, double nu, double separation, int l = 2) {
    check_common(n, delta, nu, l);
    FilterSchedule s;
    s.mode = ScheduleMode::paper_formula;
    s.n = n;
    s.delta = delta;
    s.nu = nu;
    s.l = l;
    s.a = 1.0 / nu;
    const double L = std::log(static_cast<double>(n));
    const double K = std::log(std::pow(static_cast<double>(n), 3.0) / delta);
    s.p = static_cast<int>(std::ceil(8.0 * std::pow(L, 2.0 * s.a) * K));
    if (s.p < 1) {
      s.p = 1;
      s.clamped = true;
    }
    const double loglog = L > 0.0 ? std::log(L) : 0.0;
    const double t_raw = loglog > 0.0 ? std::ceil(nu * L / loglog) : 0.0;
    s.t = static_cast<int>(std::max(2.0, t_raw));
    if (t_raw < 2.0) s.clamped = true;

    double eps = std::exp2(-std::pow(L, 8.0 * s.a));
    if (separation > 0.0) eps = std::min(eps, separation);
    eps = std::min(eps, 0.5);
    // U^m loses unitarity at roughly m * 1e-15 in double precision, so the
    // modulus is held near 1e9 (prime p <= 1000) whatever epsilon asks for.
    const double eps_floor = std::pow(1000.0, -2.0 / l);
    if (eps < eps_floor) {
      eps = eps_floor;
      s.clamped = true;
    }
    for (;;) {
      try {
        const auto mod = choose_modulus(eps, l);
        s.M = mod.M;
        break;
      } catch (const ScaleError&) {
        eps *= 2.0;
        s.clamped = true;
        if (eps >= 1.0) throw ScaleError("no epsilon < 1 gives a modulus below 2^62");
      }
    }
    s.epsilon = eps;
    s.set_bands();
    return s;
  }

  /// Caller-chosen p, t, M, l, epsilon. Bands follow the same formulas.
  static FilterSchedule manual(std::size_t n, int p, int t, std::uint64_t M, int l, double epsilon, double delta,
                               double nu) {
    check_common(n, delta, nu, l);
    if (p < 1 || t < 1 || M < 1) throw DomainError("manual schedule needs p, t, M >= 1");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("manual schedule needs epsilon in [0, 1)");
    FilterSchedule s;
    s.mode = ScheduleMode::manual_override;
    s.n = n;
    s.p = p;
    s.t = t;
    s.M = M;
    s.l = l;
    s.epsilon = epsilon;
    s.delta = delta;
    s.nu = nu;
    s.a = 1.0 / nu;
    s.set_bands();
    return s;
  }

  nlohmann::json to_json() const {
    return {{"n", n},         {"a", a},         {"p", p},           {"t", t},           {"M", M},
            {"l", l},         {"epsilon", epsilon}, {"delta", delta}, {"nu", nu},
            {"mode", to_string(mode)}, {"clamped", clamped}};
  }

  static FilterSchedule from_json(const nlohmann::json& j) {
    const std::string mode = j.at("mode").get<std::string>();
    FilterSchedule s = manual(j.at("n").get<std::size_t>(), j.at("p").get<int>(), j.at("t").get<int>(),
                              j.at("M").get<std::uint64_t>(), j.at("l").get<int>(), j.at("epsilon").get<double>(),
                              j.at("delta").get<double>(), j.at("nu").get<double>());
    s.a = j.at("a").get<double>();
    s.clamped = j.at("clamped").get<bool>();
    if (mode == "paper-formula")
      s.mode = ScheduleMode::paper_formula;
    else if (mode != "manual-override")
      throw DomainError("unknown schedule mode: " + mode);
    s.set_bands();
    return s;
  }

 private:
  static void check_common(std::size_t n, double delta, double nu, int l) {
    if (n < 1) throw DomainError("schedule needs n >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("schedule needs delta in (0, 1)");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("schedule needs nu > 0");
    if (l < 2) throw DomainError("schedule needs l >= 2");
  }

  void set_bands() {
    const double L = std::log(static_cast<double>(std::max<std::size_t>(n, 2)));
    const double K = std::log(std::pow(static_cast<double>(n), 3.0) / delta);
    double b = 1.0 / (2.0 * std::numbers::pi * std::pow(L, a));
    if (b > kMaxBandHalfWidth) {
      b = kMaxBandHalfWidth;
      clamped = true;
    }
    b_half_width = b;
    b_prime_half_width = b / std::sqrt(2.0 * std::max(K, 0.0) + 1.0);
  }
};

struct IterationTrace {
  std::uint64_t m = 0;
  double log_w0_norm = 0.0;  // log ||w0|| after p steps, before normalization
  int taylor_terms = 0;      // 0 when the exponential came from the oracle
  int squarings = 0;
  double perturbation_norm = 0.0;
  // Filled only when component tracking is requested.
  std::vector<double> eigenvalues;     // of the perturbed matrix
  std::vector<double> predicted_step;  // (1 + cos 2 pi m lambda_i) / 2
  std::vector<double> measured_step;   // |c_i|^2 ratio over the first step
  std::vector<double> measured_total;  // |c_i|^2 ratio over all p steps

  double w0_norm() const { return std::exp(log_w0_norm); }
};

struct IterationOptions {
  MultiplyStrategy strategy = MultiplyStrategy::blocked;
  bool exact_exponential = false;  // oracle exponential instead of Taylor
  bool track_components = false;   // oracle eigenbasis bookkeeping
  bool skip_perturbation = false;
  /// Perturb this matrix instead of the previous iterate.
  const HermitianInput* perturb_base = nullptr;
  std::optional<PrecisionBudget> budget;
  std::optional<std::uint64_t> forced_m;
};

struct IterationResult {
  HermitianInput a_next;
  ComplexVector v_next;
  IterationTrace trace;
};

inline constexpr double kUnderflowFloor = 1e-100;

struct Exponential {
  ComplexMatrix u;
  int terms = 0;
  int squarings = 0;
};

/// e^{2 pi i A} within `error`: Taylor series on A / 2^j followed by j
/// squarings, with j the least shift bringing 2 pi ||A|| / 2^j to 8 or below.
inline Exponential filter_unitary(const HermitianInput& a, double error, const IterationOptions& opt) {
  if (opt.exact_exponential) return {oracle_exp(a, kTwoPi), 0, 0};
  const PrecisionBudget* budget = opt.budget ? &*opt.budget : nullptr;
  int j = 0;
  while (kTwoPi * a.norm_bound() / std::ldexp(1.0, j) > kTaylorMaxScaledNorm) ++j;
  const double scale = kTwoPi / std::ldexp(1.0, j);
  const int terms = taylor_terms_for(error / std::ldexp(1.0, j), scale * a.norm_bound());
  Exponential e{taylor_exp(a, terms, scale, opt.strategy, budget), terms, j};
  for (int k = 0; k < j; ++k) {
    e.u = matmul(e.u, e.u, opt.strategy);
    if (budget) e.u = truncate(e.u, *budget);
  }
  return e;
}

namespace detail {

// p steps of v <- (v + phase * um v) / 2. v is rescaled to unit norm after
// every step; the return value is the log of the discarded scale. `first`
// receives the unscaled vector after step one when non-null.
inline double run_filter(const ComplexMatrix& um, ComplexVector& v, cplx phase, int p, const PrecisionBudget* budget,
                         ComplexVector* first = nullptr) {
  double log_norm = 0.0;
  for (int step = 0; step < p; ++step) {
    ComplexVector uv = um * v;
    if (phase != cplx(1.0, 0.0)) uv *= phase;
    v = filter_step(v, uv).first;
    if (step == 0 && first) *first = v;
    const double nv = v.norm();
    if (!(nv > 0.0)) return -std::numeric_limits<double>::infinity();
    log_norm += std::log(nv);
    v *= 1.0 / nv;
    if (budget) v = truncate(v, *budget);
  }
  return log_norm;
}

}  // namespace detail

/// Perturb, exponentiate, draw m in {1..M}, raise to the m-th power, filter
/// p times and normalize.
inline IterationResult inner_iteration(const HermitianInput& a_prev, const ComplexVector& v,
                                       const FilterSchedule& schedule, RngHandle& rng,
                                       const IterationOptions& opt = {}) {
  if (v.dim() != a_prev.dim()) throw ShapeError("inner_iteration: vector and matrix dimensions differ");
  const PrecisionBudget* budget = opt.budget ? &*opt.budget : nullptr;
  IterationResult out;
  if (opt.skip_perturbation)
    out.a_next = opt.perturb_base ? *opt.perturb_base : a_prev;
  else
    out.a_next = perturb(opt.perturb_base ? *opt.perturb_base : a_prev, schedule.perturbation(), rng);
  out.trace.perturbation_norm = out.a_next.perturbation_norm();

  const auto e = filter_unitary(out.a_next, schedule.exponential_error(), opt);
  out.trace.taylor_terms = e.terms;
  out.trace.squarings = e.squarings;
  const std::uint64_t m = opt.forced_m ? *opt.forced_m : rng.uniform_int(1, schedule.M);
  out.trace.m = m;
  const ComplexMatrix um = power_by_squaring(e.u, m, opt.strategy, budget);

  ComplexVector w = v;
  ComplexVector first;
  const double log_norm = detail::run_filter(um, w, 1.0, schedule.p, budget, opt.track_components ? &first : nullptr);
  out.trace.log_w0_norm = log_norm;
  if (!(log_norm >= std::log(kUnderflowFloor))) throw FilteredToZeroError(std::exp(log_norm));

  if (opt.track_components) {
    const auto eig = jacobi_eigh(out.a_next);
    const std::size_t n = eig.size();
    out.trace.eigenvalues = eig.eigenvalues;
    for (std::size_t i = 0; i < n; ++i) {
      const ComplexVector vi = eig.vector(i);
      const double c0 = std::norm(inner(vi, v));
      const double c1 = std::norm(inner(vi, first));
      const double cp = std::norm(inner(vi, w));
      const double x = frac(static_cast<double>(m) * frac(eig.eigenvalues[i]));
      out.trace.predicted_step.push_back(0.5 * (1.0 + std::cos(kTwoPi * x)));
      out.trace.measured_step.push_back(c0 > 0.0 ? c1 / c0 : 0.0);
      out.trace.measured_total.push_back(c0 > 0.0 ? std::exp(std::log(cp) + 2.0 * log_norm - std::log(c0)) : 0.0);
    }
  }
  out.v_next = std::move(w);
  return out;
}

}  // namespace phasefilter
