#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include <nlohmann/json.hpp>

#include "phasefilter/filter.hpp"

namespace phasefilter {

/// ||(v^dagger u0 v) v - u0 v||.
inline double residual(const ComplexVector& v, const ComplexMatrix& u0) {
  if (!u0.square() || u0.cols() != v.dim()) throw ShapeError("residual: dimension mismatch");
  // Only defined on unit vectors; anything else never passes.
  if (!(std::abs(v.norm() - 1.0) <= 1e-8)) return std::numeric_limits<double>::infinity();
  const ComplexVector uv = u0 * v;
  const cplx rq = inner(v, uv);
  ComplexVector r = rq * v;
  r -= uv;
  return r.norm();
}

inline constexpr double kMaxSamplerNorm = 4.0;

struct SamplerOptions {
  std::optional<std::size_t> max_restarts;  // default ceil(10 n^nu)
  bool reset_perturbation_on_restart = true;
  bool perturb_from_initial = false;  // every A_k from A_0 instead of A_{k-1}
  IterationOptions iteration;
  const EigenDecomposition* oracle = nullptr;  // enables matched_index
};

struct SampleOutcome {
  ComplexVector vector;
  double residual = 0.0;
  std::size_t restarts = 0;
  std::size_t iterations_used = 0;
  std::size_t filtered_to_zero = 0;
  std::optional<std::size_t> matched_index;
  std::optional<double> matched_distance;
  std::chrono::duration<double> wall_time{0.0};

  /// Timing is left out unless asked for, so equal seeds give equal JSON.
  nlohmann::json to_json(bool with_timing = false) const {
    nlohmann::json vec = nlohmann::json::array();
    for (const auto& z : vector.entries()) vec.push_back({z.real(), z.imag()});
    nlohmann::json j{{"vector", vec},
                     {"residual", residual},
                     {"restarts", restarts},
                     {"iterations_used", iterations_used},
                     {"filtered_to_zero", filtered_to_zero}};
    j["matched_index"] = matched_index ? nlohmann::json(*matched_index) : nlohmann::json(nullptr);
    j["matched_distance"] = matched_distance ? nlohmann::json(*matched_distance) : nlohmann::json(nullptr);
    if (with_timing) j["wall_time_s"] = wall_time.count();
    return j;
  }
};

inline std::size_t default_max_restarts(std::size_t n, double nu) {
  return static_cast<std::size_t>(std::ceil(10.0 * std::pow(static_cast<double>(n), nu)));
}

/// The reference unitary e^{2 pi i A_0} used by the acceptance test.
inline ComplexMatrix reference_unitary(const HermitianInput& a0, const FilterSchedule& schedule,
                                       const IterationOptions& opt) {
  const double err = std::min(schedule.exponential_error(), 1e-3 * schedule.delta);
  return filter_unitary(a0, std::max(err, 1e-15), opt).u;
}

inline void check_sampler_input(const HermitianInput& a) {
  if (a.norm_bound() > kMaxSamplerNorm) throw DomainError("sampler needs ||A|| <= 4");
  if (!(a.separation() > 0.0)) throw DomainError("sampler needs eigenvalue separation > 0");
}

/// Draws v0, then runs t filter iterations from v0 until the residual
/// against e^{2 pi i A_0} is at most delta. Every restart begins again from
/// the same v0.
inline SampleOutcome sample_eigenvector(const HermitianInput& a, const FilterSchedule& schedule, RngHandle& rng,
                                        const SamplerOptions& opt = {}) {
  const auto started = std::chrono::steady_clock::now();
  check_sampler_input(a);
  if (schedule.n != a.dim()) throw ShapeError("schedule n does not match the matrix");
  const std::size_t max_restarts = opt.max_restarts.value_or(default_max_restarts(a.dim(), schedule.nu));

  const ComplexMatrix u0 = reference_unitary(a, schedule, opt.iteration);
  const ComplexVector v0 = haar_unit_vector(a.dim(), rng);

  IterationOptions it = opt.iteration;
  if (opt.perturb_from_initial) it.perturb_base = &a;

  SampleOutcome out;
  double best = std::numeric_limits<double>::infinity();
  HermitianInput current = a;
  for (std::size_t attempt = 0; attempt <= max_restarts; ++attempt) {
    if (opt.reset_perturbation_on_restart) current = a;
    ComplexVector v = v0;
    bool dead = false;
    for (int k = 0; k < schedule.t; ++k) {
      ++out.iterations_used;
      try {
        auto r = inner_iteration(current, v, schedule, rng, it);
        current = std::move(r.a_next);
        v = std::move(r.v_next);
      } catch (const FilteredToZeroError&) {
        ++out.filtered_to_zero;
        dead = true;
        break;
      }
    }
    if (dead) continue;
    const double res = residual(v, u0);
    best = std::min(best, res);
    if (res <= schedule.delta) {
      out.vector = std::move(v);
      out.residual = res;
      out.restarts = attempt;
      if (opt.oracle) {
        const auto [idx, dist] = nearest_eigenvector(out.vector, *opt.oracle);
        out.matched_index = idx;
        out.matched_distance = dist;
      }
      out.wall_time = std::chrono::steady_clock::now() - started;
      return out;
    }
  }
  throw NonConvergenceError("sampler exceeded " + std::to_string(max_restarts) + " restarts", best);
}

}  // namespace phasefilter
