#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "phasefilter/filter.hpp"
#include "phasefilter/sampler.hpp"

namespace phasefilter {

/// n copies of one random vector, column k carrying the grid phase
/// theta_k = m_k / M. The phases are stored as integers.
struct PhaseBatch {
  ComplexVector v0;
  std::vector<std::uint64_t> theta_numerators;
  std::uint64_t M = 1;
  ComplexMatrix V;
  std::vector<char> dead;
  HermitianInput current;  // the perturbed matrix of the latest round

  std::size_t columns() const noexcept { return theta_numerators.size(); }
  double theta(std::size_t k) const { return static_cast<double>(theta_numerators[k]) / static_cast<double>(M); }

  /// Phase of column k in D^m: e^{2 pi i (m m_k mod M) / M}.
  cplx phase(std::size_t k, std::uint64_t m) const {
    const auto r = static_cast<std::uint64_t>(static_cast<unsigned __int128>(m) * theta_numerators[k] % M);
    return std::polar(1.0, kTwoPi * static_cast<double>(r) / static_cast<double>(M));
  }

  static PhaseBatch with_thetas(const HermitianInput& a0, ComplexVector v0, std::vector<std::uint64_t> numerators,
                                std::uint64_t M) {
    if (M < 1) throw DomainError("PhaseBatch needs M >= 1");
    if (v0.dim() != a0.dim()) throw ShapeError("PhaseBatch: v0 dimension differs from the matrix");
    PhaseBatch b;
    b.M = M;
    for (auto& m : numerators) m %= M;
    b.theta_numerators = std::move(numerators);
    b.V = ComplexMatrix(v0.dim(), b.theta_numerators.size());
    for (std::size_t k = 0; k < b.columns(); ++k) b.V.set_column(k, v0);
    b.dead.assign(b.columns(), 0);
    b.v0 = std::move(v0);
    b.current = a0;
    return b;
  }

  /// Haar v0 and n phases uniform on the grid {0, 1/M, ..., (M-1)/M}.
  static PhaseBatch fresh(const HermitianInput& a0, std::uint64_t M, RngHandle& rng) {
    ComplexVector v0 = haar_unit_vector(a0.dim(), rng);
    std::vector<std::uint64_t> num(a0.dim());
    for (auto& m : num) m = rng.uniform_int(0, M - 1);
    return with_thetas(a0, std::move(v0), std::move(num), M);
  }
};

struct BatchTrace {
  std::uint64_t m = 0;
  std::vector<double> log_norms;  // per column, log of the discarded scale
};

/// One outer iteration for every column: a shared perturbation, exponential
/// and power m, with only D^m differing between columns.
inline PhaseBatch batch_filter_round(const HermitianInput& a0, PhaseBatch batch, const FilterSchedule& schedule,
                                     RngHandle& rng, const IterationOptions& opt = {}, BatchTrace* trace = nullptr) {
  if (batch.V.rows() != a0.dim()) throw ShapeError("batch_filter_round: batch and matrix dimensions differ");
  const PrecisionBudget* budget = opt.budget ? &*opt.budget : nullptr;
  const HermitianInput& base = opt.perturb_base ? *opt.perturb_base : batch.current;
  if (opt.skip_perturbation)
    batch.current = base;
  else
    batch.current = perturb(base, schedule.perturbation(), rng);
  const auto e = filter_unitary(batch.current, schedule.exponential_error(), opt);
  const std::uint64_t m = opt.forced_m ? *opt.forced_m : rng.uniform_int(1, schedule.M);
  const ComplexMatrix um = power_by_squaring(e.u, m, opt.strategy, budget);

  if (trace) {
    trace->m = m;
    trace->log_norms.assign(batch.columns(), 0.0);
  }
  for (std::size_t k = 0; k < batch.columns(); ++k) {
    if (batch.dead[k]) continue;
    ComplexVector v = batch.V.column(k);
    const double log_norm = detail::run_filter(um, v, batch.phase(k, m), schedule.p, budget);
    if (!(log_norm >= std::log(kUnderflowFloor))) {
      batch.dead[k] = 1;
      continue;
    }
    if (trace) trace->log_norms[k] = log_norm;
    batch.V.set_column(k, v);
  }
  return batch;
}

struct HarvestedColumn {
  std::size_t column;
  double residual;
};

/// Live columns whose residual against u0 is at most delta.
inline std::vector<HarvestedColumn> passing_columns(const PhaseBatch& batch, const ComplexMatrix& u0, double delta) {
  std::vector<HarvestedColumn> out;
  for (std::size_t k = 0; k < batch.columns(); ++k) {
    if (batch.dead[k]) continue;
    const double r = residual(batch.V.column(k), u0);
    if (r <= delta) out.push_back({k, r});
  }
  return out;
}

/// Passing columns, minus those within 2 delta (up to phase) of a vector in
/// `collected` or of an earlier column of this harvest.
inline std::vector<ComplexVector> harvest(const PhaseBatch& batch, const ComplexMatrix& u0, double delta,
                                          std::span<const ComplexVector> collected = {}) {
  std::vector<ComplexVector> out;
  for (const auto& h : passing_columns(batch, u0, delta)) {
    ComplexVector v = batch.V.column(h.column);
    bool dup = false;
    for (const auto& w : collected) dup = dup || phase_distance(v, w) <= 2.0 * delta;
    for (const auto& w : out) dup = dup || phase_distance(v, w) <= 2.0 * delta;
    if (!dup) out.push_back(std::move(v));
  }
  return out;
}

struct DiagOptions {
  IterationOptions iteration;
  const EigenDecomposition* oracle = nullptr;  // enables matching and round records
};

struct RoundRecord {
  std::vector<int> column_hits;  // oracle index per column when it passed, else -1
};

struct DiagOutcome {
  std::vector<ComplexVector> eigenvectors;
  std::vector<double> residuals;
  std::vector<bool> matched;  // per oracle index, test mode
  std::size_t outer_rounds = 0;
  std::size_t total_filter_iterations = 0;
  std::size_t conflicts = 0;
  bool converged = false;
  std::vector<RoundRecord> rounds;  // test mode
  std::optional<MatchReport> matching;
  std::chrono::duration<double> wall_time{0.0};

  nlohmann::json to_json(bool with_timing = false) const {
    nlohmann::json vecs = nlohmann::json::array();
    for (const auto& v : eigenvectors) {
      nlohmann::json e = nlohmann::json::array();
      for (const auto& z : v.entries()) e.push_back({z.real(), z.imag()});
      vecs.push_back(e);
    }
    nlohmann::json j{{"eigenvectors", vecs},
                     {"residuals", residuals},
                     {"outer_rounds", outer_rounds},
                     {"total_filter_iterations", total_filter_iterations},
                     {"conflicts", conflicts},
                     {"converged", converged}};
    if (!matched.empty()) j["matched"] = matched;
    if (matching) {
      j["max_match_distance"] = matching->max_distance;
      j["perfect_matching"] = matching->unmatched_candidates.empty() && matching->duplicated_targets.empty() &&
                              matching->pairs.size() == matched.size();
    }
    if (with_timing) j["wall_time_s"] = wall_time.count();
    return j;
  }
};

/// Fresh v0 and phases each outer round, t batch rounds, then harvest,
/// until n near-orthogonal eigenvectors are collected. A harvested vector
/// that overlaps a collected one by more than 2 delta + 2 epsilon replaces
/// it only when its residual is lower.
inline DiagOutcome diagonalize(const HermitianInput& a, const FilterSchedule& schedule, RngHandle& rng,
                               std::size_t max_outer, const DiagOptions& opt = {}) {
  const auto started = std::chrono::steady_clock::now();
  check_sampler_input(a);
  const std::size_t n = a.dim();
  if (n < 2) throw DomainError("diagonalize needs n >= 2");
  if (schedule.n != n) throw ShapeError("schedule n does not match the matrix");
  const ComplexMatrix u0 = reference_unitary(a, schedule, opt.iteration);
  const double overlap_limit = 2.0 * schedule.delta + 2.0 * schedule.epsilon;

  DiagOutcome out;
  while (out.outer_rounds < max_outer && out.eigenvectors.size() < n) {
    ++out.outer_rounds;
    PhaseBatch batch = PhaseBatch::fresh(a, schedule.M, rng);
    for (int k = 0; k < schedule.t; ++k) {
      batch = batch_filter_round(a, std::move(batch), schedule, rng, opt.iteration);
      ++out.total_filter_iterations;
    }
    if (opt.oracle) {
      RoundRecord rec;
      rec.column_hits.assign(batch.columns(), -1);
      for (const auto& h : passing_columns(batch, u0, schedule.delta))
        rec.column_hits[h.column] = static_cast<int>(nearest_eigenvector(batch.V.column(h.column), *opt.oracle).first);
      out.rounds.push_back(std::move(rec));
    }
    for (auto& v : harvest(batch, u0, schedule.delta, out.eigenvectors)) {
      const double r = residual(v, u0);
      std::optional<std::size_t> clash;
      for (std::size_t i = 0; i < out.eigenvectors.size() && !clash; ++i)
        if (std::abs(inner(v, out.eigenvectors[i])) > overlap_limit) clash = i;
      if (!clash) {
        out.eigenvectors.push_back(std::move(v));
        out.residuals.push_back(r);
        continue;
      }
      ++out.conflicts;
      if (r < out.residuals[*clash]) {
        out.eigenvectors[*clash] = std::move(v);
        out.residuals[*clash] = r;
      }
    }
  }
  out.converged = out.eigenvectors.size() == n;
  if (opt.oracle) {
    out.matched.assign(opt.oracle->size(), false);
    out.matching = match_eigenvectors(out.eigenvectors, *opt.oracle);
    for (const auto& p : out.matching->pairs)
      if (p.distance <= schedule.delta) out.matched[p.target] = true;
  }
  out.wall_time = std::chrono::steady_clock::now() - started;
  return out;
}

}  // namespace phasefilter
