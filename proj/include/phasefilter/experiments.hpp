#pragma once

// Experiment drivers shared by the CLI and the acceptance suite. Reports are
// plain JSON; wall-clock fields are opt-in so reruns compare equal.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "phasefilter/diagonalizer.hpp"
#include "phasefilter/sampler.hpp"

namespace phasefilter {

inline constexpr const char* kVersion = "0.1.0";

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots; the first exception is rethrown.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Columns of a Haar-random unitary: Gram-Schmidt (applied twice) on Haar
/// vectors.
inline ComplexMatrix haar_unitary(std::size_t n, RngHandle& rng) {
  std::vector<ComplexVector> cols;
  while (cols.size() < n) {
    ComplexVector v = haar_unit_vector(n, rng);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : cols) v -= inner(q, v) * q;
    if (v.norm() < 1e-8) continue;
    cols.push_back(v.normalized());
  }
  return ComplexMatrix::from_columns(cols);
}

/// Q diag(spectrum) Q^dagger with Haar-random Q (Q = I on request).
inline HermitianInput generate_matrix(std::size_t n, std::span<const double> spectrum, RngHandle& rng,
                                      bool identity_q = false) {
  if (n == 0) throw DomainError("generate_matrix needs n >= 1");
  if (spectrum.size() != n) throw ShapeError("spectrum length must equal n");
  for (double l : spectrum)
    if (!(l >= 0.0 && l < 1.0)) throw DomainError("spectrum values must lie in [0, 1)");
  const double sep = measure_separation(spectrum);
  if (n > 1 && !(sep > 0.0)) throw DomainError("spectrum has a zero circular gap");

  const ComplexMatrix q = identity_q ? ComplexMatrix::identity(n) : haar_unitary(n, rng);
  ComplexMatrix scaled = q;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t r = 0; r < n; ++r) scaled(r, k) *= spectrum[k];
  ComplexMatrix a = matmul(scaled, q.adjoint(), MultiplyStrategy::naive);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = a(i, i).real();
    for (std::size_t j = i + 1; j < n; ++j) a(j, i) = std::conj(a(i, j));
  }
  return HermitianInput::validate(std::move(a), sep);
}

/// n eigenvalues in [0, 1) with every circular gap at least min_gap, drawn
/// by jittering an evenly spaced grid.
inline std::vector<double> separated_spectrum(std::size_t n, double min_gap, RngHandle& rng) {
  const double slot = 1.0 / static_cast<double>(n);
  if (min_gap >= slot) throw DomainError("min_gap too large for n eigenvalues");
  const double offset = rng.uniform();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = frac(offset + k * slot + rng.uniform() * (slot - min_gap));
  std::sort(out.begin(), out.end());
  return out;
}

struct FrequencyOptions {
  std::size_t threads = 1;
  SamplerOptions sampler;
  bool with_timing = false;
};

/// Runs the sampler `trials` times on independent streams and histograms
/// the matched oracle indices.
inline nlohmann::json frequency_experiment(const HermitianInput& a, const FilterSchedule& schedule, std::size_t trials,
                                           RngHandle& rng, const FrequencyOptions& opt = {}) {
  const std::size_t n = a.dim();
  if (n > 32) throw ScaleError("frequency_experiment needs n <= 32");
  const auto truth = jacobi_eigh(a);
  const std::uint64_t root = rng.next_u64();

  struct Trial {
    bool ok = false;
    SampleOutcome outcome;
    double best_residual = 0.0;
  };
  std::vector<Trial> results(trials);
  parallel_for(trials, opt.threads, [&](std::size_t i) {
    RngHandle trial_rng(root, i);
    SamplerOptions so = opt.sampler;
    so.oracle = &truth;
    try {
      results[i].outcome = sample_eigenvector(a, schedule, trial_rng, so);
      results[i].ok = true;
    } catch (const NonConvergenceError& e) {
      results[i].best_residual = e.best_residual();
    }
  });

  std::vector<std::size_t> hist(n, 0);
  std::vector<double> residuals;
  nlohmann::json records = nlohmann::json::array();
  std::size_t successes = 0;
  double wall = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto& t = results[i];
    nlohmann::json r{{"trial", i}, {"converged", t.ok}};
    if (t.ok) {
      ++successes;
      ++hist[*t.outcome.matched_index];
      residuals.push_back(t.outcome.residual);
      r["matched_index"] = *t.outcome.matched_index;
      r["distance"] = *t.outcome.matched_distance;
      r["residual"] = t.outcome.residual;
      r["restarts"] = t.outcome.restarts;
      wall += t.outcome.wall_time.count();
    } else {
      r["best_residual"] = t.best_residual;
    }
    records.push_back(r);
  }
  std::vector<double> freq(n, 0.0);
  double chi2 = 0.0;
  if (successes > 0) {
    const double expected = static_cast<double>(successes) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      freq[k] = static_cast<double>(hist[k]) / static_cast<double>(successes);
      chi2 += (hist[k] - expected) * (hist[k] - expected) / expected;
    }
  }
  std::sort(residuals.begin(), residuals.end());
  auto quantile = [&](double q) -> nlohmann::json {
    if (residuals.empty()) return nullptr;
    return residuals[static_cast<std::size_t>(q * static_cast<double>(residuals.size() - 1))];
  };
  nlohmann::json rep{{"kind", "frequency"},
                     {"version", kVersion},
                     {"seed", rng.seed()},
                     {"stream", rng.stream()},
                     {"schedule", schedule.to_json()},
                     {"trials", trials},
                     {"successes", successes},
                     {"failures", trials - successes},
                     {"histogram", hist},
                     {"frequencies", freq},
                     {"chi_square", chi2},
                     {"residual_quantiles", {{"p50", quantile(0.5)}, {"p90", quantile(0.9)}, {"max", quantile(1.0)}}},
                     {"records", records}};
  rep["min_frequency"] = successes ? *std::min_element(freq.begin(), freq.end()) : 0.0;
  rep["max_frequency"] = successes ? *std::max_element(freq.begin(), freq.end()) : 0.0;
  if (opt.with_timing) rep["wall_time_s"] = wall;
  return rep;
}

/// Block-diagonal A with one eigenvalue pair eps_gap apart across the two
/// blocks and every other gap at least sqrt(eps_gap). The sampler runs with
/// delta = sqrt(eps_gap) / 10; well-separated eigenvectors are expected
/// within 10 delta, the close pair is only recorded.
inline nlohmann::json demmel_case_study(double eps_gap, std::size_t n, RngHandle& rng, std::size_t trials = 0,
                                        std::size_t threads = 1) {
  if (!(eps_gap >= 1e-6 && eps_gap < 0.01)) throw DomainError("demmel_case_study needs 1e-6 <= eps_gap < 0.01");
  if (n < 4 || n % 2 != 0) throw DomainError("demmel_case_study needs even n >= 4");
  const double slot = 1.0 / static_cast<double>(n);
  if (slot < std::sqrt(eps_gap)) throw DomainError("n too large for gaps of sqrt(eps_gap)");
  if (trials == 0) trials = 16 * n;

  // n - 1 grid values; the first one appears in both blocks, shifted by eps_gap in the second.
  std::vector<double> grid(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) grid[k] = (static_cast<double>(k) + 0.5) * slot;
  const std::size_t h = n / 2;
  std::vector<double> block1{grid[0]}, block2{grid[0] + eps_gap};
  for (std::size_t k = 1; k + 1 < n; ++k) (k % 2 ? block2 : block1).push_back(grid[k]);
  while (block1.size() > h) {
    block2.push_back(block1.back());
    block1.pop_back();
  }
  while (block2.size() > h) {
    block1.push_back(block2.back());
    block2.pop_back();
  }

  const ComplexMatrix q1 = haar_unitary(h, rng), q2 = haar_unitary(h, rng);
  ComplexMatrix q(n, n);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < h; ++c) {
      q(r, c) = q1(r, c);
      q(h + r, h + c) = q2(r, c);
    }
  std::vector<double> spectrum = block1;
  spectrum.insert(spectrum.end(), block2.begin(), block2.end());
  ComplexMatrix scaled = q;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t r = 0; r < n; ++r) scaled(r, k) *= spectrum[k];
  ComplexMatrix a = matmul(scaled, q.adjoint(), MultiplyStrategy::naive);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = a(i, i).real();
    for (std::size_t j = i + 1; j < n; ++j) a(j, i) = std::conj(a(i, j));
  }
  const HermitianInput input = HermitianInput::validate(std::move(a), measure_separation(spectrum));
  const auto truth = jacobi_eigh(input);

  const double delta = std::sqrt(eps_gap) / 10.0;
  const auto schedule = FilterSchedule::manual(n, 30000, 1, 1000003, 2, std::min(1e-4, eps_gap), delta, 1.0);

  // Eigenvalue gap of each oracle eigenvector to its nearest neighbour.
  std::vector<double> gap(n, 0.5);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) gap[i] = std::min(gap[i], circular_distance(truth.eigenvalues[i], truth.eigenvalues[j]));
  std::vector<bool> close(n);
  for (std::size_t i = 0; i < n; ++i) close[i] = gap[i] < std::sqrt(eps_gap);

  const std::uint64_t root = rng.next_u64();
  std::vector<std::optional<SampleOutcome>> results(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    RngHandle trial_rng(root, i);
    SamplerOptions so;
    so.oracle = &truth;
    try {
      results[i] = sample_eigenvector(input, schedule, trial_rng, so);
    } catch (const NonConvergenceError&) {
    }
  });

  std::vector<std::size_t> hits(n, 0);
  std::vector<double> worst(n, 0.0), best(n, 2.0);
  std::size_t failures = 0;
  for (const auto& r : results) {
    if (!r) {
      ++failures;
      continue;
    }
    const std::size_t k = *r->matched_index;
    ++hits[k];
    worst[k] = std::max(worst[k], *r->matched_distance);
    best[k] = std::min(best[k], *r->matched_distance);
  }
  nlohmann::json per = nlohmann::json::array();
  bool well_separated_ok = true;
  for (std::size_t k = 0; k < n; ++k) {
    nlohmann::json e{{"index", k},   {"eigenvalue", truth.eigenvalues[k]}, {"gap", gap[k]}, {"close_pair", static_cast<bool>(close[k])},
                     {"samples", hits[k]}};
    if (hits[k]) {
      e["max_distance"] = worst[k];
      e["min_distance"] = best[k];
    } else {
      e["max_distance"] = nullptr;
      e["min_distance"] = nullptr;
    }
    if (!close[k]) well_separated_ok = well_separated_ok && hits[k] > 0 && worst[k] <= 10.0 * delta;
    per.push_back(e);
  }
  return {{"kind", "demmel"},
          {"version", kVersion},
          {"seed", rng.seed()},
          {"stream", rng.stream()},
          {"eps_gap", eps_gap},
          {"n", n},
          {"delta", delta},
          {"measured_separation", measure_separation(spectrum)},
          {"schedule", schedule.to_json()},
          {"trials", trials},
          {"failures", failures},
          {"eigenvectors", per},
          {"well_separated_within_10_delta", well_separated_ok}};
}

}  // namespace phasefilter
