#include <gtest/gtest.h>

#include "test_support.hpp"

namespace pf = phasefilter;
using namespace testing_support;
using pf::cplx;

namespace {

const pf::FilterSchedule kTwoLevel = pf::FilterSchedule::manual(2, 200, 3, 10007, 2, 1e-3, 1e-3, 1.0);

}  // namespace

TEST(Residual, ExactEigenvectorIsZero) {
  pf::RngHandle rng(51);
  const auto a = pf::generate_matrix(6, pf::separated_spectrum(6, 0.05, rng), rng);
  const auto e = pf::jacobi_eigh(a);
  const auto u0 = pf::oracle_exp(a, pf::kTwoPi);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_LE(pf::residual(e.vector(k), u0), 1e-12);
}

TEST(Residual, BalancedSuperpositionOfOppositePhases) {
  const auto u0 = pf::oracle_exp(diag({0.0, 0.5}), pf::kTwoPi);  // eigenvalues 1 and -1
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(pf::residual(pf::ComplexVector{r, r}, u0), 1.0, 1e-12);
}

TEST(Residual, PhaseInvariant) {
  pf::RngHandle rng(52);
  const auto a = pf::generate_matrix(5, pf::separated_spectrum(5, 0.05, rng), rng);
  const auto u0 = pf::oracle_exp(a, pf::kTwoPi);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = pf::haar_unit_vector(5, rng);
    EXPECT_NEAR(pf::residual(std::polar(1.0, rng.uniform() * 6.3) * v, u0), pf::residual(v, u0), 1e-14);
  }
  EXPECT_THROW(pf::residual(pf::ComplexVector(4), u0), pf::ShapeError);
}

TEST(Sampler, TwoLevelDiagonalAlwaysFindsABasisVector) {
  const auto a = pf::HermitianInput::validate(diag({0.1, 0.7}));
  std::vector<int> seen(2, 0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    pf::RngHandle rng(seed);
    const auto out = pf::sample_eigenvector(a, kTwoLevel, rng);
    EXPECT_LE(out.residual, kTwoLevel.delta);
    EXPECT_NEAR(out.vector.norm(), 1.0, 1e-12);
    const double d0 = pf::phase_distance(out.vector, pf::ComplexVector::basis(2, 0));
    const double d1 = pf::phase_distance(out.vector, pf::ComplexVector::basis(2, 1));
    EXPECT_LE(std::min(d0, d1), kTwoLevel.delta);
    ++seen[d0 < d1 ? 0 : 1];
  }
  EXPECT_GT(seen[0], 0);
  EXPECT_GT(seen[1], 0);
}

TEST(Sampler, RejectsRepeatedEigenvalue) {
  const auto a = pf::HermitianInput::validate(diag({0.3, 0.3}));
  pf::RngHandle rng(53);
  EXPECT_THROW(pf::sample_eigenvector(a, kTwoLevel, rng), pf::DomainError);
}

TEST(Sampler, RejectsLargeNormAndShapeMismatch) {
  const auto big = pf::HermitianInput::validate(diag({0.1, 4.5}));
  pf::RngHandle rng(54);
  EXPECT_THROW(pf::sample_eigenvector(big, kTwoLevel, rng), pf::DomainError);
  const auto three = pf::HermitianInput::validate(diag({0.1, 0.4, 0.7}));
  EXPECT_THROW(pf::sample_eigenvector(three, kTwoLevel, rng), pf::ShapeError);
}

TEST(Sampler, NonConvergenceCarriesBestResidual) {
  const auto a = pf::HermitianInput::validate(diag({0.1, 0.7}));
  const auto weak = pf::FilterSchedule::manual(2, 1, 1, 10007, 2, 1e-3, 1e-9, 1.0);
  pf::RngHandle rng(55);
  pf::SamplerOptions opt;
  opt.max_restarts = 3;
  try {
    pf::sample_eigenvector(a, weak, rng, opt);
    FAIL() << "expected non-convergence";
  } catch (const pf::NonConvergenceError& e) {
    EXPECT_GT(e.best_residual(), weak.delta);
    EXPECT_LT(e.best_residual(), 2.0);
  }
}

TEST(Sampler, SoundOnRandomSeparatedMatrices) {
  pf::RngHandle g(56);
  const auto sched = pf::FilterSchedule::manual(6, 30000, 1, 1000003, 2, 1e-4, 1e-3, 1.0);
  for (int m = 0; m < 5; ++m) {
    const auto a = pf::generate_matrix(6, pf::separated_spectrum(6, 0.05, g), g);
    const auto truth = pf::jacobi_eigh(a);
    // Minimal eigenphase gap of U0.
    const double gap = a.separation();
    pf::SamplerOptions opt;
    opt.oracle = &truth;
    for (int s = 0; s < 10; ++s) {
      pf::RngHandle rng(1000 + m, s);
      const auto out = pf::sample_eigenvector(a, sched, rng, opt);
      EXPECT_LE(out.residual, sched.delta);
      EXPECT_LE(*out.matched_distance, 4.0 / gap * sched.delta);
    }
  }
}

TEST(Sampler, DeterministicForSeed) {
  pf::RngHandle g(57);
  const auto a = pf::generate_matrix(4, pf::separated_spectrum(4, 0.05, g), g);
  const auto sched = pf::FilterSchedule::manual(4, 2000, 2, 100003, 2, 1e-3, 1e-3, 1.0);
  pf::RngHandle r1(9), r2(9);
  EXPECT_EQ(pf::sample_eigenvector(a, sched, r1).to_json(), pf::sample_eigenvector(a, sched, r2).to_json());
}

TEST(Sampler, RestartOptionsRun) {
  pf::RngHandle g(58);
  const auto a = pf::generate_matrix(4, pf::separated_spectrum(4, 0.05, g), g);
  const auto sched = pf::FilterSchedule::manual(4, 2000, 2, 100003, 2, 1e-3, 1e-3, 1.0);
  pf::SamplerOptions cumulative;
  cumulative.reset_perturbation_on_restart = false;
  pf::SamplerOptions from_initial;
  from_initial.perturb_from_initial = true;
  for (const auto& opt : {cumulative, from_initial}) {
    pf::RngHandle rng(3);
    EXPECT_LE(pf::sample_eigenvector(a, sched, rng, opt).residual, sched.delta);
  }
}

TEST(Sampler, DefaultRestartLimit) {
  EXPECT_EQ(pf::default_max_restarts(8, 1.0), 80u);
  EXPECT_EQ(pf::default_max_restarts(8, 0.5), 29u);
}
