#include <gtest/gtest.h>

#include "test_support.hpp"

namespace pf = phasefilter;
using namespace testing_support;
using pf::cplx;

namespace {

pf::IterationOptions exact_fixed(std::uint64_t m) {
  pf::IterationOptions o;
  o.exact_exponential = true;
  o.skip_perturbation = true;
  o.forced_m = m;
  return o;
}

}  // namespace

TEST(PhaseBatch, GridPhases) {
  const auto a = pf::HermitianInput::validate(diag({0.1, 0.7}));
  pf::RngHandle rng(61);
  const auto b = pf::PhaseBatch::fresh(a, 1000003, rng);
  EXPECT_EQ(b.columns(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_LT(b.theta_numerators[k], 1000003u);
    EXPECT_NEAR(b.V.column(k).norm(), 1.0, 1e-12);
    EXPECT_EQ(b.V.column(k), b.v0);
  }
  // Integer phase arithmetic: (m * m_k mod M) / M.
  const auto c = pf::PhaseBatch::with_thetas(a, b.v0, {3}, 10);
  EXPECT_NEAR(std::abs(c.phase(0, 7) - std::polar(1.0, pf::kTwoPi * 0.1)), 0.0, 1e-15);
  EXPECT_THROW(pf::PhaseBatch::with_thetas(a, pf::ComplexVector(3), {0}, 10), pf::ShapeError);
}

TEST(BatchRound, ZeroPhasesMatchInnerIteration) {
  pf::RngHandle g(62);
  const auto a = pf::generate_matrix(4, pf::separated_spectrum(4, 0.05, g), g);
  const auto sched = pf::FilterSchedule::manual(4, 50, 1, 10007, 2, 1e-2, 1e-3, 1.0);
  const auto v0 = pf::haar_unit_vector(4, g);
  auto batch = pf::PhaseBatch::with_thetas(a, v0, {0, 0, 0}, sched.M);
  pf::RngHandle r1(5), r2(5);
  batch = pf::batch_filter_round(a, std::move(batch), sched, r1);
  const auto it = pf::inner_iteration(a, v0, sched, r2);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(batch.V.column(k), it.v_next);
  EXPECT_EQ(batch.current.matrix(), it.a_next.matrix());
}

TEST(BatchRound, ColumnPhaseCancelsEigenphase) {
  const auto a = pf::HermitianInput::validate(diag({0.5, 0.2}));
  auto batch = pf::PhaseBatch::with_thetas(a, pf::ComplexVector::basis(2, 0), {500}, 1000);  // theta = 0.5
  const auto sched = pf::FilterSchedule::manual(2, 30, 1, 1000, 2, 1e-3, 1e-3, 1.0);
  pf::RngHandle rng(63);
  pf::BatchTrace trace;
  batch = pf::batch_filter_round(a, std::move(batch), sched, rng, exact_fixed(1), &trace);
  EXPECT_EQ(trace.m, 1u);
  EXPECT_NEAR(trace.log_norms[0], 0.0, 1e-12);
  EXPECT_NEAR(pf::phase_distance(batch.V.column(0), pf::ComplexVector::basis(2, 0)), 0.0, 1e-12);
}

TEST(BatchRound, PhaseShiftLaw) {
  pf::RngHandle rng(64);
  const std::vector<double> l{0.13, 0.42, 0.77};
  const auto a = pf::HermitianInput::trusted(diag(l), 1.0, 0.29);
  const std::uint64_t M = 997;
  const auto sched = pf::FilterSchedule::manual(3, 1, 1, M, 2, 1e-3, 1e-3, 1.0);
  const auto v0 = pf::haar_unit_vector(3, rng);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint64_t> num{rng.uniform_int(0, M - 1), rng.uniform_int(0, M - 1)};
    const std::uint64_t m = rng.uniform_int(1, M);
    auto batch = pf::PhaseBatch::with_thetas(a, v0, num, M);
    pf::BatchTrace trace;
    batch = pf::batch_filter_round(a, std::move(batch), sched, rng, exact_fixed(m), &trace);
    for (std::size_t k = 0; k < 2; ++k) {
      const double scale2 = std::exp(2.0 * trace.log_norms[k]);
      for (std::size_t i = 0; i < 3; ++i) {
        const double x = pf::frac(m * l[i] + static_cast<double>(m * num[k] % M) / M);
        const double measured = std::norm(batch.V(i, k)) * scale2 / std::norm(v0[i]);
        EXPECT_NEAR(measured, pf::predicted_attenuation(x, 1), 1e-9);
      }
    }
  }
}

TEST(BatchRound, DeadColumnsAreFlagged) {
  const auto a = pf::HermitianInput::validate(diag({0.25, 0.375}));
  auto batch = pf::PhaseBatch::with_thetas(a, pf::ComplexVector::basis(2, 1), {0, 1}, 8);
  const auto sched = pf::FilterSchedule::manual(2, 10, 1, 8, 2, 1e-3, 1e-3, 1.0);
  pf::RngHandle rng(65);
  batch = pf::batch_filter_round(a, std::move(batch), sched, rng, exact_fixed(4));
  // Column 0 sees eigenphase 1/2 and dies; column 1 sees 1/2 + 4/8 = 0.
  EXPECT_EQ(batch.dead[0], 1);
  EXPECT_EQ(batch.dead[1], 0);
}

TEST(Harvest, ExactEigenvectorsAllReturned) {
  pf::RngHandle g(66);
  const auto a = pf::generate_matrix(5, pf::separated_spectrum(5, 0.05, g), g);
  const auto e = pf::jacobi_eigh(a);
  auto batch = pf::PhaseBatch::with_thetas(a, e.vector(0), {0, 0, 0, 0, 0}, 11);
  batch.V = e.eigenvectors;
  const auto u0 = pf::oracle_exp(a, pf::kTwoPi);
  EXPECT_EQ(pf::harvest(batch, u0, 1e-6).size(), 5u);
}

TEST(Harvest, MixedColumnsRejected) {
  const auto a = pf::HermitianInput::validate(diag({0.1, 0.7}));
  const double r = 1.0 / std::sqrt(2.0);
  const auto batch = pf::PhaseBatch::with_thetas(a, pf::ComplexVector{r, r}, {0, 3}, 11);
  EXPECT_TRUE(pf::harvest(batch, pf::oracle_exp(a, pf::kTwoPi), 1e-3).empty());
}

TEST(Harvest, DuplicatesDropped) {
  const auto a = pf::HermitianInput::validate(diag({0.1, 0.7}));
  const auto e0 = pf::ComplexVector::basis(2, 0);
  auto batch = pf::PhaseBatch::with_thetas(a, e0, {0, 3, 5}, 11);
  batch.V.set_column(1, cplx(0.0, 1.0) * e0);
  batch.V.set_column(2, pf::ComplexVector::basis(2, 1));
  const auto u0 = pf::oracle_exp(a, pf::kTwoPi);
  EXPECT_EQ(pf::harvest(batch, u0, 1e-3).size(), 2u);
  const std::vector<pf::ComplexVector> have{e0};
  const auto more = pf::harvest(batch, u0, 1e-3, have);
  ASSERT_EQ(more.size(), 1u);
  EXPECT_EQ(more[0], pf::ComplexVector::basis(2, 1));
}

TEST(Diagonalize, TwoLevelDiagonal) {
  const auto a = pf::HermitianInput::validate(diag({0.1, 0.7}));
  const auto sched = pf::FilterSchedule::manual(2, 200, 3, 10007, 2, 1e-3, 1e-3, 1.0);
  const auto truth = pf::jacobi_eigh(a);
  pf::DiagOptions opt;
  opt.oracle = &truth;
  pf::RngHandle rng(67);
  const auto out = pf::diagonalize(a, sched, rng, 20, opt);
  EXPECT_TRUE(out.converged);
  EXPECT_LE(out.outer_rounds, 5u);
  EXPECT_TRUE(out.matching->perfect(2, sched.delta));
  EXPECT_EQ(out.matched, (std::vector<bool>{true, true}));
}

TEST(Diagonalize, RandomMatrixInvariants) {
  pf::RngHandle g(68);
  const auto a = pf::generate_matrix(6, pf::separated_spectrum(6, 0.05, g), g);
  const auto sched = pf::FilterSchedule::manual(6, 30000, 1, 1000003, 2, 1e-4, 1e-3, 1.0);
  pf::RngHandle rng(69);
  const auto out = pf::diagonalize(a, sched, rng, 100);
  ASSERT_TRUE(out.converged);
  const auto u0 = pf::oracle_exp(a, pf::kTwoPi);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_LE(pf::residual(out.eigenvectors[i], u0), sched.delta + 1e-9);
    for (std::size_t j = 0; j < i; ++j)
      EXPECT_LE(std::abs(pf::inner(out.eigenvectors[i], out.eigenvectors[j])), 2 * sched.delta + 2 * sched.epsilon);
  }
  const auto j = out.to_json();
  EXPECT_EQ(j["eigenvectors"].size(), 6u);
  EXPECT_FALSE(j.contains("wall_time_s"));
}

TEST(Diagonalize, PartialResultWhenOutOfRounds) {
  const auto a = pf::HermitianInput::validate(diag({0.1, 0.4, 0.7}));
  const auto weak = pf::FilterSchedule::manual(3, 1, 1, 101, 2, 1e-3, 1e-9, 1.0);
  pf::RngHandle rng(70);
  const auto out = pf::diagonalize(a, weak, rng, 2);
  EXPECT_FALSE(out.converged);
  EXPECT_EQ(out.outer_rounds, 2u);
  EXPECT_LT(out.eigenvectors.size(), 3u);
}
