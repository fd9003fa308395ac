#include "frtsvm/cd_solver.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace frtsvm;
using frtsvm::test::random_spd;

namespace {

struct Problem {
  Matrix qbar;
  Vector upper;
};

Vector uniform_vector(Index n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

// Columns of A drawn from U[0, 1] are positively correlated, so many
// variables end up pinned at a bound.
Problem correlated_problem(Index n, std::mt19937_64& rng) {
  Matrix a(n + 3, n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
  return {a.transpose() * a + 0.1 * Matrix::Identity(n, n), uniform_vector(n, 0.0, 2.0, rng)};
}

Problem random_problem(Index n, std::mt19937_64& rng) {
  return {random_spd(n, 0.1, rng), uniform_vector(n, 0.0, 2.0, rng)};
}

OracleResult oracle(const Problem& p) {
  return brute_force_oracle(p.qbar, Vector::Ones(p.qbar.rows()), p.upper);
}

SolverConfig tight(bool shrinking) {
  SolverConfig c;
  c.epsilon = 1e-8;
  c.max_epochs = 100000;
  c.shrinking = shrinking;
  return c;
}

}  // namespace

TEST(ProjectedGradient, Cases) {
  EXPECT_EQ(projected_gradient(0.0, -1.0, 1.0), -1.0);
  EXPECT_EQ(projected_gradient(0.0, 2.0, 1.0), 0.0);
  EXPECT_EQ(projected_gradient(1.0, 2.0, 1.0), 2.0);
  EXPECT_EQ(projected_gradient(1.0, -2.0, 1.0), 0.0);
  EXPECT_EQ(projected_gradient(0.4, -2.0, 1.0), -2.0);
  EXPECT_EQ(projected_gradient(0.4, 3.0, 1.0), 3.0);
  EXPECT_EQ(projected_gradient(0.0, -5.0, 0.0), 0.0);
  EXPECT_THROW(projected_gradient(1.5, 0.0, 1.0), ConfigError);
  EXPECT_THROW(projected_gradient(-0.1, 0.0, 1.0), ConfigError);
}

TEST(CdUpdate, SingleVariable) {
  Matrix q(1, 1);
  q << 2.0;
  const DenseDual dual(q, Vector::Ones(1));
  const DualProblem p = dual.view();
  SolverState s = SolverState::zero(p);
  EXPECT_TRUE(cd_update(s, 0, p));
  EXPECT_DOUBLE_EQ(s.alpha(0), 0.5);
  EXPECT_DOUBLE_EQ(s.u_aux(0), -1.0);
  // Already optimal: projected gradient is zero, nothing moves.
  const SolverState before = s;
  EXPECT_FALSE(cd_update(s, 0, p));
  EXPECT_EQ(s.alpha, before.alpha);
  EXPECT_EQ(s.u_aux, before.u_aux);
}

TEST(CdUpdate, ZeroUpperBoundStaysAtZero) {
  Matrix q(1, 1);
  q << 2.0;
  const DenseDual dual(q, Vector::Zero(1));
  const DualProblem p = dual.view();
  SolverState s = SolverState::zero(p);
  EXPECT_FALSE(cd_update(s, 0, p));
  EXPECT_EQ(s.alpha(0), 0.0);
}

TEST(CdUpdate, ClipsAtUpperBound) {
  Matrix q(1, 1);
  q << 1.0;
  const DenseDual dual(q, Vector::Constant(1, 0.25));
  const DualProblem p = dual.view();
  SolverState s = SolverState::zero(p);
  EXPECT_TRUE(cd_update(s, 0, p));
  EXPECT_EQ(s.alpha(0), 0.25);
}

TEST(Solve, DiagonalProblem) {
  const Matrix q = 2.0 * Matrix::Identity(2, 2);
  const DenseDual dual(q, Vector::Ones(2));
  for (bool shrinking : {false, true}) {
    SolverConfig cfg;
    cfg.shrinking = shrinking;
    const SolverReport r = solve(dual.view(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_DOUBLE_EQ(r.alpha(0), 0.5);
    EXPECT_DOUBLE_EQ(r.alpha(1), 0.5);
    EXPECT_DOUBLE_EQ(r.objective, -0.5);
    // One sweep moves both coordinates to the optimum; the next confirms it.
    EXPECT_EQ(r.updates, 2);
    EXPECT_LE(r.epochs, 2);
    EXPECT_EQ(r.kkt_gap, 0.0);
  }
}

TEST(Solve, AllUpperBoundsZero) {
  std::mt19937_64 rng(4);
  const DenseDual dual(random_spd(6, 0.1, rng), Vector::Zero(6));
  for (bool shrinking : {false, true}) {
    SolverConfig cfg;
    cfg.shrinking = shrinking;
    const SolverReport r = solve(dual.view(), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.alpha, Vector::Zero(6));
    EXPECT_EQ(r.objective, 0.0);
    EXPECT_EQ(r.updates, 0);
  }
}

TEST(Solve, NonPositiveDiagonalIsSkipped) {
  Matrix q = Matrix::Zero(3, 3);
  q(0, 0) = 1.0;
  q(2, 2) = 4.0;
  const DenseDual dual(q, Vector::Ones(3));
  for (bool shrinking : {false, true}) {
    SolverConfig cfg;
    cfg.shrinking = shrinking;
    const SolverReport r = solve(dual.view(), cfg);
    EXPECT_EQ(r.skipped, 1);
    EXPECT_TRUE(r.converged);
    EXPECT_DOUBLE_EQ(r.alpha(0), 1.0);
    EXPECT_EQ(r.alpha(1), 0.0);
    EXPECT_DOUBLE_EQ(r.alpha(2), 0.25);
  }
}

TEST(Oracle, AnalyticSolutions) {
  // Unconstrained minimizer 1/q; clipped by the box when it lies outside.
  Matrix q(1, 1);
  q << 1.0;
  OracleResult r = brute_force_oracle(q, Vector::Ones(1), Vector::Constant(1, 0.5));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.alpha(0), 0.5, 1e-12);
  q << 10.0 / 3.0;
  r = brute_force_oracle(q, Vector::Ones(1), Vector::Ones(1));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.alpha(0), 0.3, 1e-10);
  EXPECT_NEAR(r.objective, -0.15, 1e-12);

  // Coupled 2x2: [[2, 1], [1, 2]] a = e gives a = (1/3, 1/3).
  Matrix q2(2, 2);
  q2 << 2, 1, 1, 2;
  r = brute_force_oracle(q2, Vector::Ones(2), Vector::Ones(2));
  EXPECT_NEAR(r.alpha(0), 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(r.alpha(1), 1.0 / 3.0, 1e-10);
}

TEST(Oracle, Errors) {
  EXPECT_THROW(brute_force_oracle(Matrix::Identity(51, 51), Vector::Ones(51), Vector::Ones(51)), ConfigError);
  EXPECT_THROW(brute_force_oracle(Matrix::Identity(2, 2), Vector::Ones(3), Vector::Ones(2)), ConfigError);
  EXPECT_THROW(brute_force_oracle(Matrix::Identity(2, 2), Vector::Ones(2), -Vector::Ones(2)), ConfigError);
}

TEST(Solve, MatchesOracleOnRandomProblems) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Index n = std::uniform_int_distribution<Index>(2, 20)(rng);
    const Problem pr = seed % 2 == 0 ? correlated_problem(n, rng) : random_problem(n, rng);
    const OracleResult ref = oracle(pr);
    ASSERT_TRUE(ref.converged) << "seed " << seed;
    const DenseDual dual(pr.qbar, pr.upper);
    for (bool shrinking : {false, true}) {
      const SolverReport r = solve(dual.view(), tight(shrinking));
      ASSERT_TRUE(r.converged) << "seed " << seed;
      EXPECT_LE(r.objective - ref.objective, 1e-6 * std::max(1.0, std::abs(ref.objective))) << "seed " << seed;
      EXPECT_LE(r.kkt_gap, 1e-8);
      EXPECT_LE((r.alpha - ref.alpha).cwiseAbs().maxCoeff(), 1e-4) << "seed " << seed;
    }
  }
}

TEST(Solve, FifteenVariableProblemAgainstOracle) {
  std::mt19937_64 rng(15);
  const Problem pr = random_problem(15, rng);
  const OracleResult ref = oracle(pr);
  ASSERT_TRUE(ref.converged);
  const SolverReport r = solve_plain(DenseDual(pr.qbar, pr.upper).view(), tight(false));
  EXPECT_NEAR(r.objective, ref.objective, 1e-8);
}

TEST(CdUpdate, EveryUpdateDecreasesObjectiveAndStaysInBox) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Problem pr = random_problem(12, rng);
    const DenseDual dual(pr.qbar, pr.upper);
    const DualProblem p = dual.view();
    SolverState s = SolverState::zero(p);
    double f = dual_objective(p, s.alpha);
    for (int epoch = 0; epoch < 30; ++epoch) {
      for (Index i = 0; i < p.size(); ++i) {
        if (!cd_update(s, i, p)) continue;
        const double next = dual_objective(p, s.alpha);
        EXPECT_LT(next, f + 1e-12);
        f = next;
        EXPECT_GE(s.alpha.minCoeff(), 0.0);
        EXPECT_TRUE(((pr.upper - s.alpha).array() >= 0.0).all());
      }
    }
    // Maintained auxiliary vector against a fresh product.
    EXPECT_LE((s.u_aux + dual.qfactor.q * s.alpha).cwiseAbs().maxCoeff(), 1e-8);
    // Fresh gradient against the per-coordinate one.
    const Vector g = dual_gradient(p, s.alpha);
    for (Index i = 0; i < p.size(); ++i) EXPECT_NEAR(coordinate_gradient(s, i, p), g(i), 1e-8);
  }
}

TEST(Shrinking, PinnedProblemsShrinkAndAgree) {
  long total_events = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const Problem pr = correlated_problem(40, rng);
    const DenseDual dual(pr.qbar, pr.upper);
    const SolverReport plain = solve(dual.view(), tight(false));
    const SolverReport shr = solve(dual.view(), tight(true));
    ASSERT_TRUE(plain.converged);
    ASSERT_TRUE(shr.converged);
    EXPECT_LE(std::abs(shr.objective - plain.objective), 1e-6);
    EXPECT_LE((shr.alpha - plain.alpha).cwiseAbs().maxCoeff(), 1e-4);
    total_events += shr.shrink_events;
  }
  EXPECT_GT(total_events, 0);
}

TEST(Shrinking, PermutationRobust) {
  std::mt19937_64 rng(33);
  const Problem pr = correlated_problem(25, rng);
  std::vector<Index> perm(25);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix qp(25, 25);
  Vector up(25);
  for (Index i = 0; i < 25; ++i) {
    up(i) = pr.upper(perm[i]);
    for (Index j = 0; j < 25; ++j) qp(i, j) = pr.qbar(perm[i], perm[j]);
  }
  for (bool shrinking : {false, true}) {
    const SolverReport a = solve(DenseDual(pr.qbar, pr.upper).view(), tight(shrinking));
    const SolverReport b = solve(DenseDual(qp, up).view(), tight(shrinking));
    EXPECT_NEAR(a.objective, b.objective, 1e-9);
    for (Index i = 0; i < 25; ++i) EXPECT_NEAR(b.alpha(i), a.alpha(perm[i]), 1e-4);
  }
}

TEST(Solve, DeterministicForFixedSeed) {
  std::mt19937_64 rng(8);
  const Problem pr = correlated_problem(30, rng);
  const DenseDual dual(pr.qbar, pr.upper);
  const SolverReport a = solve(dual.view(), SolverConfig{});
  const SolverReport b = solve(dual.view(), SolverConfig{});
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.epochs, b.epochs);
}

TEST(Solve, DefaultToleranceBoundsGap) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Problem pr = correlated_problem(30, rng);
    const DenseDual dual(pr.qbar, pr.upper);
    for (bool shrinking : {false, true}) {
      SolverConfig cfg;
      cfg.shrinking = shrinking;
      cfg.max_epochs = 100000;
      const SolverReport r = solve(dual.view(), cfg);
      ASSERT_TRUE(r.converged);
      EXPECT_LE(r.kkt_gap, cfg.epsilon);
      EXPECT_NEAR(r.kkt_gap, kkt_gap(dual.view(), r.alpha), 1e-12);
    }
  }
}

TEST(Solve, NonConvergenceIsReported) {
  std::mt19937_64 rng(10);
  const Problem pr = correlated_problem(30, rng);
  SolverConfig cfg = tight(false);
  cfg.max_epochs = 1;
  const SolverReport r = solve(DenseDual(pr.qbar, pr.upper).view(), cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.epochs, 1);
  EXPECT_GT(r.kkt_gap, cfg.epsilon);
}

TEST(Solve, TraceHasOneRowPerEpoch) {
  std::mt19937_64 rng(11);
  const Problem pr = correlated_problem(20, rng);
  const DenseDual dual(pr.qbar, pr.upper);
  for (bool shrinking : {false, true}) {
    SolverConfig cfg = tight(shrinking);
    cfg.trace = true;
    const SolverReport r = solve(dual.view(), cfg);
    ASSERT_EQ(static_cast<long>(r.trace.size()), r.epochs);
    for (std::size_t k = 0; k < r.trace.size(); ++k) EXPECT_EQ(r.trace[k].epoch, static_cast<long>(k) + 1);
    EXPECT_NEAR(r.trace.back().objective, r.objective, 1e-10);
    for (std::size_t k = 1; k < r.trace.size(); ++k)
      EXPECT_LE(r.trace[k].objective, r.trace[k - 1].objective + 1e-12);
    if (!shrinking) {
      for (const TraceRow& row : r.trace) EXPECT_EQ(row.active_size, 20);
    }
  }
}

TEST(Solve, ConfigAndProblemValidation) {
  const DenseDual dual(Matrix::Identity(2, 2), Vector::Ones(2));
  SolverConfig cfg;
  cfg.epsilon = 0.0;
  EXPECT_THROW(solve(dual.view(), cfg), ConfigError);
  cfg = SolverConfig{};
  cfg.max_epochs = 0;
  EXPECT_THROW(solve(dual.view(), cfg), ConfigError);
  DualProblem bad = dual.view();
  bad.upper = Vector::Ones(3);
  EXPECT_THROW(solve(bad, SolverConfig{}), ConfigError);
  bad.upper = -Vector::Ones(2);
  EXPECT_THROW(solve(bad, SolverConfig{}), ConfigError);
  bad.qfactor = nullptr;
  EXPECT_THROW(solve(bad, SolverConfig{}), ConfigError);
}
