#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mpeig/eigensolver.hpp"
#include "mpeig/error.hpp"
#include "mpeig/oracle.hpp"
#include "support.hpp"

namespace mpeig {
namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

struct Frozen {
  GridPtr grid;
  double lambda1;
  double lambda2;
};

TEST(DenseOracle, FrozenSpectra) {
  const Frozen cases[] = {
      {test::line(16), 23.334485005247053, 70.2085504551969},
      {test::line(32), 24.10865991899677, 72.52062631462202},
      {test::line(64), 24.534440406437053, 73.72962708054749},
      {test::square(16), 61.180057334391165, 118.26690059707158},
  };
  for (const auto& c : cases) {
    const auto pairs = smallest_eigenpairs(assemble_p2(test::plain(c.grid, 2.0)), 2);
    EXPECT_LT(rel(pairs[0].lambda, c.lambda1), 1e-12);
    EXPECT_LT(rel(pairs[1].lambda, c.lambda2), 1e-12);
  }
}

TEST(DenseOracle, AssemblyReproducesQuadraticForms) {
  std::mt19937_64 rng(21);
  for (const GridPtr& g : {test::line(9), test::square(5, 4)}) {
    for (OperatorMode mode : {OperatorMode::kMixed, OperatorMode::kLocalOnly, OperatorMode::kNonlocalOnly}) {
      const Problem prob = make_problem(g, 0.5, 2.0, test::uniform_field(g, rng, 0.0, 2.0),
                                        test::uniform_field(g, rng, 0.5, 1.5), mode);
      const DenseSystem sys = assemble_p2(prob);
      const Field u = test::uniform_field(g, rng, -1.0, 1.0);
      const Field v = test::uniform_field(g, rng, -1.0, 1.0);
      double uav = 0.0, ubv = 0.0, pot = 0.0, wt = 0.0;
      for (std::size_t i = 0; i < sys.n; ++i) {
        for (std::size_t j = 0; j < sys.n; ++j) uav += u[i] * sys.a(i, j) * v[j];
        ubv += u[i] * sys.B[i] * v[i];
        pot += prob.V[i] * u[i] * v[i];
        wt += prob.g[i] * u[i] * v[i];
      }
      const double cell = g->cell_measure();
      const double want = h_form(prob, u, v) + pot * cell;
      EXPECT_NEAR(uav, want, 1e-12 * (1.0 + std::fabs(want)));
      EXPECT_NEAR(ubv, wt * cell, 1e-14);
    }
  }
}

TEST(DenseOracle, RejectsOtherExponents) {
  EXPECT_THROW(assemble_p2(test::plain(test::line(8), 1.5)), ValidationError);
}

TEST(DenseOracle, JacobiOnKnownMatrix) {
  DenseSystem sys;
  sys.n = 3;
  sys.A = {2, -1, 0, -1, 2, -1, 0, -1, 2};
  sys.B = {1, 1, 1};
  const auto pairs = smallest_eigenpairs(sys, 3);
  EXPECT_NEAR(pairs[0].lambda, 2.0 - std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(pairs[1].lambda, 2.0, 1e-15);
  EXPECT_NEAR(pairs[2].lambda, 2.0 + std::sqrt(2.0), 1e-14);
  for (const auto& p : pairs) EXPECT_LT(dense_residual(sys, p.lambda, p.x), 1e-14);
  EXPECT_THROW(smallest_eigenpairs(sys, 4), ValidationError);
}

TEST(DenseOracle, PairsSolveTheSystem) {
  const DenseSystem sys = assemble_p2(test::plain(test::square(6), 2.0));
  for (const auto& p : smallest_eigenpairs(sys, 3)) {
    EXPECT_LT(dense_residual(sys, p.lambda, p.x) / p.lambda, 1e-12);
    double norm = 0.0;
    for (std::size_t i = 0; i < sys.n; ++i) norm += sys.B[i] * p.x[i] * p.x[i];
    EXPECT_NEAR(norm, 1.0, 1e-13);
  }
}

TEST(DenseOracle, SolverPairHasSmallOracleResidual) {
  const Problem prob = test::plain(test::line(32), 2.0);
  const EigenPair pair = solve_principal(prob, SolverConfig{});
  const double r = dense_residual(assemble_p2(prob), pair.lambda, pair.u.values);
  EXPECT_LT(r / std::max(1.0, pair.lambda), 1e-8);
}

TEST(BruteForce, AgreesWithDenseOracleAtPTwo) {
  const Problem prob = test::plain(test::line(6), 2.0);
  const auto bf = brute_force_quotient_min(prob, 10, 1'000'000);
  const auto ref = smallest_eigenpairs(assemble_p2(prob), 1);
  EXPECT_FALSE(bf.exhausted);
  EXPECT_LT(rel(bf.value, ref[0].lambda), 1e-6);
}

TEST(BruteForce, FrozenValueAtP17) {
  const auto bf = brute_force_quotient_min(test::plain(test::line(8), 1.7), 20, 2'000'000);
  EXPECT_LT(rel(bf.value, 18.967586173147), 1e-9);
}

TEST(BruteForce, UpperBoundsSolverOnTinySquare) {
  const Problem prob = test::plain(test::square(3), 1.5);
  SolverConfig cfg;
  cfg.tol_residual = 1e-6;
  cfg.max_iters = 1'000'000;
  const EigenPair pair = solve_principal(prob, cfg);
  const auto bf = brute_force_quotient_min(prob, 20, 2'000'000);
  EXPECT_LT(rel(bf.value, pair.lambda), 1e-4);
  EXPECT_GE(bf.value, pair.lambda * (1.0 - 1e-9));
}

TEST(BruteForce, SeedIndependentResult) {
  const Problem prob = test::plain(test::line(5), 3.0);
  const auto a = brute_force_quotient_min(prob, 10, 1'000'000, 1);
  const auto b = brute_force_quotient_min(prob, 10, 1'000'000, 99);
  EXPECT_LT(rel(a.value, b.value), 1e-8);
}

TEST(BruteForce, GatesAndBudget) {
  EXPECT_THROW(brute_force_quotient_min(test::plain(test::line(11), 1.5), 5, 1000), ValidationError);
  EXPECT_THROW(brute_force_quotient_min(test::plain(test::line(6), 1.5), 0, 1000), ValidationError);
  const auto starved = brute_force_quotient_min(test::plain(test::line(6), 1.5), 5, 50);
  EXPECT_TRUE(starved.exhausted);
  EXPECT_LE(starved.evaluations, 50);
  EXPECT_TRUE(std::isfinite(starved.value));
}

}  // namespace
}  // namespace mpeig
