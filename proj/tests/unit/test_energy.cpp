#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "mpeig/energy.hpp"
#include "mpeig/error.hpp"
#include "mpeig/oracle.hpp"
#include "support.hpp"

namespace mpeig {
namespace {

// One node at 0.5 on (0, 1); build_grid needs two nodes per axis, so the
// struct is filled by hand.
GridPtr single_node() {
  auto g = std::make_shared<Grid>();
  g->dim = 1;
  g->lower = {0.0, 0.0};
  g->upper = {1.0, 0.0};
  g->n_per_axis = {1, 1};
  g->h = {0.5, 0.0};
  g->nodes = {{0.5, 0.0}};
  return g;
}

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Problem random_problem(const GridPtr& g, double p, std::mt19937_64& rng) {
  return make_problem(g, 0.5, p, test::uniform_field(g, rng, 0.0, 2.0),
                      test::uniform_field(g, rng, 0.5, 1.5));
}

TEST(Energy, ZeroField) {
  const Problem prob = test::plain(test::square(5), 1.5);
  const Field zero(prob.grid, 0.0);
  EXPECT_EQ(local_energy(prob, zero), 0.0);
  EXPECT_EQ(nonlocal_energy(prob, zero), 0.0);
}

TEST(Energy, SingleNodeHandValues) {
  const GridPtr g = single_node();
  const Problem prob = test::plain(g, 2.0);
  const Field u(g, 1.0);
  EXPECT_NEAR(local_energy(prob, u), 4.0, 1e-14);
  EXPECT_NEAR(nonlocal_energy(prob, u), 4.0, 1e-12);
}

TEST(Energy, FormsArePHomogeneous) {
  std::mt19937_64 rng(3);
  for (double p : {1.5, 2.0, 3.0}) {
    const Problem prob = random_problem(test::square(6, 5), p, rng);
    const Field u = test::uniform_field(prob.grid, rng, -1.0, 1.0);
    const FormBreakdown base = evaluate_forms(prob, u);
    for (double c : {-2.0, 0.3, 5.0}) {
      Field cu = u;
      for (auto& x : cu.values) x *= c;
      const FormBreakdown f = evaluate_forms(prob, cu);
      const double k = std::pow(std::fabs(c), p);
      EXPECT_NEAR(f.local, k * base.local, 1e-12 * k * base.local);
      EXPECT_NEAR(f.nonlocal, k * base.nonlocal, 1e-12 * k * base.nonlocal);
      EXPECT_NEAR(f.potential, k * base.potential, 1e-12 * k * base.potential);
      EXPECT_NEAR(f.weight, k * base.weight, 1e-12 * k * base.weight);
    }
  }
}

TEST(HForm, DefinitionIdentities) {
  std::mt19937_64 rng(4);
  for (double p : {1.5, 2.0, 3.0}) {
    const Problem prob = test::plain(test::square(5), p);
    const Field u = test::uniform_field(prob.grid, rng, -1.0, 1.0);
    const Field v = test::uniform_field(prob.grid, rng, -1.0, 1.0);
    const double uu = h_form(prob, u, u);
    EXPECT_NEAR(uu, local_energy(prob, u) + nonlocal_energy(prob, u), 1e-12 * uu);
    EXPECT_EQ(h_form(prob, u, Field(prob.grid, 0.0)), 0.0);
    if (p == 2.0) {
      EXPECT_NEAR(h_form(prob, u, v), h_form(prob, v, u), 1e-12 * uu);
      Field w = u;
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = 2.0 * u[i] - 3.0 * v[i];
      EXPECT_NEAR(h_form(prob, u, w), 2.0 * uu - 3.0 * h_form(prob, u, v), 1e-11 * uu);
    }
  }
}

TEST(RayleighQuotient, ZeroHomogeneous) {
  std::mt19937_64 rng(6);
  for (double p : {1.5, 2.0, 3.0}) {
    const Problem prob = random_problem(test::square(5), p, rng);
    const Field u = test::uniform_field(prob.grid, rng, -1.0, 1.0);
    const double r = rayleigh_quotient(prob, u);
    for (double c : {-1.0, 1e-3, 7.0}) {
      Field cu = u;
      for (auto& x : cu.values) x *= c;
      EXPECT_NEAR(rayleigh_quotient(prob, cu), r, 1e-13 * r);
    }
  }
}

TEST(RayleighQuotient, DoublingWeightHalves) {
  std::mt19937_64 rng(7);
  const Problem prob = random_problem(test::line(12), 1.5, rng);
  Field g2 = prob.g;
  for (auto& x : g2.values) x *= 2.0;
  const Problem doubled = make_problem(prob.grid, prob.s, prob.p, prob.V, g2, prob.mode, prob.kernel);
  const Field u = test::uniform_field(prob.grid, rng, -1.0, 1.0);
  EXPECT_NEAR(rayleigh_quotient(doubled, u), 0.5 * rayleigh_quotient(prob, u), 1e-13 * rayleigh_quotient(prob, u));
}

TEST(RayleighQuotient, ConstantPotentialShift) {
  std::mt19937_64 rng(8);
  const GridPtr g = test::square(5);
  const Problem prob = test::plain(g, 1.5);
  const Problem shifted = make_problem(g, prob.s, prob.p, Field(g, 2.5), Field(g, 1.0), prob.mode, prob.kernel);
  const Field u = normalized(prob, test::uniform_field(g, rng, -1.0, 1.0));
  EXPECT_NEAR(rayleigh_quotient(shifted, u), rayleigh_quotient(prob, u) + 2.5, 1e-12);
}

TEST(RayleighQuotient, ZeroFieldThrows) {
  const Problem prob = test::plain(test::line(5), 2.0);
  EXPECT_THROW(rayleigh_quotient(prob, Field(prob.grid, 0.0)), ValidationError);
}

TEST(Gradients, VanishAtOriginForPAboveTwo) {
  const Problem prob = test::plain(test::square(4), 3.0);
  const Field zero(prob.grid, 0.0);
  for (double x : grad_numerator(prob, zero).values) EXPECT_EQ(x, 0.0);
  for (double x : grad_denominator(prob, zero).values) EXPECT_EQ(x, 0.0);
}

TEST(Gradients, LinearAtPTwo) {
  std::mt19937_64 rng(9);
  const Problem prob = random_problem(test::square(5), 2.0, rng);
  const Field u = test::uniform_field(prob.grid, rng, -1.0, 1.0);
  const Field v = test::uniform_field(prob.grid, rng, -1.0, 1.0);
  Field w = u;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = u[i] + v[i];
  const Field gu = grad_numerator(prob, u);
  const Field gv = grad_numerator(prob, v);
  const Field gw = grad_numerator(prob, w);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(gw[i], gu[i] + gv[i], 1e-10);
}

TEST(Gradients, CentralDifferences) {
  std::mt19937_64 rng(10);
  const double eps = 1e-5;
  for (double p : {1.5, 2.0, 3.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Problem prob = random_problem(trial % 2 ? test::square(5, 4) : test::line(9), p, rng);
      const Field u = test::uniform_field(prob.grid, rng, -1.0, 1.0);
      const Field phi = test::uniform_field(prob.grid, rng, -1.0, 1.0);
      Field up = u, um = u;
      for (std::size_t i = 0; i < u.size(); ++i) {
        up[i] += eps * phi[i];
        um[i] -= eps * phi[i];
      }
      const FormBreakdown fp = evaluate_forms(prob, up);
      const FormBreakdown fm = evaluate_forms(prob, um);
      const double num_fd = (fp.numerator() - fm.numerator()) / (2.0 * eps);
      const double den_fd = (fp.weight - fm.weight) / (2.0 * eps);
      const double num = dot(grad_numerator(prob, u), phi);
      const double den = dot(grad_denominator(prob, u), phi);
      EXPECT_LE(std::fabs(num_fd - num), 1e-6 * std::fabs(num)) << "p=" << p;
      EXPECT_LE(std::fabs(den_fd - den), 1e-6 * std::fabs(den)) << "p=" << p;
    }
  }
}

TEST(Gradients, SingleSweepMatchesSeparateCalls) {
  std::mt19937_64 rng(12);
  const Problem prob = random_problem(test::square(5), 1.5, rng);
  const Field u = test::uniform_field(prob.grid, rng, -1.0, 1.0);
  Evaluation ev;
  evaluate_with_gradients(prob, u.values, ev);
  const Field gn = grad_numerator(prob, u);
  const Field gd = grad_denominator(prob, u);
  const FormBreakdown f = evaluate_forms(prob, u);
  EXPECT_NEAR(ev.forms.numerator(), f.numerator(), 1e-13 * f.numerator());
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_NEAR(ev.grad_num[i], gn[i], 1e-13 * (1.0 + std::fabs(gn[i])));
    EXPECT_NEAR(ev.grad_den[i], gd[i], 1e-13 * (1.0 + std::fabs(gd[i])));
  }
}

TEST(Residual, ExactDiscreteEigenpair) {
  const Problem prob = test::plain(test::line(16), 2.0);
  const auto pairs = smallest_eigenpairs(assemble_p2(prob), 1);
  const Field u(prob.grid, pairs[0].x);
  EXPECT_LT(residual(prob, pairs[0].lambda, u), 1e-10);
  Field neg = u;
  for (auto& x : neg.values) x = -x;
  EXPECT_EQ(residual(prob, pairs[0].lambda, neg), residual(prob, pairs[0].lambda, u));
}

TEST(Residual, RequiresNormalizedField) {
  const Problem prob = test::plain(test::line(8), 2.0);
  EXPECT_THROW(residual(prob, 10.0, Field(prob.grid, 0.0)), ValidationError);
  EXPECT_THROW(residual(prob, 10.0, Field(prob.grid, 3.0)), ValidationError);
}

TEST(Energy, LocalPartBoundedByMixedEnergyUnderRefinement) {
  double first = 0.0;
  for (int n : {16, 32, 64, 128}) {
    const Problem prob = test::plain(test::line(n), 1.5);
    Field u(prob.grid, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = prob.grid->nodes[i][0] * (1.0 - prob.grid->nodes[i][0]);
    const double local = local_energy(prob, u);
    const double mixed = local + nonlocal_energy(prob, u);
    EXPECT_LE(local, mixed);
    if (first == 0.0) first = mixed / local;
    EXPECT_LT(mixed / local, 2.0 * first);
  }
}

TEST(Energy, PairTermsDominatePositivePart) {
  // |a - b|^(p-2) (a - b) (a+ - b+) >= |a+ - b+|^p for every pair of values.
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (double p : {1.5, 2.0, 3.0}) {
    const PowerLaw pw(p);
    for (int k = 0; k < 10000; ++k) {
      const double a = d(rng);
      const double b = d(rng);
      const double lhs = pw.odd_pow(a - b) * (std::max(a, 0.0) - std::max(b, 0.0));
      EXPECT_GE(lhs + 1e-15, pw.abs_pow(std::max(a, 0.0) - std::max(b, 0.0)));
    }
  }
}

TEST(Problem, ValidatesCoefficientsByNode) {
  const GridPtr g = test::line(6);
  Field V(g, 0.0);
  V[3] = -1.0;
  try {
    make_problem(g, 0.5, 2.0, V, Field(g, 1.0));
    FAIL() << "negative V accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("node 3"), std::string::npos) << e.what();
  }
  Field gz(g, 1.0);
  gz[4] = 0.0;
  try {
    make_problem(g, 0.5, 2.0, Field(g, 0.0), gz);
    FAIL() << "zero g accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("node 4"), std::string::npos) << e.what();
  }
}

TEST(Problem, Labels) {
  const auto one_d = problem_labels(test::plain(test::line(6), 1.5));
  ASSERT_EQ(one_d.size(), 1u);
  EXPECT_EQ(one_d[0], "outside model hypotheses (N = 2, p < N)");
  EXPECT_TRUE(problem_labels(test::plain(test::square(4), 1.5)).empty());
  EXPECT_TRUE(within_model_hypotheses(test::plain(test::square(4), 1.5)));
  const auto local = problem_labels(test::plain(test::square(4), 1.5, 0.5, OperatorMode::kLocalOnly));
  ASSERT_EQ(local.size(), 1u);
  EXPECT_EQ(local[0], "non-paper operator mode: local-only");
}

}  // namespace
}  // namespace mpeig
