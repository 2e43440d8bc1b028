#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "mpeig/error.hpp"
#include "mpeig/kernel.hpp"
#include "support.hpp"

namespace mpeig {
namespace {

double closed_form_rho_1d(double x, double sp) {
  return (std::pow(x, -sp) + std::pow(1.0 - x, -sp)) / sp;
}

TEST(KernelWeights, TwoNodeLine) {
  const auto k = build_weights(test::line(2), 0.5, 2.0);
  EXPECT_NEAR(k->weight(0, 1), 1.0, 1e-14);
  EXPECT_EQ(k->weight(0, 0), 0.0);
  EXPECT_EQ(k->weight(1, 1), 0.0);
}

TEST(KernelWeights, SymmetricPositiveOffDiagonal) {
  const auto k = build_weights(test::square(5, 4), 0.3, 1.7);
  for (std::size_t i = 0; i < k->size(); ++i) {
    EXPECT_EQ(k->weight(i, i), 0.0);
    EXPECT_GT(k->exterior[i], 0.0);
    for (std::size_t j = 0; j < k->size(); ++j) {
      if (i == j) continue;
      EXPECT_GT(k->weight(i, j), 0.0);
      EXPECT_EQ(k->weight(i, j), k->weight(j, i));
    }
  }
}

TEST(KernelWeights, RejectsExponentsOutOfRange) {
  const GridPtr g = test::line(4);
  EXPECT_THROW(build_weights(g, 0.0, 2.0), ValidationError);
  EXPECT_THROW(build_weights(g, 1.0, 2.0), ValidationError);
  EXPECT_THROW(build_weights(g, 0.5, 1.0), ValidationError);
}

TEST(ExteriorDensity, HandValuesOnUnitInterval) {
  const GridPtr g = test::line(3);  // nodes 0.25, 0.5, 0.75
  EXPECT_NEAR(exterior_density(*g, 0.5, 2.0, 1), 4.0, 1e-12);
  EXPECT_NEAR(exterior_density(*g, 0.5, 2.0, 0), 4.0 + 4.0 / 3.0, 1e-12);
  EXPECT_EQ(exterior_density(*g, 0.5, 2.0, 0), exterior_density(*g, 0.5, 2.0, 2));
}

TEST(ExteriorDensity, MatchesClosedFormIn1D) {
  for (double s : {0.2, 0.5, 0.8}) {
    for (double p : {1.5, 2.0, 3.0}) {
      const GridPtr g = test::line(17);
      for (std::size_t i = 0; i < g->size(); ++i) {
        const double want = closed_form_rho_1d(g->nodes[i][0], s * p);
        EXPECT_NEAR(exterior_density(*g, s, p, i), want, 1e-12 * want);
      }
    }
  }
}

TEST(ExteriorDensity, SquareDihedralSymmetry) {
  const GridPtr g = test::square(7);
  const auto k = build_weights(g, 0.5, 1.5);
  const int n = 7;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double r = k->exterior[g->index(i, j)];
      for (const auto& [a, b] : {std::pair{j, i}, std::pair{n - 1 - i, j}, std::pair{i, n - 1 - j},
                                 std::pair{n - 1 - j, n - 1 - i}}) {
        EXPECT_NEAR(k->exterior[g->index(a, b)], r, 1e-8 * r);
      }
    }
  }
}

TEST(ExteriorDensity, GrowsTowardTheBoundaryUnderRefinement) {
  double previous = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const double rho = exterior_density(*test::square(n), 0.5, 1.5, 0);
    EXPECT_GT(rho, previous);
    previous = rho;
  }
}

TEST(Tail, ZeroField) {
  const GridPtr g = test::line(9);
  EXPECT_EQ(tail(Field(g, 0.0), {0.5, 0.0}, 0.1, 0.5, 2.0), 0.0);
}

TEST(Tail, SingleNode) {
  const GridPtr g = test::line(9);
  Field w(g, 0.0);
  w[8] = 1.0;  // x = 0.9
  const double r = 0.2;
  const double d = 0.4;
  // (r^sp h d^-(N+sp))^(1/(p-1)) with sp = 1, N + sp = 2.
  EXPECT_NEAR(tail(w, {0.5, 0.0}, r, 0.5, 2.0), r * 0.1 / (d * d), 1e-14);
  // Inside the ball: no contribution.
  EXPECT_EQ(tail(w, {0.8, 0.0}, r, 0.5, 2.0), 0.0);
}

TEST(Tail, NegativePartOfNonnegativeFieldVanishes) {
  const GridPtr g = test::line(9);
  Field w(g, 1.0);
  Field neg(g, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) neg[i] = std::max(-w[i], 0.0);
  EXPECT_EQ(tail(neg, {0.5, 0.0}, 0.1, 0.5, 1.5), 0.0);
}

TEST(Tail, PositivelyHomogeneous) {
  std::mt19937_64 rng(11);
  const GridPtr g = test::square(6);
  const Field w = test::uniform_field(g, rng, -1.0, 1.0);
  for (double p : {1.5, 2.0, 3.0}) {
    const double base = tail(w, {0.5, 0.5}, 0.2, 0.5, p);
    for (double c : {-3.0, 0.5, 2.0}) {
      Field cw = w;
      for (auto& x : cw.values) x *= c;
      EXPECT_NEAR(tail(cw, {0.5, 0.5}, 0.2, 0.5, p), std::fabs(c) * base, 1e-12 * base);
    }
  }
  EXPECT_THROW(tail(w, {0.5, 0.5}, 0.0, 0.5, 2.0), ValidationError);
}

TEST(Seminorm, ConvergesUnderRefinement) {
  // sum_{i != j} |u_i - u_j|^p w_ij + 2 sum |u_i|^p rho_i h for u = x(1 - x).
  std::vector<double> values;
  for (int n : {16, 32, 64, 128}) {
    const GridPtr g = test::line(n);
    const Problem prob = test::plain(g, 2.0, 0.5, OperatorMode::kNonlocalOnly);
    Field u(g, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = g->nodes[i][0] * (1.0 - g->nodes[i][0]);
    values.push_back(nonlocal_energy(prob, u));
  }
  for (std::size_t k = 2; k < values.size(); ++k) {
    EXPECT_LT(std::fabs(values[k] - values[k - 1]), std::fabs(values[k - 1] - values[k - 2]));
  }
}

TEST(KernelCache, RoundTripAndHeaderMismatch) {
  const auto dir = std::filesystem::temp_directory_path() / "mpeig_kernel_cache_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const GridPtr g = test::square(5);
  const auto k = build_weights(g, 0.4, 1.8);
  const auto file = dir / kernel_cache_name(*g, 0.4, 1.8);
  save_kernel_cache(*k, file);
  const auto back = load_kernel_cache(g, 0.4, 1.8, file);
  ASSERT_NE(back, nullptr);
  EXPECT_EQ(back->pair, k->pair);
  EXPECT_EQ(back->exterior, k->exterior);
  EXPECT_EQ(load_kernel_cache(g, 0.5, 1.8, file), nullptr);
  EXPECT_EQ(load_kernel_cache(g, 0.4, 1.8, dir / "absent.bin"), nullptr);

  const auto cached = cached_weights(g, 0.3, 2.0, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / kernel_cache_name(*g, 0.3, 2.0)));
  EXPECT_EQ(cached_weights(g, 0.3, 2.0, dir)->pair, cached->pair);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mpeig
