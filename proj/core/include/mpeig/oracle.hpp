#pragma once

#include <cstdint>
#include <vector>

#include "mpeig/energy.hpp"

namespace mpeig {

/// Dense generalized system A u = lambda B u of the p = 2 problem.
struct DenseSystem {
  std::size_t n = 0;
  /// Row-major n x n.
  std::vector<double> A;
  /// Diagonal of B.
  std::vector<double> B;

  double a(std::size_t i, std::size_t j) const { return A[i * n + j]; }
};

/// Assembles A and B directly from the grid, kernel table, V and g:
///   u^T A v = h_form(u, v) + sum V_i u_i v_i h^N,   u^T B v = sum g_i u_i v_i h^N.
/// Throws ValidationError unless p == 2.
DenseSystem assemble_p2(const Problem& prob);

struct DensePair {
  double lambda = 0.0;
  /// B-normalized, sum >= 0.
  std::vector<double> x;
};

/// The k smallest generalized eigenpairs in non-decreasing order, by cyclic
/// Jacobi on B^(-1/2) A B^(-1/2). Throws ConvergenceError if the sweeps do
/// not reduce the off-diagonal mass to rounding level.
std::vector<DensePair> smallest_eigenpairs(const DenseSystem& sys, std::size_t k);

/// max_i |(A x - lambda B x)_i|
double dense_residual(const DenseSystem& sys, double lambda, const std::vector<double>& x);

struct BruteForceResult {
  double value = 0.0;
  std::vector<double> u;
  long evaluations = 0;
  /// True when the budget ran out before the step sizes reached tolerance.
  bool exhausted = false;
};

/// Many-restart adaptive coordinate search on the Rayleigh quotient. Each
/// restart starts from uniform [-1, 1] values and stops once every
/// coordinate step is below 1e-10 (relative to max |u|). Requires at most 10
/// nodes; budget counts quotient evaluations over all restarts.
BruteForceResult brute_force_quotient_min(const Problem& prob, int n_restarts, long budget,
                                          std::uint64_t seed = 1);

inline constexpr std::size_t kBruteForceMaxNodes = 10;

/// Agreement gates used when the solver is compared with an oracle.
inline constexpr double kDenseLambda1Tolerance = 1e-6;
inline constexpr double kDenseLambda2Tolerance = 1e-3;
inline constexpr double kBruteForceTolerance = 1e-4;

}  // namespace mpeig
