#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpeig/energy.hpp"

namespace mpeig {

struct SolverConfig {
  int max_iters = 100000;
  /// Relative quotient change below which an iteration counts as flat.
  double tol_quotient = 1e-10;
  /// Stationarity threshold on residual().
  double tol_residual = 1e-8;
  double step0 = 1e-3;
  double backtrack = 0.5;
  double armijo = 1e-4;
  std::uint64_t seed = 1;
  int restarts = 1;

  /// Throws ValidationError when any invariant fails.
  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct EigenPair {
  double lambda = 0.0;
  /// Normalized to unit weight term.
  Field u;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
  std::string notes;
};

/// Principal pair by projected gradient descent on the Rayleigh quotient
/// with Armijo backtracking and renormalization, best of cfg.restarts random
/// nonnegative starts. The returned eigenfunction has sum(u) >= 0.
EigenPair solve_principal(const Problem& prob, const SolverConfig& cfg);

/// One pair per restart, in restart order, each with canonical sign.
std::vector<EigenPair> solve_principal_restarts(const Problem& prob, const SolverConfig& cfg);

/// Principal pair among fields vanishing outside mask (the first eigenvalue
/// of the sub-domain selected by mask, on the same grid).
EigenPair solve_principal_on_subdomain(const Problem& prob, const std::vector<bool>& mask,
                                       const SolverConfig& cfg);

/// Upper-bound estimate of the second minimax level:
///   min_w max_theta R(cos(theta) u1 + sin(theta) w),
/// over symmetric circles through the principal eigenfunction u1. The
/// returned field is the normalized maximizer at the optimal (w, theta).
EigenPair solve_second(const Problem& prob, const SolverConfig& cfg, const EigenPair& first);

/// Number of uniform samples of theta in [0, pi) before golden-section
/// refinement.
inline constexpr int kThetaSamples = 64;

/// Deterministic uniform doubles in [0,1) for a (seed, stream) pair.
std::vector<double> uniform_samples(std::uint64_t seed, std::uint64_t stream, std::size_t count);

}  // namespace mpeig
