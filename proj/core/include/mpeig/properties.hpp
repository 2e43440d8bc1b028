#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mpeig/eigensolver.hpp"

namespace mpeig {

enum class Verdict { kPass, kFail, kNotApplicable };

const char* to_string(Verdict v);

struct PropertyReport {
  std::string name;
  /// Hex FNV-1a digest of the inputs the check consumed.
  std::string digest;
  /// Named measurements in insertion order.
  std::vector<std::pair<std::string, double>> measured;
  Verdict verdict = Verdict::kNotApplicable;
  std::string notes;

  double value(const std::string& key) const;
  bool has(const std::string& key) const;
};

/// min u > 0 strictly for the canonical-sign principal field.
PropertyReport check_positivity(const EigenPair& pair);

/// Both nodal measures positive; not applicable unless pair.lambda exceeds
/// lambda1 beyond 1e-9 relative.
PropertyReport check_sign_change(const EigenPair& pair, double lambda1);

/// nu > lambda1(Omega+) and nu > lambda1(Omega-), with the implied measure
/// constants nu |Omega+-|^((p - ps)/(N - ps)) reported.
PropertyReport check_nodal_inequalities(const EigenPair& pair, const Problem& prob,
                                        const SolverConfig& cfg);

/// Energy of q_t = (t u^p + (1 - t) v^p)^(1/p) against the convex
/// combination of the energies of u and v, after weight normalization.
PropertyReport check_convexity_path(const Field& u, const Field& v, const Problem& prob,
                                    const std::vector<double>& t_grid);

/// J1 (local), J2 (pairs and exterior strips) and J3 with psi = (u - v)+.
PropertyReport check_comparison_integrals(const Field& u, const Field& v, const Problem& prob);

/// Truncation sequence t_n = |(u - (1 - 2^-n))+|_{p_s*}, n = 0..10.
PropertyReport check_moser_decay(const EigenPair& pair, const Problem& prob);

/// Left-hand side of the logarithmic energy estimate on B_{R/4}(x0) for
/// each delta.
PropertyReport check_log_energy(const EigenPair& pair, const Point& x0, double radius,
                                const std::vector<double>& deltas, const Problem& prob);

/// All cfg.restarts principal solves converge, agree in lambda to 1e-3
/// relative and in eigenfunction to L^p distance 1e-3.
PropertyReport check_simplicity(const Problem& prob, const SolverConfig& cfg);

/// Gap lambda2 - lambda1 (reported); passes when positive.
PropertyReport check_isolation_gap(const EigenPair& first, const EigenPair& second);

inline constexpr double kLogRatioLimit = 10.0;
inline constexpr double kSimplicityTolerance = 1e-3;
inline constexpr int kMoserSteps = 10;

/// Default probe arguments used by run_all.
std::vector<double> default_t_grid();
std::vector<double> default_deltas();

struct SuiteResult {
  EigenPair first;
  EigenPair second;
  std::vector<PropertyReport> reports;

  bool all_pass() const;
};

/// Solves lambda1 and lambda2 and runs every check in a fixed order. A
/// check that throws is reported as a failure; the batch continues.
SuiteResult run_all(const Problem& prob, const SolverConfig& cfg);

/// L^p distance (sum |a - b|^p h^N)^(1/p).
double lp_distance(const Problem& prob, const Field& a, const Field& b);

/// 16-point Gauss value of int_0^1 |a + t (b - a)|^(p - 2) dt (the norm is
/// Euclidean for vectors). When the closest approach to 0 lies on the
/// segment, each side is integrated in s with t = t0 +- s^2.
double segment_weight(double p, double a, double b);
double segment_weight(double p, const Point& a, const Point& b, int dim);

}  // namespace mpeig
