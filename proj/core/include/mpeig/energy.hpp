#pragma once

#include <span>
#include <string>
#include <vector>

#include "mpeig/grid.hpp"
#include "mpeig/kernel.hpp"
#include "mpeig/power.hpp"

namespace mpeig {

/// Which operator terms are active. Only kMixed is the operator under study;
/// the other two exist for anchoring against analytic or linear references.
enum class OperatorMode { kMixed, kLocalOnly, kNonlocalOnly };

const char* to_string(OperatorMode mode);
OperatorMode operator_mode_from_string(const std::string& name);

/// Discrete weighted eigenvalue problem
///   -Delta_p u + (-Delta_p)^s u + V |u|^(p-2) u = lambda g |u|^(p-2) u  in Omega,
///   u = 0 outside Omega.
struct Problem {
  GridPtr grid;
  double s = 0.5;
  double p = 2.0;
  Field V;
  Field g;
  KernelPtr kernel;
  OperatorMode mode = OperatorMode::kMixed;

  std::size_t size() const { return grid->size(); }
  PowerLaw power() const { return PowerLaw(p); }
  bool local_active() const { return mode != OperatorMode::kNonlocalOnly; }
  bool nonlocal_active() const { return mode != OperatorMode::kLocalOnly; }
};

/// Validates V >= 0, g > 0 (naming the first offending node) and the
/// exponents, and builds the kernel when none is supplied.
Problem make_problem(GridPtr grid, double s, double p, Field V, Field g,
                     OperatorMode mode = OperatorMode::kMixed, KernelPtr kernel = nullptr);

/// True for N = 2, p < N and the mixed operator.
bool within_model_hypotheses(const Problem& prob);

/// Human-readable tags attached to every output of a run.
std::vector<std::string> problem_labels(const Problem& prob);

struct FormBreakdown {
  double local = 0.0;
  double nonlocal = 0.0;
  double potential = 0.0;
  double weight = 0.0;

  double numerator() const { return local + nonlocal + potential; }
};

FormBreakdown evaluate_forms(const Problem& prob, std::span<const double> u);
FormBreakdown evaluate_forms(const Problem& prob, const Field& u);

/// sum over cells of |grad_h u|^p h^N with forward differences and zero
/// values across the boundary.
double local_energy(const Problem& prob, const Field& u);

/// sum_{i != j} |u_i - u_j|^p w_ij + 2 sum_i |u_i|^p rho_i h^N.
double nonlocal_energy(const Problem& prob, const Field& u);

/// Discrete H_{s,p}(u, v); h_form(u, u) = local + nonlocal energy.
double h_form(const Problem& prob, const Field& u, const Field& v);

/// (local + nonlocal + potential) / weight. Throws on a zero denominator.
double rayleigh_quotient(const Problem& prob, const Field& u);
double rayleigh_quotient(const Problem& prob, std::span<const double> u);

/// Exact gradient of pT(u) = h_form(u, u) + potential(u).
Field grad_numerator(const Problem& prob, const Field& u);
/// Exact gradient of pH(u) = weight(u).
Field grad_denominator(const Problem& prob, const Field& u);

/// Numerator, denominator and both gradients in a single sweep.
struct Evaluation {
  FormBreakdown forms;
  std::vector<double> grad_num;
  std::vector<double> grad_den;
};
void evaluate_with_gradients(const Problem& prob, std::span<const double> u, Evaluation& out);

/// max_k |grad_numerator - lambda grad_denominator|_k / max(1, |lambda|).
/// Requires u normalized to unit weight term.
double residual(const Problem& prob, double lambda, const Field& u);
double residual(const Problem& prob, double lambda, std::span<const double> u);

/// Scales u so that its weight term equals 1. Throws if u vanishes.
void normalize_weight(const Problem& prob, std::span<double> u);
Field normalized(const Problem& prob, Field u);

}  // namespace mpeig
