#include "mpeig/energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mpeig/error.hpp"

namespace mpeig {

namespace {

constexpr long kOutside = -1;

// Calls f(center, x_neighbor, y_neighbor) for every forward-difference cell
// of the zero-extended grid; indices are node numbers or kOutside. In 1D the
// y neighbor is always kOutside and must be ignored.
template <class F>
void for_each_cell(const Grid& grid, F&& f) {
  const int n0 = grid.n_per_axis[0];
  const int n1 = grid.n_per_axis[1];
  auto node = [&](int i, int j) -> long {
    if (i < 1 || i > n0 || j < 1 || j > n1) return kOutside;
    return static_cast<long>(grid.index(i - 1, j - 1));
  };
  if (grid.dim == 1) {
    for (int i = 0; i <= n0; ++i) f(node(i, 1), node(i + 1, 1), kOutside);
    return;
  }
  for (int i = 0; i <= n0; ++i) {
    for (int j = 0; j <= n1; ++j) {
      const long c = node(i, j);
      const long x = node(i + 1, j);
      const long y = node(i, j + 1);
      if (c == kOutside && x == kOutside && y == kOutside) continue;
      f(c, x, y);
    }
  }
}

inline double at(std::span<const double> u, long i) { return i == kOutside ? 0.0 : u[i]; }

void check_same_grid(const Problem& prob, const Field& u) {
  if (!u.grid || (u.grid != prob.grid && !(*u.grid == *prob.grid))) {
    throw ValidationError("field grid does not match the problem grid");
  }
  if (u.size() != prob.size()) throw ValidationError("field length does not match the grid");
}

void check_kernel(const Problem& prob) {
  if (!prob.kernel || !(*prob.kernel->grid == *prob.grid) || prob.kernel->s != prob.s ||
      prob.kernel->p != prob.p) {
    throw ValidationError("kernel weights do not match the problem grid or exponents");
  }
}

double local_value(const Problem& prob, std::span<const double> u, std::span<double> grad) {
  const Grid& grid = *prob.grid;
  const PowerLaw pw = prob.power();
  const double cell = grid.cell_measure();
  const double hx = grid.h[0];
  const double hy = grid.h[1];
  const double coef_scale = prob.p * cell;
  const bool want_grad = !grad.empty();
  double sum = 0.0;
  if (grid.dim == 1) {
    for_each_cell(grid, [&](long c, long x, long) {
      const double d = (at(u, x) - at(u, c)) / hx;
      double abs_p = 0.0;
      double odd_p = 0.0;
      pw.both(d, abs_p, odd_p);
      sum += abs_p;
      if (want_grad) {
        const double t = coef_scale * odd_p / hx;
        if (x != kOutside) grad[x] += t;
        if (c != kOutside) grad[c] -= t;
      }
    });
    return sum * cell;
  }
  for_each_cell(grid, [&](long c, long x, long y) {
    const double uc = at(u, c);
    const double dx = (at(u, x) - uc) / hx;
    const double dy = (at(u, y) - uc) / hy;
    const double norm = std::sqrt(dx * dx + dy * dy);
    sum += pw.abs_pow(norm);
    if (want_grad) {
      const double coef = coef_scale * pw.weight_pow(norm);
      const double gx = coef * dx / hx;
      const double gy = coef * dy / hy;
      if (x != kOutside) grad[x] += gx;
      if (y != kOutside) grad[y] += gy;
      if (c != kOutside) grad[c] -= gx + gy;
    }
  });
  return sum * cell;
}

double local_cross(const Problem& prob, std::span<const double> u, std::span<const double> v) {
  const Grid& grid = *prob.grid;
  const PowerLaw pw = prob.power();
  const double hx = grid.h[0];
  const double hy = grid.h[1];
  double sum = 0.0;
  if (grid.dim == 1) {
    for_each_cell(grid, [&](long c, long x, long) {
      const double du = (at(u, x) - at(u, c)) / hx;
      const double dv = (at(v, x) - at(v, c)) / hx;
      sum += pw.odd_pow(du) * dv;
    });
  } else {
    for_each_cell(grid, [&](long c, long x, long y) {
      const double dux = (at(u, x) - at(u, c)) / hx;
      const double duy = (at(u, y) - at(u, c)) / hy;
      const double dvx = (at(v, x) - at(v, c)) / hx;
      const double dvy = (at(v, y) - at(v, c)) / hy;
      const double norm = std::sqrt(dux * dux + duy * duy);
      sum += pw.weight_pow(norm) * (dux * dvx + duy * dvy);
    });
  }
  return sum * grid.cell_measure();
}

// Row-blocked pair sum over i < j. The inner loops carry simd reductions
// with a fixed lane layout, so results do not depend on the run.
template <class Law>
double pair_rows(const Law& law, const KernelWeights& kernel, std::span<const double> u,
                 std::span<double> grad, double gscale) {
  const std::size_t n = u.size();
  const double* up = u.data();
  double pair_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = kernel.row(i);
    const double ui = up[i];
    double row_sum = 0.0;
    if (grad.empty()) {
#pragma omp simd reduction(+ : row_sum)
      for (std::size_t j = i + 1; j < n; ++j) row_sum += law.abs_pow(ui - up[j]) * row[j];
    } else {
      double* gp = grad.data();
      double row_grad = 0.0;
#pragma omp simd reduction(+ : row_sum, row_grad)
      for (std::size_t j = i + 1; j < n; ++j) {
        double abs_p = 0.0;
        double odd_p = 0.0;
        law.both(ui - up[j], abs_p, odd_p);
        row_sum += abs_p * row[j];
        const double t = odd_p * row[j];
        row_grad += t;
        gp[j] -= gscale * t;
      }
      gp[i] += gscale * row_grad;
    }
    pair_sum += row_sum;
  }
  return pair_sum;
}

// Pair part plus exterior strips; gradient accumulated when grad is non-empty.
double nonlocal_value(const Problem& prob, std::span<const double> u, std::span<double> grad) {
  const KernelWeights& kernel = *prob.kernel;
  const PowerLaw pw = prob.power();
  const double cell = prob.grid->cell_measure();
  const bool want_grad = !grad.empty();
  const double gscale = 2.0 * prob.p;
  const double pair_sum =
      pw.visit([&](const auto& law) { return pair_rows(law, kernel, u, grad, gscale); });
  double ext_sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double abs_p = 0.0;
    double odd_p = 0.0;
    pw.both(u[i], abs_p, odd_p);
    ext_sum += abs_p * kernel.exterior[i];
    if (want_grad) grad[i] += gscale * odd_p * kernel.exterior[i] * cell;
  }
  return 2.0 * pair_sum + 2.0 * ext_sum * cell;
}

double nonlocal_cross(const Problem& prob, std::span<const double> u, std::span<const double> v) {
  const KernelWeights& kernel = *prob.kernel;
  const PowerLaw pw = prob.power();
  const std::size_t n = u.size();
  double pair_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = kernel.row(i);
    double row_sum = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      row_sum += pw.odd_pow(u[i] - u[j]) * (v[i] - v[j]) * row[j];
    }
    pair_sum += row_sum;
  }
  double ext_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) ext_sum += pw.odd_pow(u[i]) * v[i] * kernel.exterior[i];
  return 2.0 * pair_sum + 2.0 * ext_sum * prob.grid->cell_measure();
}

}  // namespace

const char* to_string(OperatorMode mode) {
  switch (mode) {
    case OperatorMode::kMixed:
      return "mixed";
    case OperatorMode::kLocalOnly:
      return "local-only";
    case OperatorMode::kNonlocalOnly:
      return "nonlocal-only";
  }
  return "mixed";
}

OperatorMode operator_mode_from_string(const std::string& name) {
  if (name == "mixed") return OperatorMode::kMixed;
  if (name == "local-only") return OperatorMode::kLocalOnly;
  if (name == "nonlocal-only") return OperatorMode::kNonlocalOnly;
  throw ValidationError("unknown operator mode '" + name +
                        "' (expected mixed, local-only or nonlocal-only)");
}

Problem make_problem(GridPtr grid, double s, double p, Field V, Field g, OperatorMode mode,
                     KernelPtr kernel) {
  if (!grid) throw ValidationError("problem requires a grid");
  validate_exponents(s, p);
  if (V.size() != grid->size() || g.size() != grid->size()) {
    throw ValidationError("V and g must have one value per grid node");
  }
  auto describe = [&](std::size_t i) {
    std::ostringstream os;
    os << "node " << i << " at (" << grid->nodes[i][0];
    if (grid->dim == 2) os << ", " << grid->nodes[i][1];
    os << ")";
    return os.str();
  };
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (!(V[i] >= 0.0) || !std::isfinite(V[i])) {
      throw ValidationError("potential V must be finite and >= 0; violated at " + describe(i));
    }
    if (!(g[i] > 0.0) || !std::isfinite(g[i])) {
      throw ValidationError("weight g must be finite and > 0; violated at " + describe(i));
    }
  }
  Problem prob;
  prob.grid = grid;
  prob.s = s;
  prob.p = p;
  V.grid = grid;
  g.grid = grid;
  prob.V = std::move(V);
  prob.g = std::move(g);
  prob.mode = mode;
  prob.kernel = kernel ? std::move(kernel) : build_weights(grid, s, p);
  check_kernel(prob);
  return prob;
}

bool within_model_hypotheses(const Problem& prob) {
  return prob.grid->dim == 2 && prob.p < prob.grid->dim && prob.mode == OperatorMode::kMixed;
}

std::vector<std::string> problem_labels(const Problem& prob) {
  std::vector<std::string> labels;
  if (prob.grid->dim == 1 || !(prob.p < prob.grid->dim)) {
    labels.emplace_back("outside model hypotheses (N = 2, p < N)");
  }
  if (prob.mode != OperatorMode::kMixed) {
    labels.emplace_back(std::string("non-paper operator mode: ") + to_string(prob.mode));
  }
  return labels;
}

FormBreakdown evaluate_forms(const Problem& prob, std::span<const double> u) {
  FormBreakdown f;
  if (prob.local_active()) f.local = local_value(prob, u, {});
  if (prob.nonlocal_active()) f.nonlocal = nonlocal_value(prob, u, {});
  const PowerLaw pw = prob.power();
  const double cell = prob.grid->cell_measure();
  double pot = 0.0;
  double wt = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = pw.abs_pow(u[i]);
    pot += prob.V[i] * a;
    wt += prob.g[i] * a;
  }
  f.potential = pot * cell;
  f.weight = wt * cell;
  return f;
}

FormBreakdown evaluate_forms(const Problem& prob, const Field& u) {
  check_same_grid(prob, u);
  return evaluate_forms(prob, std::span<const double>(u.values));
}

double local_energy(const Problem& prob, const Field& u) {
  check_same_grid(prob, u);
  return prob.local_active() ? local_value(prob, u.values, {}) : 0.0;
}

double nonlocal_energy(const Problem& prob, const Field& u) {
  check_same_grid(prob, u);
  check_kernel(prob);
  return prob.nonlocal_active() ? nonlocal_value(prob, u.values, {}) : 0.0;
}

double h_form(const Problem& prob, const Field& u, const Field& v) {
  check_same_grid(prob, u);
  check_same_grid(prob, v);
  double total = 0.0;
  if (prob.local_active()) total += local_cross(prob, u.values, v.values);
  if (prob.nonlocal_active()) total += nonlocal_cross(prob, u.values, v.values);
  return total;
}

double rayleigh_quotient(const Problem& prob, std::span<const double> u) {
  const FormBreakdown f = evaluate_forms(prob, u);
  if (!(f.weight > 0.0)) {
    throw ValidationError("Rayleigh quotient undefined: weight term vanishes");
  }
  return f.numerator() / f.weight;
}

double rayleigh_quotient(const Problem& prob, const Field& u) {
  check_same_grid(prob, u);
  return rayleigh_quotient(prob, std::span<const double>(u.values));
}

void evaluate_with_gradients(const Problem& prob, std::span<const double> u, Evaluation& out) {
  const std::size_t n = u.size();
  out.grad_num.assign(n, 0.0);
  out.grad_den.assign(n, 0.0);
  out.forms = FormBreakdown{};
  if (prob.local_active()) out.forms.local = local_value(prob, u, out.grad_num);
  if (prob.nonlocal_active()) out.forms.nonlocal = nonlocal_value(prob, u, out.grad_num);
  const PowerLaw pw = prob.power();
  const double cell = prob.grid->cell_measure();
  double pot = 0.0;
  double wt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double abs_p = 0.0;
    double odd_p = 0.0;
    pw.both(u[i], abs_p, odd_p);
    pot += prob.V[i] * abs_p;
    wt += prob.g[i] * abs_p;
    out.grad_num[i] += prob.p * prob.V[i] * odd_p * cell;
    out.grad_den[i] = prob.p * prob.g[i] * odd_p * cell;
  }
  out.forms.potential = pot * cell;
  out.forms.weight = wt * cell;
}

Field grad_numerator(const Problem& prob, const Field& u) {
  check_same_grid(prob, u);
  Evaluation ev;
  evaluate_with_gradients(prob, u.values, ev);
  return Field(prob.grid, std::move(ev.grad_num));
}

Field grad_denominator(const Problem& prob, const Field& u) {
  check_same_grid(prob, u);
  Evaluation ev;
  evaluate_with_gradients(prob, u.values, ev);
  return Field(prob.grid, std::move(ev.grad_den));
}

double residual(const Problem& prob, double lambda, std::span<const double> u) {
  Evaluation ev;
  evaluate_with_gradients(prob, u, ev);
  if (std::fabs(ev.forms.weight - 1.0) > 1e-8) {
    throw ValidationError("residual requires a field normalized to unit weight term");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    worst = std::max(worst, std::fabs(ev.grad_num[i] - lambda * ev.grad_den[i]));
  }
  return worst / std::max(1.0, std::fabs(lambda));
}

double residual(const Problem& prob, double lambda, const Field& u) {
  check_same_grid(prob, u);
  return residual(prob, lambda, std::span<const double>(u.values));
}

void normalize_weight(const Problem& prob, std::span<double> u) {
  const PowerLaw pw = prob.power();
  double wt = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) wt += prob.g[i] * pw.abs_pow(u[i]);
  wt *= prob.grid->cell_measure();
  if (!(wt > 0.0) || !std::isfinite(wt)) {
    throw ValidationError("cannot normalize a field with vanishing weight term");
  }
  const double scale = std::pow(wt, -1.0 / prob.p);
  for (double& v : u) v *= scale;
}

Field normalized(const Problem& prob, Field u) {
  check_same_grid(prob, u);
  normalize_weight(prob, u.values);
  return u;
}

}  // namespace mpeig
