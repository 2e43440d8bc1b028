#include "mpeig/eigensolver.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "mpeig/error.hpp"

namespace mpeig {

namespace {

constexpr std::uint64_t kSecondLevelStream = 0x5ec0'0000ULL;
constexpr double kStartNoise = 0.01;
constexpr double kThetaTolerance = 1e-9;
// Full 64-sample scans of the circle happen at least this often; in between
// the maximizer is tracked locally.
constexpr int kRescanInterval = 8;
// Iterations without a new best residual (on a flat quotient) before the
// step cap is halved, and how many halvings are allowed.
constexpr int kStallWindow = 20;
constexpr int kMaxCapCuts = 60;

struct DescentResult {
  std::vector<double> u;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
  std::string notes;
};

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Relative quotient change below which two evaluations are treated as
// equal up to rounding.
constexpr double kQuotientResolution = 64.0 * std::numeric_limits<double>::epsilon();

double stationarity(const Evaluation& ev, double quotient, const std::vector<bool>* mask) {
  double m = 0.0;
  for (std::size_t i = 0; i < ev.grad_num.size(); ++i) {
    if (mask != nullptr && !(*mask)[i]) continue;
    m = std::max(m, std::fabs(ev.grad_num[i] - quotient * ev.grad_den[i]));
  }
  return m / std::max(1.0, std::fabs(quotient));
}

void canonicalize(std::vector<double>& u) {
  const double total = std::accumulate(u.begin(), u.end(), 0.0);
  if (total < 0.0) {
    for (double& v : u) v = -v;
  }
}

// Projected gradient descent on R restricted to the admissible nodes. The
// first trial step of each line search is the Barzilai-Borwein estimate
// from the previous move; Armijo backtracking keeps the trace monotone.
DescentResult descend(const Problem& prob, std::vector<double> u, const std::vector<bool>* mask,
                      const SolverConfig& cfg) {
  const std::size_t n = u.size();
  const double cell = prob.grid->cell_measure();
  auto admissible = [&](std::size_t i) { return mask == nullptr || (*mask)[i]; };

  normalize_weight(prob, u);
  Evaluation ev;
  evaluate_with_gradients(prob, u, ev);
  double quotient = ev.forms.numerator() / ev.forms.weight;

  DescentResult out;
  out.trace.push_back(quotient);
  std::vector<double> r(n);
  std::vector<double> r_prev(n);
  std::vector<double> u_prev(n);
  std::vector<double> trial(n);
  Evaluation trial_ev;
  double step = cfg.step0;
  double best_res = std::numeric_limits<double>::infinity();
  double cap = std::numeric_limits<double>::infinity();
  int stalled = 0;
  int cuts = 0;
  double change = std::numeric_limits<double>::infinity();
  double res = 0.0;

  for (int it = 0;; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = admissible(i) ? ev.grad_num[i] - quotient * ev.grad_den[i] : 0.0;
    }
    res = max_abs(r) / std::max(1.0, std::fabs(quotient));
    out.iterations = it;
    if (res <= cfg.tol_residual) {
      out.converged = true;
      break;
    }
    if (it >= cfg.max_iters) {
      out.notes = "max_iters reached before the residual tolerance";
      break;
    }
    // Near kinks of |t|^(p-2) t (p < 2) a fixed step oscillates with an
    // amplitude set by the step, so the cap shrinks when progress stops.
    if (res < best_res) {
      best_res = res;
      stalled = 0;
    } else if (change <= cfg.tol_quotient && ++stalled >= kStallWindow) {
      if (++cuts > kMaxCapCuts) {
        out.notes = "residual stalled above the residual tolerance";
        break;
      }
      cap = 0.5 * std::min(cap, step);
      stalled = 0;
      best_res = res;
    }
    if (it > 0) {
      double ss = 0.0;
      double sy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double si = u[i] - u_prev[i];
        ss += si * si;
        sy += si * (r[i] - r_prev[i]);
      }
      if (sy > 0.0) step = ss / sy * cell;
    }
    step = std::min(step, cap);
    // Direction in units of the cell measure so that step sizes are
    // comparable across grids.
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += r[i] * r[i];
    slope /= cell;

    double alpha = step;
    bool accepted = false;
    double trial_quotient = quotient;
    while (alpha > 1e-300) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] - alpha * r[i] / cell;
      normalize_weight(prob, trial);
      evaluate_with_gradients(prob, trial, trial_ev);
      trial_quotient = trial_ev.forms.numerator() / trial_ev.forms.weight;
      const double predicted = cfg.armijo * alpha * slope;
      if (trial_quotient <= quotient - predicted) {
        accepted = true;
        break;
      }
      // Below floating resolution the sufficient-decrease test is
      // meaningless; fall back to the residual as merit.
      if (predicted < kQuotientResolution * std::fabs(quotient)) {
        const double tie = quotient + kQuotientResolution * std::fabs(quotient);
        if (trial_quotient <= quotient ||
            (trial_quotient <= tie && stationarity(trial_ev, trial_quotient, mask) < res)) {
          accepted = true;
          break;
        }
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) {
      out.notes = "line search could not decrease the quotient";
      break;
    }
    change = (quotient - trial_quotient) / std::fabs(quotient);
    u_prev.swap(u);
    u.swap(trial);
    r_prev.swap(r);
    std::swap(ev, trial_ev);
    quotient = trial_quotient;
    out.trace.push_back(quotient);
    step = alpha / cfg.backtrack;
  }
  out.u = std::move(u);
  out.lambda = quotient;
  out.residual = res;
  return out;
}

std::vector<double> positive_start(const Problem& prob, std::uint64_t seed, std::uint64_t stream,
                                   const std::vector<bool>* mask) {
  std::vector<double> u = uniform_samples(seed, stream, prob.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = (mask == nullptr || (*mask)[i]) ? 0.5 + u[i] : 0.0;
  }
  return u;
}

EigenPair to_pair(const Problem& prob, DescentResult&& d) {
  EigenPair pair;
  canonicalize(d.u);
  pair.lambda = d.lambda;
  pair.u = Field(prob.grid, std::move(d.u));
  pair.residual = d.residual;
  pair.iterations = d.iterations;
  pair.converged = d.converged;
  pair.trace = std::move(d.trace);
  pair.notes = std::move(d.notes);
  return pair;
}

EigenPair best_of_restarts(const Problem& prob, const std::vector<bool>* mask,
                           const SolverConfig& cfg) {
  cfg.validate();
  EigenPair best;
  bool have = false;
  for (int r = 0; r < cfg.restarts; ++r) {
    auto start = positive_start(prob, cfg.seed, static_cast<std::uint64_t>(r), mask);
    EigenPair pair = to_pair(prob, descend(prob, std::move(start), mask, cfg));
    if (!have || pair.lambda < best.lambda) {
      best = std::move(pair);
      have = true;
    }
  }
  return best;
}

// Weighted L2 projection removing the u1 component; leaves span{u1, w} intact.
void remove_component(const Problem& prob, std::span<const double> u1, std::span<double> w) {
  double wu = 0.0;
  double uu = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    wu += prob.g[i] * w[i] * u1[i];
    uu += prob.g[i] * u1[i] * u1[i];
  }
  const double c = wu / uu;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * u1[i];
}

double weight_term(const Problem& prob, std::span<const double> u) {
  const PowerLaw pw = prob.power();
  double wt = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) wt += prob.g[i] * pw.abs_pow(u[i]);
  return wt * prob.grid->cell_measure();
}

struct CircleMax {
  double value = 0.0;
  double theta = 0.0;
};

double circle_value(const Problem& prob, std::span<const double> u1, std::span<const double> w,
                    double theta, std::vector<double>& z) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = c * u1[i] + s * w[i];
  return rayleigh_quotient(prob, std::span<const double>(z));
}

// Golden-section search for the max of R on the circle over [lo, hi]; the
// result is never worse than the supplied incumbent.
CircleMax refine(const Problem& prob, std::span<const double> u1, std::span<const double> w,
                 double lo, double hi, CircleMax incumbent, std::vector<double>& z) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = circle_value(prob, u1, w, x1, z);
  double f2 = circle_value(prob, u1, w, x2, z);
  while (b - a > kThetaTolerance) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = circle_value(prob, u1, w, x2, z);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = circle_value(prob, u1, w, x1, z);
    }
  }
  CircleMax out = incumbent;
  if (f1 > out.value) out = {f1, x1};
  if (f2 > out.value) out = {f2, x2};
  return out;
}

// max over theta in [0, pi) of R(cos(theta) u1 + sin(theta) w): uniform
// samples, then golden-section refinement around the best one (R is even,
// so theta is effectively periodic with period pi).
CircleMax circle_max(const Problem& prob, std::span<const double> u1, std::span<const double> w,
                     std::vector<double>& z) {
  const double dtheta = std::numbers::pi / kThetaSamples;
  CircleMax best{-1.0, 0.0};
  for (int k = 0; k < kThetaSamples; ++k) {
    const double v = circle_value(prob, u1, w, k * dtheta, z);
    if (v > best.value) best = {v, k * dtheta};
  }
  return refine(prob, u1, w, best.theta - dtheta, best.theta + dtheta, best, z);
}

// Maximum near a previous maximizer, widening the bracket while the
// optimum sits on its edge.
CircleMax local_circle_max(const Problem& prob, std::span<const double> u1,
                           std::span<const double> w, double theta, double half_width,
                           std::vector<double>& z) {
  const double dtheta = std::numbers::pi / kThetaSamples;
  half_width = std::clamp(half_width, kThetaTolerance, dtheta);
  CircleMax centre{circle_value(prob, u1, w, theta, z), theta};
  for (;;) {
    CircleMax out = refine(prob, u1, w, theta - half_width, theta + half_width, centre, z);
    const bool on_edge = std::fabs(out.theta - theta) > 0.9 * half_width;
    if (!on_edge || half_width >= dtheta) return out;
    half_width = std::min(4.0 * half_width, dtheta);
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 0) throw ValidationError("max_iters must be >= 0");
  if (!(tol_quotient > 0.0)) throw ValidationError("tol_quotient must be > 0");
  if (!(tol_residual > 0.0)) throw ValidationError("tol_residual must be > 0");
  if (!(step0 > 0.0)) throw ValidationError("step0 must be > 0");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ValidationError("backtrack must lie in (0,1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ValidationError("armijo must lie in (0,1)");
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
}

std::vector<double> uniform_samples(std::uint64_t seed, std::uint64_t stream, std::size_t count) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 engine(seq);
  std::vector<double> out(count);
  for (double& x : out) x = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  return out;
}

EigenPair solve_principal(const Problem& prob, const SolverConfig& cfg) {
  return best_of_restarts(prob, nullptr, cfg);
}

std::vector<EigenPair> solve_principal_restarts(const Problem& prob, const SolverConfig& cfg) {
  cfg.validate();
  std::vector<EigenPair> pairs;
  pairs.reserve(static_cast<std::size_t>(cfg.restarts));
  for (int r = 0; r < cfg.restarts; ++r) {
    auto start = positive_start(prob, cfg.seed, static_cast<std::uint64_t>(r), nullptr);
    pairs.push_back(to_pair(prob, descend(prob, std::move(start), nullptr, cfg)));
  }
  return pairs;
}

EigenPair solve_principal_on_subdomain(const Problem& prob, const std::vector<bool>& mask,
                                       const SolverConfig& cfg) {
  if (mask.size() != prob.size()) throw ValidationError("mask length does not match the grid");
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw ValidationError("empty sub-domain mask");
  }
  return best_of_restarts(prob, &mask, cfg);
}

EigenPair solve_second(const Problem& prob, const SolverConfig& cfg, const EigenPair& first) {
  cfg.validate();
  if (!first.converged) throw ValidationError("second level requires a converged principal pair");
  const std::size_t n = prob.size();
  const double cell = prob.grid->cell_measure();
  const std::vector<double> u1 = normalized(prob, first.u).values;

  // Start from u1 times a linear function vanishing at the box centre along
  // a seeded direction, plus small noise: sign-changing with one nodal line.
  const Grid& grid = *prob.grid;
  std::vector<double> w = uniform_samples(cfg.seed, kSecondLevelStream, n + 1);
  const double angle = 2.0 * std::numbers::pi * w[n];
  const Point dir{std::cos(angle), grid.dim == 2 ? std::sin(angle) : 0.0};
  double top = 0.0;
  for (double x : u1) top = std::max(top, std::fabs(x));
  for (std::size_t i = 0; i < n; ++i) {
    double lin = 0.0;
    for (int k = 0; k < grid.dim; ++k) {
      const double centre = 0.5 * (grid.lower[k] + grid.upper[k]);
      lin += dir[k] * (grid.nodes[i][k] - centre) / (grid.upper[k] - grid.lower[k]);
    }
    w[i] = u1[i] * lin + kStartNoise * top * (2.0 * w[i] - 1.0);
  }
  w.resize(n);
  remove_component(prob, u1, w);
  normalize_weight(prob, w);

  std::vector<double> z(n);
  std::vector<double> zn(n);
  std::vector<double> grad(n);
  std::vector<double> grad_prev(n);
  std::vector<double> w_prev(n);
  std::vector<double> trial(n);
  Evaluation ev;

  CircleMax cm = circle_max(prob, u1, w, z);
  EigenPair out;
  out.trace.push_back(cm.value);
  double step = cfg.step0;
  double best_res = std::numeric_limits<double>::infinity();
  double cap = std::numeric_limits<double>::infinity();
  int stalled = 0;
  int cuts = 0;
  double change = std::numeric_limits<double>::infinity();
  double res = 0.0;

  auto maximizer = [&](double theta, std::vector<double>& dst) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t i = 0; i < n; ++i) dst[i] = c * u1[i] + s * w[i];
  };

  Evaluation probe;
  auto circle_residual = [&](std::span<const double> wv, double theta) {
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    for (std::size_t i = 0; i < n; ++i) zn[i] = c * u1[i] + sn * wv[i];
    normalize_weight(prob, zn);
    evaluate_with_gradients(prob, zn, probe);
    return stationarity(probe, probe.forms.numerator() / probe.forms.weight, nullptr);
  };

  double theta_move = std::numbers::pi / kThetaSamples;
  int last_scan = 0;
  auto rescan = [&]() {
    last_scan = out.iterations;
    const CircleMax full = circle_max(prob, u1, w, z);
    if (full.value > cm.value * (1.0 + kQuotientResolution)) {
      cm = full;
      return true;
    }
    return false;
  };

  for (int it = 0;; ++it) {
    out.iterations = it;
    if (it - last_scan >= kRescanInterval) rescan();
    // Danskin: d/dw max_theta R(z_theta) = sin(theta*) grad R(z_theta*).
    maximizer(cm.theta, z);
    zn = z;
    const double z_norm = std::pow(weight_term(prob, z), 1.0 / prob.p);
    for (double& x : zn) x /= z_norm;
    evaluate_with_gradients(prob, zn, ev);
    const double rq = ev.forms.numerator() / ev.forms.weight;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = ev.grad_num[i] - rq * ev.grad_den[i];
      worst = std::max(worst, std::fabs(gi));
      grad[i] = std::sin(cm.theta) * gi / z_norm;
    }
    res = worst / std::max(1.0, std::fabs(rq));
    if (res <= cfg.tol_residual) {
      // Certify with a full scan; a better maximizer elsewhere on the
      // circle restarts the descent from there.
      if (last_scan != it && rescan()) continue;
      out.converged = true;
      break;
    }
    if (it >= cfg.max_iters) {
      out.notes = "max_iters reached before the residual tolerance";
      break;
    }
    if (res < best_res) {
      best_res = res;
      stalled = 0;
    } else if (change <= cfg.tol_quotient && ++stalled >= kStallWindow) {
      if (++cuts > kMaxCapCuts) {
        out.notes = "minimax residual stalled above the residual tolerance";
        break;
      }
      cap = 0.5 * std::min(cap, step);
      stalled = 0;
      best_res = res;
    }
    if (it > 0) {
      double ss = 0.0;
      double sy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double si = w[i] - w_prev[i];
        ss += si * si;
        sy += si * (grad[i] - grad_prev[i]);
      }
      if (sy > 0.0) step = ss / sy * cell;
    }
    step = std::min(step, cap);
    double slope = 0.0;
    for (double gi : grad) slope += gi * gi;
    slope /= cell;
    if (!(slope > 0.0)) {
      out.notes = "vanishing minimax gradient";
      break;
    }

    double alpha = step;
    bool accepted = false;
    CircleMax trial_cm = cm;
    while (alpha > 1e-300) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] - alpha * grad[i] / cell;
      remove_component(prob, u1, trial);
      normalize_weight(prob, trial);
      trial_cm = local_circle_max(prob, u1, trial, cm.theta, 4.0 * theta_move, z);
      const double predicted = cfg.armijo * alpha * slope;
      if (trial_cm.value <= cm.value - predicted) {
        accepted = true;
        break;
      }
      if (predicted < kQuotientResolution * std::fabs(cm.value)) {
        const double tie = cm.value + kQuotientResolution * std::fabs(cm.value);
        if (trial_cm.value <= cm.value ||
            (trial_cm.value <= tie && circle_residual(trial, trial_cm.theta) < res)) {
          accepted = true;
          break;
        }
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) {
      out.notes = "line search could not decrease the minimax value";
      break;
    }
    change = (cm.value - trial_cm.value) / std::fabs(cm.value);
    theta_move = std::fabs(trial_cm.theta - cm.theta);
    w_prev.swap(w);
    w.swap(trial);
    grad_prev.swap(grad);
    cm = trial_cm;
    out.trace.push_back(cm.value);
    step = alpha / cfg.backtrack;
  }

  maximizer(cm.theta, zn);
  normalize_weight(prob, zn);
  canonicalize(zn);
  out.lambda = cm.value;
  out.u = Field(prob.grid, zn);
  out.residual = res;

  std::ostringstream notes;
  notes << "minimax upper-bound estimate over symmetric circles through u1";
  if (!out.notes.empty()) notes << "; " << out.notes;
  const bool above = out.lambda > first.lambda * (1.0 + 1e-9);
  const bool changes_sign =
      nodal_measure(out.u, Sign::kPositive) > 0.0 && nodal_measure(out.u, Sign::kNegative) > 0.0;
  if (!above || !changes_sign) {
    notes << "; no sign-changing candidate above lambda1 found";
    out.converged = false;
  }
  out.notes = notes.str();
  return out;
}

}  // namespace mpeig
