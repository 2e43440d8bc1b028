#include "mpeig/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mpeig/error.hpp"

namespace mpeig {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kStepFloor = 1e-10;
constexpr double kNoiseFloor = 8.0 * std::numeric_limits<double>::epsilon();

void add_edge(DenseSystem& sys, long a, long b, double c) {
  // a is interior; b < 0 marks an exterior neighbour.
  const std::size_t n = sys.n;
  sys.A[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(a)] += c;
  if (b < 0) return;
  sys.A[static_cast<std::size_t>(b) * n + static_cast<std::size_t>(b)] += c;
  sys.A[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)] -= c;
  sys.A[static_cast<std::size_t>(b) * n + static_cast<std::size_t>(a)] -= c;
}

}  // namespace

DenseSystem assemble_p2(const Problem& prob) {
  if (prob.p != 2.0) throw ValidationError("dense oracle requires p = 2");
  const Grid& grid = *prob.grid;
  const std::size_t n = grid.size();
  const double cell = grid.cell_measure();
  DenseSystem sys;
  sys.n = n;
  sys.A.assign(n * n, 0.0);
  sys.B.resize(n);

  if (prob.local_active()) {
    const int n0 = grid.n_per_axis[0];
    const int n1 = grid.n_per_axis[1];
    for (int i = 0; i < n0; ++i) {
      for (int j = 0; j < n1; ++j) {
        const long a = static_cast<long>(grid.index(i, j));
        for (int axis = 0; axis < grid.dim; ++axis) {
          const double c = cell / (grid.h[axis] * grid.h[axis]);
          const int ip = axis == 0 ? i + 1 : i;
          const int jp = axis == 0 ? j : j + 1;
          const bool inside = axis == 0 ? ip < n0 : jp < n1;
          add_edge(sys, a, inside ? static_cast<long>(grid.index(ip, jp)) : -1, c);
          // Link to the exterior on the lower side.
          if ((axis == 0 ? i : j) == 0) add_edge(sys, a, -1, c);
        }
      }
    }
  }

  if (prob.nonlocal_active()) {
    const KernelWeights& k = *prob.kernel;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = k.pair[i * n + j];
        sys.A[i * n + j] -= 2.0 * w;
        row += w;
      }
      sys.A[i * n + i] += 2.0 * row + 2.0 * k.exterior[i] * cell;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    sys.A[i * n + i] += prob.V[i] * cell;
    sys.B[i] = prob.g[i] * cell;
  }
  return sys;
}

std::vector<DensePair> smallest_eigenpairs(const DenseSystem& sys, std::size_t k) {
  const std::size_t n = sys.n;
  if (k < 1 || k > n) throw ValidationError("requested eigenpair count must lie in [1, n]");
  for (double b : sys.B) {
    if (!(b > 0.0)) throw ValidationError("B must have strictly positive diagonal");
  }

  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) scale[i] = 1.0 / std::sqrt(sys.B[i]);
  std::vector<double> c(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = scale[i] * sys.a(i, j) * scale[j];
  }
  // Symmetrize away assembly rounding.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (c[i * n + j] + c[j * n + i]);
      c[i * n + j] = m;
      c[j * n + i] = m;
    }
  }
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double total = 0.0;
  for (double x : c) total += x * x;
  const double target = std::numeric_limits<double>::epsilon() * std::sqrt(total);

  bool done = false;
  for (int sweep = 0; sweep < kMaxSweeps && !done; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += c[i * n + j] * c[i * n + j];
    }
    if (std::sqrt(2.0 * off) <= target) {
      done = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = c[p * n + q];
        if (apq == 0.0) continue;
        const double app = c[p * n + p];
        const double aqq = c[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::fabs(theta) + std::hypot(1.0, theta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * cs;
        for (std::size_t r = 0; r < n; ++r) {
          const double crp = c[r * n + p];
          const double crq = c[r * n + q];
          c[r * n + p] = cs * crp - sn * crq;
          c[r * n + q] = sn * crp + cs * crq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double cpr = c[p * n + r];
          const double cqr = c[q * n + r];
          c[p * n + r] = cs * cpr - sn * cqr;
          c[q * n + r] = sn * cpr + cs * cqr;
        }
        c[p * n + q] = 0.0;
        c[q * n + p] = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v[r * n + p];
          const double vrq = v[r * n + q];
          v[r * n + p] = cs * vrp - sn * vrq;
          v[r * n + q] = sn * vrp + cs * vrq;
        }
      }
    }
  }
  if (!done) throw ConvergenceError("dense Jacobi eigensolver did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return c[a * n + a] < c[b * n + b]; });

  std::vector<DensePair> out;
  out.reserve(k);
  for (std::size_t m = 0; m < k; ++m) {
    const std::size_t col = order[m];
    DensePair pair;
    pair.lambda = c[col * n + col];
    pair.x.resize(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pair.x[i] = scale[i] * v[i * n + col];
      sum += pair.x[i];
    }
    if (sum < 0.0) {
      for (double& x : pair.x) x = -x;
    }
    out.push_back(std::move(pair));
  }
  return out;
}

double dense_residual(const DenseSystem& sys, double lambda, const std::vector<double>& x) {
  if (x.size() != sys.n) throw ValidationError("vector length does not match the system");
  double worst = 0.0;
  for (std::size_t i = 0; i < sys.n; ++i) {
    double r = -lambda * sys.B[i] * x[i];
    for (std::size_t j = 0; j < sys.n; ++j) r += sys.a(i, j) * x[j];
    worst = std::max(worst, std::fabs(r));
  }
  return worst;
}

BruteForceResult brute_force_quotient_min(const Problem& prob, int n_restarts, long budget,
                                          std::uint64_t seed) {
  const std::size_t n = prob.size();
  if (n > kBruteForceMaxNodes) {
    throw ValidationError("brute-force oracle is limited to " +
                          std::to_string(kBruteForceMaxNodes) + " nodes, grid has " +
                          std::to_string(n));
  }
  if (n_restarts < 1) throw ValidationError("n_restarts must be >= 1");
  if (budget < 1) throw ValidationError("budget must be >= 1");

  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> draw(-1.0, 1.0);
  BruteForceResult best;
  best.value = std::numeric_limits<double>::infinity();
  long used = 0;
  int completed = 0;

  for (int r = 0; r < n_restarts && used < budget; ++r) {
    std::vector<double> u(n);
    for (double& x : u) x = draw(engine);
    if (std::all_of(u.begin(), u.end(), [](double x) { return x == 0.0; })) u[0] = 1.0;
    normalize_weight(prob, u);
    double value = rayleigh_quotient(prob, std::span<const double>(u));
    ++used;

    double top = 0.0;
    for (double x : u) top = std::max(top, std::fabs(x));
    std::vector<double> step(n, 0.25 * top);
    bool finished = false;
    while (used < budget) {
      bool any = false;
      for (std::size_t k = 0; k < n && used < budget; ++k) {
        if (step[k] < kStepFloor * top) continue;
        any = true;
        bool moved = false;
        for (double dir : {1.0, -1.0}) {
          const double old = u[k];
          u[k] = old + dir * step[k];
          const double trial = rayleigh_quotient(prob, std::span<const double>(u));
          ++used;
          // Below a few ulps the comparison is rounding noise.
          if (trial < value - kNoiseFloor * std::fabs(value)) {
            value = trial;
            moved = true;
            break;
          }
          u[k] = old;
        }
        step[k] *= moved ? 2.0 : 0.5;
      }
      if (!any) {
        finished = true;
        break;
      }
      normalize_weight(prob, u);
      value = rayleigh_quotient(prob, std::span<const double>(u));
      ++used;
      // R is 0-homogeneous: rescale steps with the iterate.
      double new_top = 0.0;
      for (double x : u) new_top = std::max(new_top, std::fabs(x));
      for (double& s : step) s *= new_top / top;
      top = new_top;
    }
    if (value < best.value) {
      best.value = value;
      best.u = u;
    }
    if (finished) ++completed;
  }
  best.evaluations = used;
  best.exhausted = completed < n_restarts;
  return best;
}

}  // namespace mpeig
