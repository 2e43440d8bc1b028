#include "mpeig/properties.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "mpeig/error.hpp"

namespace mpeig {

namespace {

constexpr std::uint64_t kConvexityStream = 0xc0'0000ULL;
constexpr double kComparisonTolerance = 1e-10;
constexpr double kConvexityTolerance = 1e-10;
constexpr double kWeightTolerance = 1e-12;
constexpr int kMaxMoserHalvings = 400;

class Digest {
 public:
  Digest& add(std::uint64_t x) {
    for (int b = 0; b < 8; ++b) {
      h_ ^= (x >> (8 * b)) & 0xFFu;
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Digest& add(double x) { return add(std::bit_cast<std::uint64_t>(x)); }
  Digest& add(std::span<const double> v) {
    for (double x : v) add(x);
    return *this;
  }
  Digest& add(const std::string& s) {
    for (unsigned char c : s) {
      h_ ^= c;
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Digest& add(const Problem& prob) {
    add(prob.grid->hash()).add(prob.s).add(prob.p);
    add(std::span<const double>(prob.V.values)).add(std::span<const double>(prob.g.values));
    return add(static_cast<std::uint64_t>(prob.mode));
  }
  Digest& add(const SolverConfig& c) {
    add(static_cast<std::uint64_t>(c.max_iters)).add(c.tol_quotient).add(c.tol_residual);
    add(c.step0).add(c.backtrack).add(c.armijo).add(c.seed);
    return add(static_cast<std::uint64_t>(c.restarts));
  }
  std::string hex() const {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h_;
    return os.str();
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

PropertyReport make_report(const std::string& name, const Digest& d) {
  PropertyReport r;
  r.name = name;
  r.digest = d.hex();
  return r;
}

void add_note(PropertyReport& r, const std::string& note) {
  if (!r.notes.empty()) r.notes += "; ";
  r.notes += note;
}

std::vector<double> canonical(const Field& u) {
  std::vector<double> v = u.values;
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total < 0.0) {
    for (double& x : v) x = -x;
  }
  return v;
}

// Forward-difference cells with zero extension, mirroring the local energy:
// f(c, x, y) receives node indices or -1 for exterior points.
void for_cells(const Grid& grid, const std::function<void(long, long, long)>& f) {
  const int n0 = grid.n_per_axis[0];
  const int n1 = grid.n_per_axis[1];
  auto node = [&](int i, int j) -> long {
    if (i < 1 || i > n0 || j < 1 || j > n1) return -1;
    return static_cast<long>(grid.index(i - 1, j - 1));
  };
  if (grid.dim == 1) {
    for (int i = 0; i <= n0; ++i) f(node(i, 1), node(i + 1, 1), -1);
    return;
  }
  for (int i = 0; i <= n0; ++i) {
    for (int j = 0; j <= n1; ++j) {
      const long c = node(i, j);
      const long x = node(i + 1, j);
      const long y = node(i, j + 1);
      if (c < 0 && x < 0 && y < 0) continue;
      f(c, x, y);
    }
  }
}

double at(std::span<const double> u, long i) { return i < 0 ? 0.0 : u[static_cast<std::size_t>(i)]; }

Point cell_gradient(const Grid& grid, std::span<const double> u, long c, long x, long y) {
  const double uc = at(u, c);
  Point g{(at(u, x) - uc) / grid.h[0], 0.0};
  if (grid.dim == 2) g[1] = (at(u, y) - uc) / grid.h[1];
  return g;
}

double gauss16(const std::function<double(double)>& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return boost::math::quadrature::gauss<double, 16>::integrate(f, lo, hi);
}

// Integral of f between c and end with t = c + (end - c) s^2, which absorbs
// a |t - c|^(p - 2) singularity at c.
double graded16(const std::function<double(double)>& f, double c, double end) {
  const double len = end - c;
  if (len == 0.0) return 0.0;
  return 2.0 * std::fabs(len) * gauss16([&](double s) { return s * f(c + len * s * s); }, 0.0, 1.0);
}

double split_integral(const std::function<double(double)>& f, double split) {
  if (split >= 0.0 && split <= 1.0) return graded16(f, split, 0.0) + graded16(f, split, 1.0);
  return gauss16(f, 0.0, 1.0);
}

PropertyReport simplicity_from(const std::vector<EigenPair>& pairs, const Problem& prob,
                               const Digest& digest) {
  PropertyReport r = make_report("simplicity", digest);
  const std::size_t count = pairs.size();
  int converged = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double max_distance = 0.0;
  for (const EigenPair& pair : pairs) {
    if (pair.converged) ++converged;
    lo = std::min(lo, pair.lambda);
    hi = std::max(hi, pair.lambda);
    max_distance = std::max(max_distance, lp_distance(prob, pair.u, pairs.front().u));
  }
  const double spread = (hi - lo) / std::fabs(lo);
  r.measured = {{"restarts", static_cast<double>(count)},
                {"converged", static_cast<double>(converged)},
                {"lambda_min", lo},
                {"lambda_max", hi},
                {"lambda_spread", spread},
                {"max_lp_distance", max_distance}};
  const bool all_converged = converged == static_cast<int>(count);
  r.verdict = all_converged && spread <= kSimplicityTolerance &&
                      max_distance <= kSimplicityTolerance
                  ? Verdict::kPass
                  : Verdict::kFail;
  for (std::size_t k = 0; k < count; ++k) {
    if (!pairs[k].converged) {
      add_note(r, "restart " + std::to_string(k) + " not converged: " + pairs[k].notes +
                      " (residual " + std::to_string(pairs[k].residual) + ", " +
                      std::to_string(pairs[k].iterations) + " iterations)");
    }
  }
  return r;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kNotApplicable:
      return "not-applicable";
  }
  return "fail";
}

double PropertyReport::value(const std::string& key) const {
  for (const auto& [k, v] : measured) {
    if (k == key) return v;
  }
  throw ValidationError("report '" + name + "' has no measurement '" + key + "'");
}

bool PropertyReport::has(const std::string& key) const {
  return std::any_of(measured.begin(), measured.end(),
                     [&](const auto& kv) { return kv.first == key; });
}

double segment_weight(double p, double a, double b) {
  if (p == 2.0) return 1.0;
  if (a == b) return a == 0.0 ? 0.0 : std::pow(std::fabs(a), p - 2.0);
  const double e = p - 2.0;
  auto f = [&](double t) {
    const double x = std::fabs(a + t * (b - a));
    return x == 0.0 ? 0.0 : std::pow(x, e);
  };
  return split_integral(f, a / (a - b));
}

double segment_weight(double p, const Point& a, const Point& b, int dim) {
  if (dim == 1) return segment_weight(p, a[0], b[0]);
  if (p == 2.0) return 1.0;
  const double dx = b[0] - a[0];
  const double dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) {
    const double n = std::hypot(a[0], a[1]);
    return n == 0.0 ? 0.0 : std::pow(n, p - 2.0);
  }
  const double e = p - 2.0;
  auto f = [&](double t) {
    const double x = std::hypot(a[0] + t * dx, a[1] + t * dy);
    return x == 0.0 ? 0.0 : std::pow(x, e);
  };
  return split_integral(f, -(a[0] * dx + a[1] * dy) / len2);
}

double lp_distance(const Problem& prob, const Field& a, const Field& b) {
  if (a.size() != prob.size() || b.size() != prob.size()) {
    throw ValidationError("field length does not match the grid");
  }
  const PowerLaw pw = prob.power();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += pw.abs_pow(a[i] - b[i]);
  return std::pow(sum * prob.grid->cell_measure(), 1.0 / prob.p);
}

PropertyReport check_positivity(const EigenPair& pair) {
  Digest d;
  d.add(std::string("positivity")).add(std::span<const double>(pair.u.values));
  PropertyReport r = make_report("positivity", d);
  const std::vector<double> u = canonical(pair.u);
  if (u.empty()) {
    r.verdict = Verdict::kFail;
    add_note(r, "empty field");
    return r;
  }
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  r.measured = {{"lambda", pair.lambda}, {"min", *lo}, {"max", *hi}, {"margin", *lo / *hi}};
  r.verdict = *lo > 0.0 ? Verdict::kPass : Verdict::kFail;
  if (!pair.converged) {
    r.verdict = Verdict::kFail;
    add_note(r, "principal pair not converged");
  }
  return r;
}

PropertyReport check_sign_change(const EigenPair& pair, double lambda1) {
  Digest d;
  d.add(std::string("sign_change")).add(std::span<const double>(pair.u.values)).add(lambda1);
  PropertyReport r = make_report("sign_change", d);
  const double plus = nodal_measure(pair.u, Sign::kPositive);
  const double minus = nodal_measure(pair.u, Sign::kNegative);
  r.measured = {{"lambda", pair.lambda},
                {"lambda1", lambda1},
                {"measure_plus", plus},
                {"measure_minus", minus}};
  if (!(pair.lambda > lambda1 * (1.0 + 1e-9))) {
    r.verdict = Verdict::kNotApplicable;
    add_note(r, "eigenvalue does not exceed lambda1");
    return r;
  }
  r.verdict = plus > 0.0 && minus > 0.0 ? Verdict::kPass : Verdict::kFail;
  return r;
}

PropertyReport check_nodal_inequalities(const EigenPair& pair, const Problem& prob,
                                        const SolverConfig& cfg) {
  Digest d;
  d.add(std::string("nodal_inequalities")).add(std::span<const double>(pair.u.values));
  d.add(pair.lambda).add(prob).add(cfg);
  PropertyReport r = make_report("nodal_inequalities", d);
  const double nu = pair.lambda;
  const double plus = nodal_measure(pair.u, Sign::kPositive);
  const double minus = nodal_measure(pair.u, Sign::kNegative);
  if (!(plus > 0.0 && minus > 0.0)) {
    r.verdict = Verdict::kNotApplicable;
    r.measured = {{"nu", nu}, {"measure_plus", plus}, {"measure_minus", minus}};
    add_note(r, "empty nodal domain");
    return r;
  }
  const EigenPair sub_plus =
      solve_principal_on_subdomain(prob, restrict_to_nodal_domain(pair.u, Sign::kPositive), cfg);
  const EigenPair sub_minus =
      solve_principal_on_subdomain(prob, restrict_to_nodal_domain(pair.u, Sign::kNegative), cfg);
  const int N = prob.grid->dim;
  const double sp = prob.s * prob.p;
  r.measured = {{"nu", nu},
                {"lambda1_plus", sub_plus.lambda},
                {"lambda1_minus", sub_minus.lambda},
                {"margin_plus", nu - sub_plus.lambda},
                {"margin_minus", nu - sub_minus.lambda},
                {"measure_plus", plus},
                {"measure_minus", minus},
                {"residual_plus", sub_plus.residual},
                {"residual_minus", sub_minus.residual}};
  if (N > sp) {
    const double e = (prob.p - sp) / (N - sp);
    r.measured.emplace_back("implied_constant_plus", nu * std::pow(plus, e));
    r.measured.emplace_back("implied_constant_minus", nu * std::pow(minus, e));
  }
  r.verdict = nu > sub_plus.lambda && nu > sub_minus.lambda ? Verdict::kPass : Verdict::kFail;
  // Sub-domain values are upper bounds of the true minima, so a pass stands
  // even without convergence; record it regardless.
  if (!sub_plus.converged) add_note(r, "Omega+ solve not converged: " + sub_plus.notes);
  if (!sub_minus.converged) add_note(r, "Omega- solve not converged: " + sub_minus.notes);
  return r;
}

PropertyReport check_convexity_path(const Field& u_in, const Field& v_in, const Problem& prob,
                                    const std::vector<double>& t_grid) {
  Digest d;
  d.add(std::string("convexity_path")).add(std::span<const double>(u_in.values));
  d.add(std::span<const double>(v_in.values)).add(std::span<const double>(t_grid)).add(prob);
  PropertyReport r = make_report("convexity_path", d);
  for (std::size_t i = 0; i < u_in.size(); ++i) {
    if (!(u_in[i] > 0.0) || !(v_in[i] > 0.0)) {
      throw ValidationError("convexity path requires strictly positive fields; violated at node " +
                            std::to_string(i));
    }
  }
  const Field u = normalized(prob, u_in);
  const Field v = normalized(prob, v_in);
  const double eu = evaluate_forms(prob, u).numerator();
  const double ev = evaluate_forms(prob, v).numerator();
  const double p = prob.p;
  double max_excess = -std::numeric_limits<double>::infinity();
  double max_relative = -std::numeric_limits<double>::infinity();
  double max_weight_error = 0.0;
  bool ok = true;
  Field q(prob.grid, 0.0);
  for (double t : t_grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("t values must lie in [0, 1]");
    for (std::size_t i = 0; i < q.size(); ++i) {
      q[i] = std::pow(t * std::pow(u[i], p) + (1.0 - t) * std::pow(v[i], p), 1.0 / p);
    }
    const FormBreakdown fq = evaluate_forms(prob, q);
    const double bound = t * eu + (1.0 - t) * ev;
    const double excess = fq.numerator() - bound;
    const double tol = kConvexityTolerance * std::max(1.0, std::fabs(bound));
    max_excess = std::max(max_excess, excess);
    max_relative = std::max(max_relative, excess / std::max(1.0, std::fabs(bound)));
    max_weight_error = std::max(max_weight_error, std::fabs(fq.weight - 1.0));
    if (excess > tol) ok = false;
  }
  if (max_weight_error > kWeightTolerance) ok = false;
  r.measured = {{"energy_u", eu},
                {"energy_v", ev},
                {"max_excess", max_excess},
                {"max_relative_excess", max_relative},
                {"max_weight_error", max_weight_error}};
  r.verdict = ok ? Verdict::kPass : Verdict::kFail;
  return r;
}

PropertyReport check_comparison_integrals(const Field& u_in, const Field& v_in,
                                          const Problem& prob) {
  Digest d;
  d.add(std::string("comparison_integrals")).add(std::span<const double>(u_in.values));
  d.add(std::span<const double>(v_in.values)).add(prob);
  PropertyReport r = make_report("comparison_integrals", d);
  if (u_in.size() != prob.size() || v_in.size() != prob.size()) {
    throw ValidationError("field length does not match the grid");
  }
  const Grid& grid = *prob.grid;
  const std::size_t n = grid.size();
  const double p = prob.p;
  const double cell = grid.cell_measure();
  std::span<const double> u(u_in.values);
  std::span<const double> v(v_in.values);
  std::vector<double> psi(n);
  bool ordered = true;
  double psi_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    psi[i] = std::max(u[i] - v[i], 0.0);
    psi_max = std::max(psi_max, psi[i]);
    if (u[i] > v[i]) ordered = false;
  }

  double j1 = 0.0, j2 = 0.0, j3 = 0.0;
  double scale = 0.0;
  if (prob.local_active()) {
    for_cells(grid, [&](long c, long x, long y) {
      const Point gpsi = cell_gradient(grid, psi, c, x, y);
      if (gpsi[0] == 0.0 && gpsi[1] == 0.0) return;
      const Point gu = cell_gradient(grid, u, c, x, y);
      const Point gv = cell_gradient(grid, v, c, x, y);
      const double dot = gpsi[0] * (gv[0] - gu[0]) + gpsi[1] * (gv[1] - gu[1]);
      const double term = (p - 1.0) * dot * segment_weight(p, gu, gv, grid.dim) * cell;
      j1 += term;
      scale += std::fabs(term);
    });
  }
  if (prob.nonlocal_active()) {
    const KernelWeights& k = *prob.kernel;
    double pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dpsi = psi[j] - psi[i];
        if (dpsi == 0.0) continue;
        const double du = u[j] - u[i];
        const double dv = v[j] - v[i];
        const double term = (p - 1.0) * (dv - du) * dpsi * segment_weight(p, du, dv) * k.weight(i, j);
        pairs += term;
        scale += 2.0 * std::fabs(term);
      }
    }
    double strips = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (psi[i] == 0.0) continue;
      // y outside Omega: u(y) = v(y) = psi(y) = 0.
      const double term = (p - 1.0) * (u[i] - v[i]) * (-psi[i]) * segment_weight(p, -u[i], -v[i]) *
                          k.exterior[i] * cell;
      strips += term;
      scale += 2.0 * std::fabs(term);
    }
    j2 = 2.0 * pairs + 2.0 * strips;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (psi[i] == 0.0) continue;
    const double term = (p - 1.0) * psi[i] * (v[i] - u[i]) * segment_weight(p, u[i], v[i]) * cell;
    j3 += term;
    scale += std::fabs(term);
  }
  scale = std::max(1.0, scale);
  const double tol = kComparisonTolerance * scale;
  r.measured = {{"J1", j1}, {"J2", j2}, {"J3", j3}, {"scale", scale}, {"psi_max", psi_max}};
  bool ok = j1 <= tol && j2 <= tol && j3 <= tol;
  if (ordered) {
    ok = ok && j1 == 0.0 && j2 == 0.0 && j3 == 0.0;
    add_note(r, "u <= v at every node");
  }
  r.verdict = ok ? Verdict::kPass : Verdict::kFail;
  return r;
}

PropertyReport check_moser_decay(const EigenPair& pair, const Problem& prob) {
  Digest d;
  d.add(std::string("moser_decay")).add(std::span<const double>(pair.u.values)).add(prob);
  PropertyReport r = make_report("moser_decay", d);
  const int N = prob.grid->dim;
  const double p = prob.p;
  const double sp = prob.s * p;
  if (!(N > sp && N > p)) {
    r.verdict = Verdict::kNotApplicable;
    add_note(r, "requires N > p and N > sp");
    return r;
  }
  const double ps_star = N * p / (N - sp);
  const double beta = (p - sp) / (N - sp);
  const double cell = prob.grid->cell_measure();
  const std::vector<double> base = canonical(pair.u);

  auto sequence = [&](double c) {
    std::vector<double> t(kMoserSteps + 1);
    for (int k = 0; k <= kMoserSteps; ++k) {
      const double level = 1.0 - std::ldexp(1.0, -k);
      double sum = 0.0;
      for (double x : base) {
        const double y = c * x - level;
        if (y > 0.0) sum += std::pow(y, ps_star);
      }
      t[static_cast<std::size_t>(k)] = std::pow(sum * cell, 1.0 / ps_star);
    }
    return t;
  };
  auto fit_m = [&](const std::vector<double>& t) {
    double m = 1.0;
    for (int k = 1; k < kMoserSteps; ++k) {
      const double next = t[static_cast<std::size_t>(k + 1)];
      const double cur = t[static_cast<std::size_t>(k)];
      if (next <= 0.0) continue;
      m = std::max(m, std::pow(next / std::pow(cur, 1.0 + beta), 1.0 / k));
    }
    return m;
  };

  double c = 1.0;
  std::vector<double> t = sequence(c);
  double m = fit_m(t);
  int halvings = 0;
  const double unscaled_m = m;
  while (!(t[0] < std::pow(m, -1.0 / (beta * beta))) && halvings < kMaxMoserHalvings) {
    c *= 0.5;
    ++halvings;
    t = sequence(c);
    m = fit_m(t);
  }
  const double threshold = std::pow(m, -1.0 / (beta * beta));
  bool monotone = true;
  for (int k = 0; k < kMoserSteps; ++k) {
    if (t[static_cast<std::size_t>(k + 1)] > t[static_cast<std::size_t>(k)]) monotone = false;
  }
  const double t0 = t.front();
  const double t10 = t.back();
  r.measured = {{"beta", beta},        {"p_s_star", ps_star},       {"M", m},
                {"M_unscaled", unscaled_m}, {"scale", c},           {"threshold", threshold},
                {"sup_scaled", 0.0}};
  double sup = 0.0;
  for (double x : base) sup = std::max(sup, c * x);
  r.measured.back().second = sup;
  for (int k = 0; k <= kMoserSteps; ++k) {
    r.measured.emplace_back("t" + std::to_string(k), t[static_cast<std::size_t>(k)]);
  }
  const bool small = t0 < threshold;
  const bool decays = t0 == 0.0 || (small && t10 < 1e-6 * t0);
  r.verdict = monotone && decays ? Verdict::kPass : Verdict::kFail;
  if (t0 == 0.0) add_note(r, "u+ vanishes");
  else if (!small) add_note(r, "could not scale t0 below M^(-1/beta^2)");
  if (!pair.converged) {
    r.verdict = Verdict::kFail;
    add_note(r, "pair not converged");
  }
  return r;
}

PropertyReport check_log_energy(const EigenPair& pair, const Point& x0, double radius,
                                const std::vector<double>& deltas, const Problem& prob) {
  Digest d;
  d.add(std::string("log_energy")).add(std::span<const double>(pair.u.values));
  d.add(x0[0]).add(x0[1]).add(radius).add(std::span<const double>(deltas)).add(prob);
  PropertyReport r = make_report("log_energy", d);
  const Grid& grid = *prob.grid;
  if (!(radius > 0.0)) throw ValidationError("ball radius must be positive");
  for (int k = 0; k < grid.dim; ++k) {
    if (!(x0[k] - radius > grid.lower[k] && x0[k] + radius < grid.upper[k])) {
      throw ValidationError("ball B_R(x0) is not contained in the domain");
    }
  }
  if (deltas.empty()) throw ValidationError("delta list is empty");
  const double r_in = radius / 4.0;
  const std::size_t n = grid.size();
  const std::vector<double> u = canonical(pair.u);
  std::vector<char> inside(n, 0);
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (int k = 0; k < grid.dim; ++k) {
      const double dk = grid.nodes[i][k] - x0[k];
      d2 += dk * dk;
    }
    if (std::sqrt(d2) < r_in) {
      inside[i] = 1;
      ++count;
    }
  }
  r.measured = {{"r", r_in}, {"nodes_in_ball", static_cast<double>(count)}};
  const PowerLaw pw = prob.power();
  std::vector<double> lhs;
  std::vector<double> logs(n);
  for (double delta : deltas) {
    if (!(delta > 0.0)) throw ValidationError("delta values must be positive");
    for (std::size_t i = 0; i < n; ++i) {
      if (inside[i] && !(u[i] + delta > 0.0)) {
        r.verdict = Verdict::kFail;
        add_note(r, "u + delta not positive in the ball");
        return r;
      }
      logs[i] = u[i] + delta > 0.0 ? std::log(u[i] + delta) : 0.0;
    }
    double local = 0.0;
    if (prob.local_active()) {
      for_cells(grid, [&](long c, long x, long y) {
        if (c < 0 || !inside[static_cast<std::size_t>(c)] || x < 0) return;
        if (grid.dim == 2 && y < 0) return;
        const Point g = cell_gradient(grid, logs, c, x, y);
        local += pw.abs_pow(std::hypot(g[0], g[1]));
      });
      local *= grid.cell_measure();
    }
    double nonlocal = 0.0;
    if (prob.nonlocal_active()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!inside[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
          if (!inside[j]) continue;
          nonlocal += pw.abs_pow(logs[i] - logs[j]) * prob.kernel->weight(i, j);
        }
      }
      nonlocal *= 2.0;
    }
    lhs.push_back(local + nonlocal);
  }
  const auto [lo, hi] = std::minmax_element(lhs.begin(), lhs.end());
  double ratio = 1.0;
  if (*hi > 0.0) ratio = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    std::ostringstream key;
    key << "lhs_delta_" << deltas[k];
    r.measured.emplace_back(key.str(), lhs[k]);
  }
  r.measured.emplace_back("ratio", ratio);
  r.verdict = ratio < kLogRatioLimit ? Verdict::kPass : Verdict::kFail;
  if (count == 0) add_note(r, "no nodes inside B_r(x0)");
  return r;
}

PropertyReport check_simplicity(const Problem& prob, const SolverConfig& cfg) {
  Digest d;
  d.add(std::string("simplicity")).add(prob).add(cfg);
  return simplicity_from(solve_principal_restarts(prob, cfg), prob, d);
}

PropertyReport check_isolation_gap(const EigenPair& first, const EigenPair& second) {
  Digest d;
  d.add(std::string("isolation_gap")).add(first.lambda).add(second.lambda);
  PropertyReport r = make_report("isolation_gap", d);
  const double gap = second.lambda - first.lambda;
  r.measured = {{"lambda1", first.lambda},
                {"lambda2", second.lambda},
                {"gap", gap},
                {"relative_gap", gap / std::fabs(first.lambda)}};
  r.verdict = gap > 0.0 ? Verdict::kPass : Verdict::kFail;
  add_note(r, "lambda2 is a minimax upper-bound estimate");
  return r;
}

std::vector<double> default_t_grid() { return {0.25, 0.5, 0.75}; }

std::vector<double> default_deltas() { return {1e-1, 1e-2, 1e-3, 1e-4}; }

bool SuiteResult::all_pass() const {
  return std::none_of(reports.begin(), reports.end(),
                      [](const PropertyReport& r) { return r.verdict == Verdict::kFail; });
}

SuiteResult run_all(const Problem& prob, const SolverConfig& cfg) {
  cfg.validate();
  SuiteResult out;
  Digest base;
  base.add(prob).add(cfg);

  std::vector<EigenPair> pairs = solve_principal_restarts(prob, cfg);
  std::size_t best = 0;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    if (pairs[k].lambda < pairs[best].lambda) best = k;
  }
  out.first = pairs[best];

  auto guarded = [&](const std::string& name, const std::function<PropertyReport()>& check) {
    try {
      out.reports.push_back(check());
    } catch (const std::exception& e) {
      PropertyReport r = make_report(name, base);
      r.verdict = Verdict::kFail;
      r.notes = e.what();
      out.reports.push_back(std::move(r));
    }
  };

  bool have_second = false;
  if (out.first.converged) {
    out.second = solve_second(prob, cfg, out.first);
    have_second = true;
  } else {
    out.second.notes = "not computed: principal pair did not converge";
  }

  guarded("positivity", [&] { return check_positivity(out.first); });
  guarded("sign_change", [&] {
    if (!have_second) throw ConvergenceError(out.second.notes);
    return check_sign_change(out.second, out.first.lambda);
  });
  guarded("nodal_inequalities", [&] {
    if (!have_second) throw ConvergenceError(out.second.notes);
    return check_nodal_inequalities(out.second, prob, cfg);
  });
  guarded("simplicity", [&] {
    Digest d;
    d.add(std::string("simplicity")).add(prob).add(cfg);
    return simplicity_from(pairs, prob, d);
  });
  guarded("isolation_gap", [&] {
    if (!have_second) throw ConvergenceError(out.second.notes);
    return check_isolation_gap(out.first, out.second);
  });
  guarded("convexity_path", [&] {
    std::vector<double> v = uniform_samples(cfg.seed, kConvexityStream, prob.size());
    for (double& x : v) x += 0.5;
    return check_convexity_path(out.first.u, Field(prob.grid, std::move(v)), prob,
                                default_t_grid());
  });
  guarded("comparison_integrals", [&] {
    const Field& v = have_second ? out.second.u : out.first.u;
    return check_comparison_integrals(out.first.u, v, prob);
  });
  guarded("moser_decay", [&] { return check_moser_decay(out.first, prob); });
  guarded("log_energy", [&] {
    const Grid& g = *prob.grid;
    Point x0{0.5 * (g.lower[0] + g.upper[0]), 0.5 * (g.lower[1] + g.upper[1])};
    double half = 0.5 * (g.upper[0] - g.lower[0]);
    if (g.dim == 2) half = std::min(half, 0.5 * (g.upper[1] - g.lower[1]));
    return check_log_energy(out.first, x0, 0.9 * half, default_deltas(), prob);
  });
  return out;
}

}  // namespace mpeig
