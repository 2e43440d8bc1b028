#include "mpeig/kernel.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mpeig/error.hpp"

namespace mpeig {

namespace {

// Integral of cos(phi)^a over [lo, hi] with -pi/2 <= lo <= hi <= pi/2.
double cos_power_integral(double a, double lo, double hi) {
  if (hi <= lo) return 0.0;
  auto f = [a](double phi) { return std::pow(std::max(std::cos(phi), 0.0), a); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, lo, hi, 15, kExteriorTolerance * 1e-4);
}

void check_inside(const Grid& grid, const Point& x) {
  for (int k = 0; k < grid.dim; ++k) {
    if (!(x[k] > grid.lower[k] && x[k] < grid.upper[k])) {
      throw ValidationError("exterior density requested at a point on or outside the boundary");
    }
  }
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu);
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

bool get_f64(std::istream& is, double& v) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) return false;
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[b];
  v = std::bit_cast<double>(bits);
  return true;
}

}  // namespace

void validate_exponents(double s, double p) {
  if (!(s > 0.0 && s < 1.0)) {
    throw ValidationError("fractional order s must lie in (0,1), got " + std::to_string(s));
  }
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw ValidationError("exponent p must lie in (1,inf), got " + std::to_string(p));
  }
}

double exterior_density_at(const Grid& grid, double s, double p, const Point& x) {
  validate_exponents(s, p);
  check_inside(grid, x);
  const double sp = s * p;
  if (grid.dim == 1) {
    return (std::pow(x[0] - grid.lower[0], -sp) + std::pow(grid.upper[0] - x[0], -sp)) / sp;
  }
  // Polar coordinates about x: the radial integral from the exit distance
  // d(theta) to infinity is d^-sp / sp in closed form, leaving a smooth
  // angular integral per box side.
  const double right = grid.upper[0] - x[0];
  const double top = grid.upper[1] - x[1];
  const double left = x[0] - grid.lower[0];
  const double bottom = x[1] - grid.lower[1];

  // Each side subtends [-atan(prev/a), atan(next/a)] around its normal.
  auto side = [sp](double dist, double ccw_before, double ccw_after) {
    const double lo = -std::atan2(ccw_before, dist);
    const double hi = std::atan2(ccw_after, dist);
    return std::pow(dist, -sp) * cos_power_integral(sp, lo, hi);
  };
  double total = 0.0;
  total += side(right, bottom, top);
  total += side(top, right, left);
  total += side(left, top, bottom);
  total += side(bottom, left, right);
  return total / sp;
}

double exterior_density(const Grid& grid, double s, double p, std::size_t node_index) {
  if (node_index >= grid.size()) throw ValidationError("node index out of range");
  return exterior_density_at(grid, s, p, grid.nodes[node_index]);
}

KernelPtr build_weights(const GridPtr& grid, double s, double p) {
  if (!grid) throw ValidationError("kernel requires a grid");
  validate_exponents(s, p);
  auto kernel = std::make_shared<KernelWeights>();
  kernel->grid = grid;
  kernel->s = s;
  kernel->p = p;
  const std::size_t n = grid->size();
  const double cell = grid->cell_measure();
  const double scale = cell * cell;
  const double half_exp = -0.5 * (grid->dim + s * p);
  kernel->pair.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = grid->nodes[i][0] - grid->nodes[j][0];
      const double dy = grid->nodes[i][1] - grid->nodes[j][1];
      const double w = scale * std::pow(dx * dx + dy * dy, half_exp);
      kernel->pair[i * n + j] = w;
      kernel->pair[j * n + i] = w;
    }
  }
  kernel->exterior.resize(n);
  for (std::size_t i = 0; i < n; ++i) kernel->exterior[i] = exterior_density(*grid, s, p, i);
  return kernel;
}

double tail(const Field& w, const Point& x0, double r, double s, double p) {
  if (!(r > 0.0)) throw ValidationError("tail radius must be positive");
  validate_exponents(s, p);
  const Grid& grid = *w.grid;
  const double sp = s * p;
  const double cell = grid.cell_measure();
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (w[i] == 0.0) continue;
    double d2 = 0.0;
    for (int k = 0; k < grid.dim; ++k) {
      const double dk = grid.nodes[i][k] - x0[k];
      d2 += dk * dk;
    }
    const double d = std::sqrt(d2);
    if (d < r) continue;
    sum += std::pow(std::fabs(w[i]), p - 1.0) * std::pow(d, -(grid.dim + sp)) * cell;
  }
  return std::pow(std::pow(r, sp) * sum, 1.0 / (p - 1.0));
}

void save_kernel_cache(const KernelWeights& kernel, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open kernel cache for writing: " + file.string());
  put_f64(os, static_cast<double>(kernel.grid->dim));
  put_f64(os, static_cast<double>(kernel.size()));
  put_f64(os, kernel.s);
  put_f64(os, kernel.p);
  for (double w : kernel.pair) put_f64(os, w);
  for (double r : kernel.exterior) put_f64(os, r);
  if (!os) throw IoError("failed writing kernel cache: " + file.string());
}

KernelPtr load_kernel_cache(const GridPtr& grid, double s, double p,
                            const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) return nullptr;
  double dim = 0, n = 0, fs = 0, fp = 0;
  if (!get_f64(is, dim) || !get_f64(is, n) || !get_f64(is, fs) || !get_f64(is, fp)) return nullptr;
  const std::size_t count = grid->size();
  if (dim != grid->dim || n != static_cast<double>(count) || fs != s || fp != p) return nullptr;
  auto kernel = std::make_shared<KernelWeights>();
  kernel->grid = grid;
  kernel->s = s;
  kernel->p = p;
  kernel->pair.resize(count * count);
  kernel->exterior.resize(count);
  for (double& w : kernel->pair) {
    if (!get_f64(is, w)) return nullptr;
  }
  for (double& r : kernel->exterior) {
    if (!get_f64(is, r)) return nullptr;
  }
  return kernel;
}

std::filesystem::path kernel_cache_name(const Grid& grid, double s, double p) {
  std::ostringstream name;
  name << "kernel_" << std::hex << grid.hash() << "_" << std::bit_cast<std::uint64_t>(s) << "_"
       << std::bit_cast<std::uint64_t>(p) << ".bin";
  return name.str();
}

KernelPtr cached_weights(const GridPtr& grid, double s, double p,
                         const std::filesystem::path& dir) {
  const auto file = dir / kernel_cache_name(*grid, s, p);
  if (auto hit = load_kernel_cache(grid, s, p, file)) return hit;
  auto kernel = build_weights(grid, s, p);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create kernel cache directory: " + dir.string());
  save_kernel_cache(*kernel, file);
  return kernel;
}

}  // namespace mpeig
