#include "mpeig/grid.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "mpeig/error.hpp"

namespace mpeig {

namespace {

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

double Grid::cell_measure() const {
  double m = 1.0;
  for (int k = 0; k < dim; ++k) m *= h[k];
  return m;
}

double Grid::box_measure() const {
  double m = 1.0;
  for (int k = 0; k < dim; ++k) m *= upper[k] - lower[k];
  return m;
}

std::uint64_t Grid::hash() const {
  std::uint64_t hv = 14695981039346656037ULL;
  const std::int32_t d = dim;
  fnv_mix(hv, &d, sizeof d);
  for (int k = 0; k < dim; ++k) {
    fnv_mix(hv, &lower[k], sizeof(double));
    fnv_mix(hv, &upper[k], sizeof(double));
    const std::int32_t n = n_per_axis[k];
    fnv_mix(hv, &n, sizeof n);
  }
  return hv;
}

GridPtr build_grid(int dim, std::span<const double> lower, std::span<const double> upper,
                   std::span<const int> n_per_axis) {
  if (dim != 1 && dim != 2) {
    throw ValidationError("invalid dimension " + std::to_string(dim) + " (expected 1 or 2)");
  }
  const auto d = static_cast<std::size_t>(dim);
  if (lower.size() < d || upper.size() < d || n_per_axis.size() < d) {
    throw ValidationError("grid bounds and node counts need one entry per axis");
  }
  auto grid = std::make_shared<Grid>();
  grid->dim = dim;
  for (std::size_t k = 0; k < d; ++k) {
    if (!(upper[k] > lower[k]) || !std::isfinite(upper[k] - lower[k])) {
      throw ValidationError("non-positive extent on axis " + std::to_string(k));
    }
    if (n_per_axis[k] < 2) {
      throw ValidationError("n_per_axis[" + std::to_string(k) + "] must be >= 2");
    }
    grid->lower[k] = lower[k];
    grid->upper[k] = upper[k];
    grid->n_per_axis[k] = n_per_axis[k];
    grid->h[k] = (upper[k] - lower[k]) / (n_per_axis[k] + 1);
  }
  if (dim == 1) grid->n_per_axis[1] = 1;

  const int n0 = grid->n_per_axis[0];
  const int n1 = grid->n_per_axis[1];
  grid->nodes.reserve(static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1));
  for (int i = 0; i < n0; ++i) {
    for (int j = 0; j < n1; ++j) {
      Point x{grid->lower[0] + (i + 1) * grid->h[0], 0.0};
      if (dim == 2) x[1] = grid->lower[1] + (j + 1) * grid->h[1];
      grid->nodes.push_back(x);
    }
  }
  return grid;
}

Field::Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw ValidationError("field without grid");
  if (values.size() != grid->size()) {
    throw ValidationError("field length " + std::to_string(values.size()) +
                          " does not match node count " + std::to_string(grid->size()));
  }
}

Field::Field(GridPtr g, double fill) : grid(std::move(g)) {
  if (!grid) throw ValidationError("field without grid");
  values.assign(grid->size(), fill);
}

double Field::evaluate(const Point& x) const {
  int idx[2] = {0, 0};
  for (int k = 0; k < grid->dim; ++k) {
    if (!(x[k] > grid->lower[k] && x[k] < grid->upper[k])) return 0.0;
    const double r = (x[k] - grid->lower[k]) / grid->h[k];
    const double ri = std::round(r);
    if (std::fabs(r - ri) > 1e-9) {
      throw ValidationError("evaluation point is inside the box but not a grid node");
    }
    idx[k] = static_cast<int>(ri) - 1;
  }
  return values[grid->index(idx[0], idx[1])];
}

double nodal_measure(const Field& u, Sign sign) {
  const double sgn = sign == Sign::kPositive ? 1.0 : -1.0;
  std::size_t count = 0;
  for (double v : u.values) {
    if (sgn * v > 0.0) ++count;
  }
  return static_cast<double>(count) * u.grid->cell_measure();
}

std::vector<bool> restrict_to_nodal_domain(const Field& u, Sign sign) {
  const double sgn = sign == Sign::kPositive ? 1.0 : -1.0;
  std::vector<bool> mask(u.size(), false);
  bool any = false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mask[i] = sgn * u[i] > 0.0;
    any = any || mask[i];
  }
  if (!any) throw ValidationError("empty nodal domain");
  return mask;
}

}  // namespace mpeig
