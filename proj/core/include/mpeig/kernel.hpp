#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include "mpeig/grid.hpp"

namespace mpeig {

/// Quadrature of the kernel |x-y|^-(N+sp) on a grid.
///
/// Interior pairs use the midpoint rule with the diagonal excluded,
/// w_ij = h^(2N) / |x_i - x_j|^(N+sp). The Omega x (R^N \ Omega) strips enter
/// through the exterior density rho_i, integrated exactly in 1D and by
/// adaptive angular quadrature in 2D.
struct KernelWeights {
  GridPtr grid;
  double s = 0.5;
  double p = 2.0;
  /// Dense n x n, row-major, zero diagonal.
  std::vector<double> pair;
  std::vector<double> exterior;

  std::size_t size() const { return exterior.size(); }
  double weight(std::size_t i, std::size_t j) const { return pair[i * size() + j]; }
  const double* row(std::size_t i) const { return pair.data() + i * size(); }
};

using KernelPtr = std::shared_ptr<const KernelWeights>;

/// Throws ValidationError unless 0 < s < 1 < p.
void validate_exponents(double s, double p);

KernelPtr build_weights(const GridPtr& grid, double s, double p);

/// rho = integral over R^N \ Omega of |x - y|^-(N+sp) dy for the node x.
double exterior_density(const Grid& grid, double s, double p, std::size_t node_index);

/// Same as above at an arbitrary point strictly inside the box.
double exterior_density_at(const Grid& grid, double s, double p, const Point& x);

/// Relative tolerance of the 2D exterior quadrature.
inline constexpr double kExteriorTolerance = 1e-8;

/// Tail(w; x0, r) = (r^sp * sum_{|x_i - x0| >= r} |w_i|^(p-1) |x_i - x0|^-(N+sp) h^N)^(1/(p-1)).
double tail(const Field& w, const Point& x0, double r, double s, double p);

/// Binary cache: four little-endian float64 header values (dim, node count, s, p),
/// the row-major n x n pair table, then the n exterior densities.
void save_kernel_cache(const KernelWeights& kernel, const std::filesystem::path& file);
/// Returns nullptr when the file is absent or its header does not match.
KernelPtr load_kernel_cache(const GridPtr& grid, double s, double p,
                            const std::filesystem::path& file);
/// File name derived from (grid hash, s, p).
std::filesystem::path kernel_cache_name(const Grid& grid, double s, double p);
/// Load from dir if present, otherwise build and store.
KernelPtr cached_weights(const GridPtr& grid, double s, double p, const std::filesystem::path& dir);

}  // namespace mpeig
