#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace mpeig {

using Point = std::array<double, 2>;

/// Uniform tensor grid over an axis-aligned box in R^1 or R^2. Only interior
/// nodes are stored; the boundary and the exterior carry the value 0.
struct Grid {
  int dim = 1;
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> upper{0.0, 0.0};
  std::array<int, 2> n_per_axis{0, 1};
  std::array<double, 2> h{0.0, 0.0};
  /// Lexicographic by axis index: axis 0 is the slow index.
  std::vector<Point> nodes;

  std::size_t size() const { return nodes.size(); }
  /// h^N
  double cell_measure() const;
  /// |Omega|
  double box_measure() const;
  std::size_t index(int i0, int i1 = 0) const {
    return static_cast<std::size_t>(i0) * static_cast<std::size_t>(n_per_axis[1]) +
           static_cast<std::size_t>(i1);
  }
  /// Stable FNV-1a hash of the defining parameters.
  std::uint64_t hash() const;

  bool operator==(const Grid&) const = default;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Throws ValidationError for dim outside {1,2}, upper <= lower, or fewer
/// than two interior nodes on an axis.
GridPtr build_grid(int dim, std::span<const double> lower, std::span<const double> upper,
                   std::span<const int> n_per_axis);

/// Nodal values on a grid; implicitly zero outside the box.
struct Field {
  GridPtr grid;
  std::vector<double> values;

  Field() = default;
  Field(GridPtr g, std::vector<double> v);
  explicit Field(GridPtr g, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  /// Value at an arbitrary point: nodal value if the point is a node, 0 if it
  /// lies outside the open box. Points strictly inside but off-node throw.
  double evaluate(const Point& x) const;
};

enum class Sign { kPositive, kNegative };

/// |{sign * u > 0}| measured as node count times h^N.
double nodal_measure(const Field& u, Sign sign);

/// Mask of the nodes where sign * u > 0. Throws ValidationError when empty.
std::vector<bool> restrict_to_nodal_domain(const Field& u, Sign sign);

}  // namespace mpeig
