#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mpeig/energy.hpp"

namespace mpeig::test {

inline GridPtr line(int n, double a = 0.0, double b = 1.0) {
  const double lo[1] = {a};
  const double hi[1] = {b};
  const int np[1] = {n};
  return build_grid(1, lo, hi, np);
}

inline GridPtr square(int n0, int n1 = -1) {
  const double lo[2] = {0.0, 0.0};
  const double hi[2] = {1.0, 1.0};
  const int np[2] = {n0, n1 < 0 ? n0 : n1};
  return build_grid(2, lo, hi, np);
}

inline Problem plain(const GridPtr& g, double p, double s = 0.5,
                     OperatorMode mode = OperatorMode::kMixed) {
  return make_problem(g, s, p, Field(g, 0.0), Field(g, 1.0), mode);
}

inline Field uniform_field(const GridPtr& g, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Field f(g, 0.0);
  for (auto& x : f.values) x = d(rng);
  return f;
}

}  // namespace mpeig::test
