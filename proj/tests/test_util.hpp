#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "permtest/kernels.hpp"
#include "permtest/rng.hpp"

namespace testutil {

inline std::vector<int> random_categories(std::size_t n, int d, permtest::Rng& rng) {
  std::vector<int> out(n);
  for (auto& v : out) v = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
  return out;
}

inline permtest::PointSet random_points(std::size_t n, std::size_t dim, permtest::Rng& rng) {
  std::vector<double> c(n * dim);
  for (auto& v : c) v = rng.uniform();
  return permtest::PointSet(dim, std::move(c));
}

inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testutil
