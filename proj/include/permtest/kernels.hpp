#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace permtest {

/// n points of fixed dimension stored row-major. Categorical values are kept
/// as integral doubles in 1..d.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> coords);

  static PointSet scalars(std::vector<double> values);
  static PointSet categories(std::span<const int> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }
  std::span<const double> operator[](std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const noexcept { return coords_; }
  void push_back(std::span<const double> point);
  void append(const PointSet& other);

 private:
  std::size_t dim_ = 1;
  std::vector<double> coords_;
};

/// Cells of a d1 x d2 product weight w(k1,k2) = row[k1] * col[k2].
struct WeightMatrix {
  std::vector<double> row;
  std::vector<double> col;
  std::size_t rows() const noexcept { return row.size(); }
  std::size_t cols() const noexcept { return col.size(); }
  double at(std::size_t k1, std::size_t k2) const noexcept { return row[k1] * col[k2]; }
  std::vector<double> dense() const;
};

struct MultinomialIndicator {
  std::size_t d = 0;
};

struct WeightedMultinomial {
  std::vector<double> weights;
  std::vector<double> inverse;
};

/// Two-dimensional categorical points (k1, k2).
struct ProductWeighted {
  WeightMatrix factors;
  std::vector<double> dense_inverse;  // empty above the density threshold
  double inverse_at(std::size_t k1, std::size_t k2) const noexcept;
};

struct Gaussian {
  std::vector<double> lambdas;
  double log_peak = 0.0;  // log of (2 pi)^{-d/2} / prod lambda
};

using KernelSpec = std::variant<MultinomialIndicator, WeightedMultinomial, ProductWeighted, Gaussian>;

inline constexpr std::size_t kDenseWeightLimit = 1'000'000;

KernelSpec multinomial_kernel(std::size_t d);
KernelSpec weighted_multinomial_kernel(std::vector<double> weights);
KernelSpec product_weighted_kernel(WeightMatrix weights,
                                   std::size_t dense_limit = kDenseWeightLimit);
KernelSpec gaussian_kernel(std::vector<double> lambdas);

/// Dimension of the points a kernel accepts.
std::size_t point_dim(const KernelSpec& spec);

/// Number of categories per axis, 0 for continuous kernels.
std::vector<std::size_t> category_counts(const KernelSpec& spec);

/// True for kernels that depend only on category equality.
bool is_categorical(const KernelSpec& spec);

double eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Upper bound sup g(x, y), attained on the diagonal.
double kernel_max(const KernelSpec& spec);

/// w_k = 1/(2d) + #{holdout = k}/(2m); holdout categories in 1..d.
std::vector<double> split_weights(std::span<const int> holdout, std::size_t d);

WeightMatrix product_weights(std::span<const int> holdout_y, std::span<const int> holdout_z,
                             std::size_t d1, std::size_t d2);

class GramMatrix {
 public:
  GramMatrix() = default;
  GramMatrix(std::size_t n, std::vector<double> values, bool diagonal_zeroed);

  std::size_t size() const noexcept { return n_; }
  bool diagonal_zeroed() const noexcept { return zeroed_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * n_, n_}; }
  std::span<const double> values() const noexcept { return values_; }

  GramMatrix with_zero_diagonal() const;
  GramMatrix scaled(double c) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
  bool zeroed_ = false;
};

GramMatrix gram(const KernelSpec& spec, const PointSet& points, bool zero_diagonal = true);

}  // namespace permtest
