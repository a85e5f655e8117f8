#include "permtest/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "permtest/summation.hpp"

namespace permtest {

namespace {

constexpr double kWeightTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t category_index(double v, std::size_t d) {
  const double r = std::nearbyint(v);
  if (r != v || r < 1.0 || r > static_cast<double>(d)) {
    throw std::domain_error("category " + std::to_string(v) + " outside 1.." + std::to_string(d));
  }
  return static_cast<std::size_t>(r) - 1;
}

void check_dims(std::span<const double> x, std::span<const double> y, std::size_t dim) {
  if (x.size() != dim || y.size() != dim) {
    throw std::domain_error("kernel: point dimension mismatch (expected " + std::to_string(dim) +
                            ")");
  }
}

void check_weight_vector(std::span<const double> w, const char* what) {
  if (w.empty()) throw std::invalid_argument(std::string(what) + ": empty weight vector");
  const double floor = 1.0 / (2.0 * static_cast<double>(w.size()));
  CompensatedSum total;
  for (double v : w) {
    if (!(v > 0.0) || v < floor - kWeightTol) {
      throw std::invalid_argument(std::string(what) + ": weight below 1/(2d)");
    }
    total += v;
  }
  if (std::abs(total.value() - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(what) + ": weights must sum to 1");
  }
}

std::vector<double> holdout_factor(std::span<const int> holdout, std::size_t d) {
  if (holdout.empty()) throw std::domain_error("split weights: empty holdout");
  if (d == 0) throw std::domain_error("split weights: d must be positive");
  std::vector<double> counts(d, 0.0);
  for (int k : holdout) counts[category_index(k, d)] += 1.0;
  const double m = static_cast<double>(holdout.size());
  const double base = 1.0 / (2.0 * static_cast<double>(d));
  for (double& c : counts) c = base + c / (2.0 * m);
  return counts;
}

}  // namespace

PointSet::PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw std::invalid_argument("PointSet: dimension must be positive");
  if (coords_.size() % dim_ != 0) throw std::invalid_argument("PointSet: ragged coordinates");
}

PointSet PointSet::scalars(std::vector<double> values) { return PointSet(1, std::move(values)); }

PointSet PointSet::categories(std::span<const int> values) {
  return PointSet(1, std::vector<double>(values.begin(), values.end()));
}

void PointSet::push_back(std::span<const double> point) {
  if (point.size() != dim_) throw std::invalid_argument("PointSet: dimension mismatch");
  coords_.insert(coords_.end(), point.begin(), point.end());
}

void PointSet::append(const PointSet& other) {
  if (other.empty()) return;
  if (other.dim_ != dim_) throw std::invalid_argument("PointSet: dimension mismatch");
  coords_.insert(coords_.end(), other.coords_.begin(), other.coords_.end());
}

std::vector<double> WeightMatrix::dense() const {
  std::vector<double> out(rows() * cols());
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) out[i * cols() + j] = row[i] * col[j];
  return out;
}

double ProductWeighted::inverse_at(std::size_t k1, std::size_t k2) const noexcept {
  if (!dense_inverse.empty()) return dense_inverse[k1 * factors.cols() + k2];
  return 1.0 / factors.at(k1, k2);
}

KernelSpec multinomial_kernel(std::size_t d) {
  if (d == 0) throw std::invalid_argument("multinomial kernel: d must be positive");
  return MultinomialIndicator{d};
}

KernelSpec weighted_multinomial_kernel(std::vector<double> weights) {
  check_weight_vector(weights, "weighted multinomial kernel");
  WeightedMultinomial k;
  k.inverse.reserve(weights.size());
  for (double w : weights) k.inverse.push_back(1.0 / w);
  k.weights = std::move(weights);
  return k;
}

KernelSpec product_weighted_kernel(WeightMatrix weights, std::size_t dense_limit) {
  check_weight_vector(weights.row, "product weighted kernel (rows)");
  check_weight_vector(weights.col, "product weighted kernel (columns)");
  ProductWeighted k;
  if (weights.rows() * weights.cols() <= dense_limit) {
    k.dense_inverse = weights.dense();
    for (double& v : k.dense_inverse) v = 1.0 / v;
  }
  k.factors = std::move(weights);
  return k;
}

KernelSpec gaussian_kernel(std::vector<double> lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("gaussian kernel: no bandwidths");
  double log_peak = -0.5 * static_cast<double>(lambdas.size()) * std::log(2.0 * std::numbers::pi);
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw std::domain_error("gaussian kernel: bandwidths must be positive");
    }
    log_peak -= std::log(l);
  }
  return Gaussian{std::move(lambdas), log_peak};
}

std::size_t point_dim(const KernelSpec& spec) {
  return std::visit(overloaded{[](const MultinomialIndicator&) -> std::size_t { return 1; },
                               [](const WeightedMultinomial&) -> std::size_t { return 1; },
                               [](const ProductWeighted&) -> std::size_t { return 2; },
                               [](const Gaussian& g) { return g.lambdas.size(); }},
                    spec);
}

std::vector<std::size_t> category_counts(const KernelSpec& spec) {
  return std::visit(
      overloaded{[](const MultinomialIndicator& k) { return std::vector<std::size_t>{k.d}; },
                 [](const WeightedMultinomial& k) {
                   return std::vector<std::size_t>{k.weights.size()};
                 },
                 [](const ProductWeighted& k) {
                   return std::vector<std::size_t>{k.factors.rows(), k.factors.cols()};
                 },
                 [](const Gaussian& g) { return std::vector<std::size_t>(g.lambdas.size(), 0); }},
      spec);
}

bool is_categorical(const KernelSpec& spec) { return !std::holds_alternative<Gaussian>(spec); }

double eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  return std::visit(
      overloaded{
          [&](const MultinomialIndicator& k) {
            check_dims(x, y, 1);
            return category_index(x[0], k.d) == category_index(y[0], k.d) ? 1.0 : 0.0;
          },
          [&](const WeightedMultinomial& k) {
            check_dims(x, y, 1);
            const std::size_t d = k.weights.size();
            const std::size_t a = category_index(x[0], d);
            return a == category_index(y[0], d) ? k.inverse[a] : 0.0;
          },
          [&](const ProductWeighted& k) {
            check_dims(x, y, 2);
            const std::size_t a1 = category_index(x[0], k.factors.rows());
            const std::size_t a2 = category_index(x[1], k.factors.cols());
            const std::size_t b1 = category_index(y[0], k.factors.rows());
            const std::size_t b2 = category_index(y[1], k.factors.cols());
            return (a1 == b1 && a2 == b2) ? k.inverse_at(a1, a2) : 0.0;
          },
          [&](const Gaussian& k) {
            check_dims(x, y, k.lambdas.size());
            double q = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
              const double u = (x[i] - y[i]) / k.lambdas[i];
              q += u * u;
            }
            return std::exp(k.log_peak - 0.5 * q);
          }},
      spec);
}

double kernel_max(const KernelSpec& spec) {
  return std::visit(overloaded{[](const MultinomialIndicator&) { return 1.0; },
                               [](const WeightedMultinomial& k) {
                                 double m = 0.0;
                                 for (double v : k.inverse) m = std::max(m, v);
                                 return m;
                               },
                               [](const ProductWeighted& k) {
                                 double r = k.factors.row[0], c = k.factors.col[0];
                                 for (double v : k.factors.row) r = std::min(r, v);
                                 for (double v : k.factors.col) c = std::min(c, v);
                                 return 1.0 / (r * c);
                               },
                               [](const Gaussian& k) { return std::exp(k.log_peak); }},
                    spec);
}

std::vector<double> split_weights(std::span<const int> holdout, std::size_t d) {
  return holdout_factor(holdout, d);
}

WeightMatrix product_weights(std::span<const int> holdout_y, std::span<const int> holdout_z,
                             std::size_t d1, std::size_t d2) {
  return WeightMatrix{holdout_factor(holdout_y, d1), holdout_factor(holdout_z, d2)};
}

GramMatrix::GramMatrix(std::size_t n, std::vector<double> values, bool diagonal_zeroed)
    : n_(n), values_(std::move(values)), zeroed_(diagonal_zeroed) {
  if (values_.size() != n_ * n_) throw std::invalid_argument("GramMatrix: size mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (values_[i * n_ + j] != values_[j * n_ + i]) {
        throw std::invalid_argument("GramMatrix: not symmetric");
      }
    }
    if (zeroed_ && values_[i * n_ + i] != 0.0) {
      throw std::invalid_argument("GramMatrix: nonzero diagonal");
    }
  }
}

GramMatrix GramMatrix::with_zero_diagonal() const {
  GramMatrix g = *this;
  for (std::size_t i = 0; i < n_; ++i) g.values_[i * n_ + i] = 0.0;
  g.zeroed_ = true;
  return g;
}

GramMatrix GramMatrix::scaled(double c) const {
  GramMatrix g = *this;
  for (double& v : g.values_) v *= c;
  return g;
}

GramMatrix gram(const KernelSpec& spec, const PointSet& points, bool zero_diagonal) {
  const std::size_t n = points.size();
  if (n == 0) throw std::domain_error("gram: no points");
  std::vector<double> values(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    values[i * n + i] = zero_diagonal ? 0.0 : eval(spec, points[i], points[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = eval(spec, points[i], points[j]);
      values[i * n + j] = g;
      values[j * n + i] = g;
    }
  }
  return GramMatrix(n, std::move(values), zero_diagonal);
}

}  // namespace permtest
