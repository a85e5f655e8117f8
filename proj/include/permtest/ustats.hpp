#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "permtest/kernels.hpp"

namespace permtest {

/// Labeled pooled sample: n1 Y-observations followed by n2 Z-observations.
struct TwoSamplePooled {
  PointSet y;
  PointSet z;

  std::size_t n1() const noexcept { return y.size(); }
  std::size_t n2() const noexcept { return z.size(); }
  PointSet pooled() const;
};

/// n paired observations (y_i, z_i).
struct PairedSample {
  PointSet y;
  PointSet z;

  std::size_t size() const noexcept { return y.size(); }
};

/// Per-category counts for the two groups of a Poisson sampling design, with
/// optional per-individual count rows (n rows of d counts each, row-major).
struct PoissonCounts {
  std::size_t d = 0;
  std::vector<std::int64_t> v;
  std::vector<std::int64_t> w;
  std::vector<std::int64_t> per_individual_y;
  std::vector<std::int64_t> per_individual_z;

  static PoissonCounts from_individuals(std::size_t d, std::vector<std::int64_t> rows_y,
                                        std::vector<std::int64_t> rows_z);
  bool has_individuals() const noexcept { return !per_individual_y.empty(); }
  std::size_t individuals_y() const noexcept { return d ? per_individual_y.size() / d : 0; }
  std::size_t individuals_z() const noexcept { return d ? per_individual_z.size() / d : 0; }
};

// ---- two-sample U-statistic ----------------------------------------------

/// U for the pooled Gram (zero diagonal) under `labeling`; an empty labeling
/// is the identity. Positions [0, n1) form the Y group.
double two_sample_u(const GramMatrix& gram, std::size_t n1, std::size_t n2,
                    std::span<const std::size_t> labeling = {});

/// Literal quadruple sum over h_ts; n1 + n2 <= 30.
double two_sample_u_naive(const TwoSamplePooled& data, const KernelSpec& kernel,
                          std::span<const std::size_t> labeling = {});

inline constexpr std::size_t kTwoSampleOracleLimit = 30;
inline constexpr std::size_t kIndependenceOracleLimit = 10;

/// O(d) closed form from category counts; weights empty means unweighted.
double multinomial_two_sample_u(std::span<const std::int64_t> counts_y,
                                std::span<const std::int64_t> counts_z,
                                std::span<const double> weights = {});

/// Repeated evaluation of two_sample_u on a fixed Gram. Row sums and the
/// total are cached; each call costs O(min(n1, n2)^2).
class TwoSampleGramEvaluator {
 public:
  TwoSampleGramEvaluator(GramMatrix gram, std::size_t n1, std::size_t n2);
  double operator()(std::span<const std::size_t> labeling) const;
  std::size_t size() const noexcept { return n1_ + n2_; }

 private:
  GramMatrix gram_;
  std::size_t n1_, n2_;
  std::vector<double> row_sums_;
  long double total_ = 0;  // sum over i < j
};

/// Count-based evaluator for category-equality kernels (optionally weighted
/// by per-category inverse weights). Each call costs O(n1).
class CategoricalTwoSampleEvaluator {
 public:
  /// `categories` are pooled 0-based labels in [0, d); `inverse_weights`
  /// empty means the plain indicator kernel.
  CategoricalTwoSampleEvaluator(std::vector<std::uint32_t> categories, std::size_t d,
                                std::size_t n1, std::vector<double> inverse_weights = {});
  double operator()(std::span<const std::size_t> labeling) const;
  std::size_t size() const noexcept { return cat_.size(); }

 private:
  std::vector<std::uint32_t> cat_;  // compressed to observed categories
  std::vector<std::int64_t> total_;
  std::vector<double> inv_;
  std::size_t n1_, n2_;
  std::int64_t sum_t2_ = 0;
  double const_weighted_ = 0.0;
};

// ---- independence U-statistic ---------------------------------------------

/// Exact U_n with product kernel h_in in O(n^2) from zero-diagonal Grams;
/// `z_relabeling` permutes the Z side (empty = identity).
double independence_u(const GramMatrix& gram_y, const GramMatrix& gram_z,
                      std::span<const std::size_t> z_relabeling = {});

/// Literal sum over all distinct index 4-tuples; n <= 10.
double independence_u_naive(const PairedSample& data, const KernelSpec& kernel_y,
                            const KernelSpec& kernel_z,
                            std::span<const std::size_t> z_relabeling = {});

class IndependenceGramEvaluator {
 public:
  IndependenceGramEvaluator(GramMatrix gram_y, GramMatrix gram_z);
  double operator()(std::span<const std::size_t> z_relabeling) const;
  std::size_t size() const noexcept { return gy_.size(); }

 private:
  GramMatrix gy_, gz_;
  std::vector<double> ry_, rz_;
  long double sy_ = 0, sz_ = 0;
};

/// Exact integer evaluator for indicator kernels on categorical pairs.
class CategoricalIndependenceEvaluator {
 public:
  CategoricalIndependenceEvaluator(std::vector<std::uint32_t> y, std::vector<std::uint32_t> z);
  double operator()(std::span<const std::size_t> z_relabeling) const;
  std::size_t size() const noexcept { return y_.size(); }

 private:
  std::vector<std::uint32_t> y_, z_;
  std::size_t ky_ = 0, kz_ = 0;
  std::vector<std::int64_t> cy_, cz_;
  std::int64_t sa_ = 0, sb_ = 0;
};

// ---- Poisson chi-square and linear statistics -------------------------------

/// Sum over categories of (Delta_k^2 - V_k - W_k) / (V_k + W_k), skipping
/// empty categories. `relabeling` acts on the 2n individuals (Y rows first).
double poisson_chisq(const PoissonCounts& counts, std::span<const std::size_t> relabeling = {});

class PoissonChisqEvaluator {
 public:
  explicit PoissonChisqEvaluator(PoissonCounts counts);
  double operator()(std::span<const std::size_t> relabeling) const;
  std::size_t size() const noexcept { return 2 * n_; }

 private:
  std::size_t n_ = 0, d_ = 0;
  std::vector<std::int64_t> rows_;  // 2n x d, Y rows first
  std::vector<std::int64_t> total_;
};

/// (1/n) sum_i (y_i - mean y)(z_{pi_i} - mean z).
double linear_stat(std::span<const double> y, std::span<const double> z,
                   std::span<const std::size_t> relabeling = {});

}  // namespace permtest
