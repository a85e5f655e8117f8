#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "permtest/calibration.hpp"
#include "permtest/kernels.hpp"
#include "permtest/ustats.hpp"

namespace permtest {

// ---- binning -------------------------------------------------------------------

struct BinGrid {
  std::size_t kappa = 1;
  std::size_t dim = 1;

  /// kappa^dim; throws std::overflow_error if it does not fit in 2^53.
  std::size_t cells() const;
};

/// max(1, floor(n1^{2/(4s+d)})).
std::size_t holder_kappa_two_sample(std::size_t n1, std::size_t d, double s);
/// max(1, floor(n^{2/(4s+d1+d2)})).
std::size_t holder_kappa_independence(std::size_t n, std::size_t d1, std::size_t d2, double s);

/// Axis index in 1..kappa: min(floor(x kappa) + 1, kappa).
std::size_t bin_axis(double x, std::size_t kappa);

/// Flat 1-based cell labels, row-major with the first axis most significant.
std::vector<int> bin_data(const PointSet& points, const BinGrid& grid);

// ---- adaptive grids -------------------------------------------------------------

inline constexpr std::size_t kAdaptiveCellCap = 1'000'000;

/// ceil((2/d) log2(n1 / ln ln n1)); natural inner logarithm.
std::size_t gamma_max_two_sample(std::size_t n1, std::size_t d);
/// ceil((2/(d1+d2)) log2(n / ln ln n)).
std::size_t gamma_max_independence(std::size_t n, std::size_t d1, std::size_t d2);

struct AdaptiveGrid {
  std::vector<std::size_t> kappas;   // retained 2^j values
  std::vector<std::size_t> dropped;  // 2^j values with kappa^dim above the cap
  std::size_t gamma_max = 1;
  double per_test_alpha = 0.05;
  std::vector<std::string> warnings;
};

AdaptiveGrid make_adaptive_grid(std::size_t gamma_max, std::size_t dim, double alpha,
                                std::size_t cell_cap = kAdaptiveCellCap);

struct AdaptiveOutcome {
  /// statistic = number of rejecting constituents, critical_value = 0,
  /// p_value = min(1, gamma_max * min_j p_j).
  TestOutcome combined;
  AdaptiveGrid grid;
  std::vector<TestOutcome> per_kappa;
};

// ---- multinomial and binned tests ------------------------------------------------

TestOutcome multinomial_l2_two_sample(std::span<const int> y, std::span<const int> z,
                                      std::size_t d, double alpha, const PermutationPlan& plan);

TestOutcome multinomial_l2_independence(std::span<const int> y, std::span<const int> z,
                                        std::size_t d1, std::size_t d2, double alpha,
                                        const PermutationPlan& plan);

/// Points in [0,1]^d binned at kappa per axis, then the multinomial test.
TestOutcome binned_two_sample(const TwoSamplePooled& points, std::size_t kappa, double alpha,
                              const PermutationPlan& plan);
TestOutcome binned_independence(const PairedSample& pairs, std::size_t kappa, double alpha,
                                const PermutationPlan& plan);

TestOutcome holder_two_sample(const TwoSamplePooled& points, double s, double alpha,
                              const PermutationPlan& plan);
TestOutcome holder_independence(const PairedSample& pairs, double s, double alpha,
                                const PermutationPlan& plan);

AdaptiveOutcome adaptive_two_sample(const TwoSamplePooled& points, double alpha,
                                    const PermutationPlan& plan);
AdaptiveOutcome adaptive_independence(const PairedSample& pairs, double alpha,
                                      const PermutationPlan& plan);

/// Runs binned tests over an explicit grid at grid.per_test_alpha.
AdaptiveOutcome adaptive_two_sample(const TwoSamplePooled& points, const AdaptiveGrid& grid,
                                    double alpha, const PermutationPlan& plan);
AdaptiveOutcome adaptive_independence(const PairedSample& pairs, const AdaptiveGrid& grid,
                                      double alpha, const PermutationPlan& plan);

// ---- sample-splitting l1 tests -----------------------------------------------------

/// Index layout of the l1 two-sample split, 0-based into the (possibly
/// swapped) inputs: statistic on first[0, n1) of each group, weights from
/// the larger group's holdout block [n2, n2 + m).
struct L1TwoSampleLayout {
  bool swapped = false;  // groups exchanged so that n1 <= n2
  std::size_t n1 = 0, n2 = 0, m = 0;
  std::size_t holdout_begin = 0;
};

L1TwoSampleLayout l1_two_sample_layout(std::size_t size_y, std::size_t size_z, std::size_t d);

/// Index layout of the l1 independence split over 3n pairs.
/// Ytilde_i = pair i (i < n); Ztilde_i = (Y[n+i], Z[2n+i]). The statistic
/// uses the first n/2 of each, weights come from Y[3n/2, 3n/2+m1) and
/// Z[5n/2, 5n/2+m2).
struct L1IndependenceLayout {
  std::size_t n = 0, half = 0, m1 = 0, m2 = 0;
  std::vector<std::size_t> ytilde_y, ytilde_z;  // sources of Ytilde, first half
  std::vector<std::size_t> ztilde_y, ztilde_z;  // sources of Ztilde, first half
  std::vector<std::size_t> holdout_y, holdout_z;
};

L1IndependenceLayout l1_independence_layout(std::size_t total, std::size_t d1, std::size_t d2);

TestOutcome l1_split_two_sample(std::span<const int> y, std::span<const int> z, std::size_t d,
                                double alpha, const PermutationPlan& plan);

TestOutcome l1_split_independence(std::span<const int> y, std::span<const int> z, std::size_t d1,
                                  std::size_t d2, double alpha, const PermutationPlan& plan);

// ---- kernel tests ---------------------------------------------------------------

struct SmoothnessRule {
  double s = 1.0;
};

/// Explicit per-axis bandwidths (a single value is broadcast) or a rule.
using BandwidthChoice = std::variant<std::vector<double>, SmoothnessRule>;

/// (1/n1 + 1/n2)^{2/(4s+d)}.
double mmd_bandwidth_rule(std::size_t n1, std::size_t n2, std::size_t d, double s);
/// n^{-2/(4s+d1+d2)}.
double hsic_bandwidth_rule(std::size_t n, std::size_t d1, std::size_t d2, double s);

TestOutcome mmd_test(const TwoSamplePooled& points, const BandwidthChoice& bandwidths,
                     double alpha, const PermutationPlan& plan);

TestOutcome hsic_test(const PairedSample& pairs, const BandwidthChoice& bandwidths_y,
                      const BandwidthChoice& bandwidths_z, double alpha,
                      const PermutationPlan& plan);

TestOutcome poisson_chisq_test(const PoissonCounts& counts, double alpha,
                               const PermutationPlan& plan);

// ---- statistic builders -----------------------------------------------------------

/// The permutation statistics behind the tests above, for callers that need
/// the full permutation distribution.
PermutationStatistic multinomial_two_sample_statistic(std::span<const int> y,
                                                      std::span<const int> z, std::size_t d);
PermutationStatistic multinomial_independence_statistic(std::span<const int> y,
                                                        std::span<const int> z, std::size_t d1,
                                                        std::size_t d2);
PermutationStatistic kernel_two_sample_statistic(const TwoSamplePooled& points,
                                                 const KernelSpec& kernel);
PermutationStatistic kernel_independence_statistic(const PairedSample& pairs,
                                                   const KernelSpec& kernel_y,
                                                   const KernelSpec& kernel_z);

}  // namespace permtest
