#include "permtest/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <unordered_map>

namespace permtest {

namespace {

constexpr double kFloorSlack = 1e-9;

std::vector<std::uint32_t> checked_zero_based(std::span<const int> v, std::size_t d,
                                              const char* who) {
  std::vector<std::uint32_t> out;
  out.reserve(v.size());
  for (int x : v) {
    if (x < 1 || static_cast<std::size_t>(x) > d) {
      throw std::domain_error(std::string(who) + ": category " + std::to_string(x) +
                              " outside 1.." + std::to_string(d));
    }
    out.push_back(static_cast<std::uint32_t>(x - 1));
  }
  return out;
}

template <class Evaluator>
PermutationStatistic wrap(Evaluator ev) {
  auto shared = std::make_shared<const Evaluator>(std::move(ev));
  const std::size_t n = shared->size();
  return {n, [shared](std::span<const std::size_t> p) { return (*shared)(p); }};
}

std::vector<double> resolve_bandwidths(const std::vector<double>& given, std::size_t dim) {
  if (given.empty()) throw std::domain_error("bandwidth list is empty");
  for (double v : given) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("bandwidths must be positive");
  }
  if (given.size() == 1) return std::vector<double>(dim, given[0]);
  if (given.size() != dim) throw std::invalid_argument("bandwidth count does not match dimension");
  return given;
}

void check_unit_cube(const PointSet& p, const char* who) {
  for (double v : p.coords()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error(std::string(who) + ": coordinate outside [0, 1]");
    }
  }
}

std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) {
    if (base != 0 && r > (std::size_t{1} << 53) / base) {
      throw std::overflow_error("bin grid: kappa^dim is too large");
    }
    r *= base;
  }
  return r;
}

TestOutcome combine_adaptive(const std::vector<TestOutcome>& parts, const AdaptiveGrid& grid,
                             double alpha, const PermutationPlan& plan) {
  TestOutcome out;
  out.alpha = alpha;
  out.plan = plan;
  out.critical_value = 0.0;
  double min_p = 1.0;
  std::size_t rejections = 0;
  for (const auto& p : parts) {
    min_p = std::min(min_p, p.p_value);
    rejections += p.reject ? 1 : 0;
    out.replicate_count = std::max(out.replicate_count, p.replicate_count);
  }
  out.statistic = static_cast<double>(rejections);
  out.reject = rejections > 0;
  out.p_value = std::min(1.0, static_cast<double>(grid.gamma_max) * min_p);
  return out;
}

double ln_ln(std::size_t n) { return std::log(std::log(static_cast<double>(n))); }

}  // namespace

// ---- binning -------------------------------------------------------------------

std::size_t BinGrid::cells() const { return ipow(kappa, dim); }

std::size_t holder_kappa_two_sample(std::size_t n1, std::size_t d, double s) {
  if (!(s > 0.0)) throw std::domain_error("smoothness s must be positive");
  if (d == 0) throw std::domain_error("dimension must be positive");
  const double k = std::pow(static_cast<double>(n1), 2.0 / (4.0 * s + static_cast<double>(d)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(k + kFloorSlack)));
}

std::size_t holder_kappa_independence(std::size_t n, std::size_t d1, std::size_t d2, double s) {
  if (!(s > 0.0)) throw std::domain_error("smoothness s must be positive");
  if (d1 == 0 || d2 == 0) throw std::domain_error("dimensions must be positive");
  const double k =
      std::pow(static_cast<double>(n), 2.0 / (4.0 * s + static_cast<double>(d1 + d2)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(k + kFloorSlack)));
}

std::size_t bin_axis(double x, std::size_t kappa) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("bin_data: coordinate outside [0, 1]");
  if (kappa == 0) throw std::domain_error("bin_data: kappa must be positive");
  const auto l = static_cast<std::size_t>(std::floor(x * static_cast<double>(kappa))) + 1;
  return std::min(l, kappa);
}

std::vector<int> bin_data(const PointSet& points, const BinGrid& grid) {
  if (points.dim() != grid.dim) throw std::invalid_argument("bin_data: dimension mismatch");
  const std::size_t cells = grid.cells();
  if (cells > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    throw std::overflow_error("bin_data: too many cells");
  }
  std::vector<int> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t flat = 0;
    for (double x : points[i]) flat = flat * grid.kappa + (bin_axis(x, grid.kappa) - 1);
    out[i] = static_cast<int>(flat + 1);
  }
  return out;
}

// ---- adaptive grids -------------------------------------------------------------

std::size_t gamma_max_two_sample(std::size_t n1, std::size_t d) {
  if (n1 < 3) throw std::domain_error("adaptive test: need n1 >= 3");
  if (d == 0) throw std::domain_error("dimension must be positive");
  const double g =
      std::ceil(2.0 / static_cast<double>(d) * std::log2(static_cast<double>(n1) / ln_ln(n1)));
  if (!(g >= 1.0)) throw std::domain_error("adaptive test: gamma_max < 1 for this sample size");
  return static_cast<std::size_t>(g);
}

std::size_t gamma_max_independence(std::size_t n, std::size_t d1, std::size_t d2) {
  if (n < 4) throw std::domain_error("adaptive test: need n >= 4");
  if (d1 == 0 || d2 == 0) throw std::domain_error("dimensions must be positive");
  const double g = std::ceil(2.0 / static_cast<double>(d1 + d2) *
                             std::log2(static_cast<double>(n) / ln_ln(n)));
  if (!(g >= 1.0)) throw std::domain_error("adaptive test: gamma_max < 1 for this sample size");
  return static_cast<std::size_t>(g);
}

AdaptiveGrid make_adaptive_grid(std::size_t gamma_max, std::size_t dim, double alpha,
                                std::size_t cell_cap) {
  check_alpha(alpha);
  if (gamma_max < 1) throw std::domain_error("adaptive grid: gamma_max must be >= 1");
  AdaptiveGrid g;
  g.gamma_max = gamma_max;
  g.per_test_alpha = alpha / static_cast<double>(gamma_max);
  for (std::size_t j = 1; j <= gamma_max; ++j) {
    const std::size_t kappa = j < 63 ? std::size_t{1} << j : 0;
    bool fits = kappa != 0;
    if (fits) {
      const double cells = std::pow(static_cast<double>(kappa), static_cast<double>(dim));
      fits = cells <= static_cast<double>(cell_cap);
    }
    if (fits) {
      g.kappas.push_back(kappa);
    } else {
      g.dropped.push_back(kappa);
    }
  }
  if (!g.dropped.empty()) {
    g.warnings.push_back("dropped " + std::to_string(g.dropped.size()) +
                         " bin counts whose grid exceeds " + std::to_string(cell_cap) +
                         " cells; constituent level stays alpha/" + std::to_string(gamma_max));
  }
  return g;
}

// ---- statistic builders -----------------------------------------------------------

PermutationStatistic multinomial_two_sample_statistic(std::span<const int> y,
                                                      std::span<const int> z, std::size_t d) {
  auto cats = checked_zero_based(y, d, "multinomial two-sample");
  const auto zc = checked_zero_based(z, d, "multinomial two-sample");
  cats.insert(cats.end(), zc.begin(), zc.end());
  return wrap(CategoricalTwoSampleEvaluator(std::move(cats), d, y.size()));
}

PermutationStatistic multinomial_independence_statistic(std::span<const int> y,
                                                        std::span<const int> z, std::size_t d1,
                                                        std::size_t d2) {
  if (y.size() != z.size()) throw std::invalid_argument("independence: unpaired sample");
  return wrap(CategoricalIndependenceEvaluator(checked_zero_based(y, d1, "independence"),
                                               checked_zero_based(z, d2, "independence")));
}

PermutationStatistic kernel_two_sample_statistic(const TwoSamplePooled& points,
                                                 const KernelSpec& kernel) {
  if (points.n1() < 2 || points.n2() < 2) {
    throw std::domain_error("two-sample test: need n1 >= 2 and n2 >= 2");
  }
  return wrap(TwoSampleGramEvaluator(gram(kernel, points.pooled()), points.n1(), points.n2()));
}

PermutationStatistic kernel_independence_statistic(const PairedSample& pairs,
                                                   const KernelSpec& kernel_y,
                                                   const KernelSpec& kernel_z) {
  if (pairs.y.size() != pairs.z.size()) throw std::invalid_argument("independence: unpaired");
  if (pairs.size() < 4) throw std::domain_error("independence test: need n >= 4");
  return wrap(IndependenceGramEvaluator(gram(kernel_y, pairs.y), gram(kernel_z, pairs.z)));
}

// ---- multinomial and binned tests ------------------------------------------------

TestOutcome multinomial_l2_two_sample(std::span<const int> y, std::span<const int> z,
                                      std::size_t d, double alpha, const PermutationPlan& plan) {
  check_alpha(alpha);
  if (d == 0) throw std::domain_error("multinomial test: d must be positive");
  return run_test(multinomial_two_sample_statistic(y, z, d), plan, alpha);
}

TestOutcome multinomial_l2_independence(std::span<const int> y, std::span<const int> z,
                                        std::size_t d1, std::size_t d2, double alpha,
                                        const PermutationPlan& plan) {
  check_alpha(alpha);
  if (d1 == 0 || d2 == 0) throw std::domain_error("multinomial test: d must be positive");
  return run_test(multinomial_independence_statistic(y, z, d1, d2), plan, alpha);
}

TestOutcome binned_two_sample(const TwoSamplePooled& points, std::size_t kappa, double alpha,
                              const PermutationPlan& plan) {
  if (points.y.dim() != points.z.dim()) throw std::invalid_argument("dimension mismatch");
  check_unit_cube(points.y, "binned test");
  check_unit_cube(points.z, "binned test");
  const BinGrid grid{kappa, points.y.dim()};
  const auto y = bin_data(points.y, grid);
  const auto z = bin_data(points.z, grid);
  return multinomial_l2_two_sample(y, z, grid.cells(), alpha, plan);
}

TestOutcome binned_independence(const PairedSample& pairs, std::size_t kappa, double alpha,
                                const PermutationPlan& plan) {
  check_unit_cube(pairs.y, "binned test");
  check_unit_cube(pairs.z, "binned test");
  const BinGrid gy{kappa, pairs.y.dim()}, gz{kappa, pairs.z.dim()};
  const auto y = bin_data(pairs.y, gy);
  const auto z = bin_data(pairs.z, gz);
  return multinomial_l2_independence(y, z, gy.cells(), gz.cells(), alpha, plan);
}

TestOutcome holder_two_sample(const TwoSamplePooled& points, double s, double alpha,
                              const PermutationPlan& plan) {
  const std::size_t kappa = holder_kappa_two_sample(points.n1(), points.y.dim(), s);
  return binned_two_sample(points, kappa, alpha, plan);
}

TestOutcome holder_independence(const PairedSample& pairs, double s, double alpha,
                                const PermutationPlan& plan) {
  const std::size_t kappa =
      holder_kappa_independence(pairs.size(), pairs.y.dim(), pairs.z.dim(), s);
  return binned_independence(pairs, kappa, alpha, plan);
}

AdaptiveOutcome adaptive_two_sample(const TwoSamplePooled& points, const AdaptiveGrid& grid,
                                    double alpha, const PermutationPlan& plan) {
  check_alpha(alpha);
  AdaptiveOutcome out;
  out.grid = grid;
  for (std::size_t kappa : grid.kappas) {
    out.per_kappa.push_back(binned_two_sample(points, kappa, grid.per_test_alpha, plan));
  }
  out.combined = combine_adaptive(out.per_kappa, grid, alpha, plan);
  return out;
}

AdaptiveOutcome adaptive_independence(const PairedSample& pairs, const AdaptiveGrid& grid,
                                      double alpha, const PermutationPlan& plan) {
  check_alpha(alpha);
  AdaptiveOutcome out;
  out.grid = grid;
  for (std::size_t kappa : grid.kappas) {
    out.per_kappa.push_back(binned_independence(pairs, kappa, grid.per_test_alpha, plan));
  }
  out.combined = combine_adaptive(out.per_kappa, grid, alpha, plan);
  return out;
}

AdaptiveOutcome adaptive_two_sample(const TwoSamplePooled& points, double alpha,
                                    const PermutationPlan& plan) {
  const std::size_t dim = points.y.dim();
  const auto grid = make_adaptive_grid(gamma_max_two_sample(points.n1(), dim), dim, alpha);
  return adaptive_two_sample(points, grid, alpha, plan);
}

AdaptiveOutcome adaptive_independence(const PairedSample& pairs, double alpha,
                                      const PermutationPlan& plan) {
  const std::size_t d1 = pairs.y.dim(), d2 = pairs.z.dim();
  const auto grid =
      make_adaptive_grid(gamma_max_independence(pairs.size(), d1, d2), d1 + d2, alpha);
  return adaptive_independence(pairs, grid, alpha, plan);
}

// ---- sample-splitting l1 tests -----------------------------------------------------

L1TwoSampleLayout l1_two_sample_layout(std::size_t size_y, std::size_t size_z, std::size_t d) {
  if (d == 0) throw std::domain_error("l1 split: d must be positive");
  if (size_y % 2 != 0 || size_z % 2 != 0) {
    throw std::domain_error("l1 split: each group needs an even number (2n) of observations");
  }
  L1TwoSampleLayout l;
  l.n1 = size_y / 2;
  l.n2 = size_z / 2;
  if (l.n1 > l.n2) {
    std::swap(l.n1, l.n2);
    l.swapped = true;
  }
  if (l.n1 < 2) throw std::domain_error("l1 split: need at least 4 observations per group");
  l.m = std::min(l.n2, d);
  l.holdout_begin = l.n2;
  return l;
}

L1IndependenceLayout l1_independence_layout(std::size_t total, std::size_t d1, std::size_t d2) {
  if (d1 == 0 || d2 == 0) throw std::domain_error("l1 split: d must be positive");
  if (total % 6 != 0) throw std::domain_error("l1 split independence: size must be 3n, n even");
  L1IndependenceLayout l;
  l.n = total / 3;
  l.half = l.n / 2;
  if (l.half < 2) throw std::domain_error("l1 split independence: need at least 12 pairs");
  l.m1 = std::min(l.half, d1);
  l.m2 = std::min(l.half, d2);
  for (std::size_t i = 0; i < l.half; ++i) {
    l.ytilde_y.push_back(i);
    l.ytilde_z.push_back(i);
    l.ztilde_y.push_back(l.n + i);
    l.ztilde_z.push_back(2 * l.n + i);
  }
  for (std::size_t i = 0; i < l.m1; ++i) l.holdout_y.push_back(3 * l.n / 2 + i);
  for (std::size_t i = 0; i < l.m2; ++i) l.holdout_z.push_back(5 * l.n / 2 + i);
  return l;
}

TestOutcome l1_split_two_sample(std::span<const int> y, std::span<const int> z, std::size_t d,
                                double alpha, const PermutationPlan& plan) {
  check_alpha(alpha);
  const auto layout = l1_two_sample_layout(y.size(), z.size(), d);
  const auto small = layout.swapped ? z : y;
  const auto large = layout.swapped ? y : z;
  const auto weights = split_weights(large.subspan(layout.holdout_begin, layout.m), d);
  std::vector<double> inverse(d);
  for (std::size_t k = 0; k < d; ++k) inverse[k] = 1.0 / weights[k];

  auto cats = checked_zero_based(small.first(layout.n1), d, "l1 split");
  const auto zc = checked_zero_based(large.first(layout.n1), d, "l1 split");
  cats.insert(cats.end(), zc.begin(), zc.end());
  checked_zero_based(large, d, "l1 split");
  checked_zero_based(small, d, "l1 split");
  const auto stat = wrap(CategoricalTwoSampleEvaluator(std::move(cats), d, layout.n1, inverse));
  return run_test(stat, plan, alpha);
}

TestOutcome l1_split_independence(std::span<const int> y, std::span<const int> z, std::size_t d1,
                                  std::size_t d2, double alpha, const PermutationPlan& plan) {
  check_alpha(alpha);
  if (y.size() != z.size()) throw std::invalid_argument("l1 split independence: unpaired");
  const auto layout = l1_independence_layout(y.size(), d1, d2);
  const auto yc = checked_zero_based(y, d1, "l1 split independence");
  const auto zc = checked_zero_based(z, d2, "l1 split independence");

  std::vector<int> hy, hz;
  for (auto i : layout.holdout_y) hy.push_back(y[i]);
  for (auto i : layout.holdout_z) hz.push_back(z[i]);
  const WeightMatrix w = product_weights(hy, hz, d1, d2);

  // joint cells compressed to those observed in the split, with their inverse weights
  std::unordered_map<std::uint64_t, std::uint32_t> index;
  std::vector<double> inverse;
  std::vector<std::uint32_t> cells;
  auto add = [&](std::size_t iy, std::size_t iz) {
    const std::uint64_t key = static_cast<std::uint64_t>(yc[iy]) * d2 + zc[iz];
    auto [it, fresh] = index.try_emplace(key, static_cast<std::uint32_t>(inverse.size()));
    if (fresh) inverse.push_back(1.0 / w.at(yc[iy], zc[iz]));
    cells.push_back(it->second);
  };
  for (std::size_t i = 0; i < layout.half; ++i) add(layout.ytilde_y[i], layout.ytilde_z[i]);
  for (std::size_t i = 0; i < layout.half; ++i) add(layout.ztilde_y[i], layout.ztilde_z[i]);
  const std::size_t k = inverse.size();
  const auto stat =
      wrap(CategoricalTwoSampleEvaluator(std::move(cells), k, layout.half, std::move(inverse)));
  return run_test(stat, plan, alpha);
}

// ---- kernel tests ---------------------------------------------------------------

double mmd_bandwidth_rule(std::size_t n1, std::size_t n2, std::size_t d, double s) {
  if (!(s > 0.0)) throw std::domain_error("smoothness s must be positive");
  if (n1 == 0 || n2 == 0 || d == 0) throw std::domain_error("bandwidth rule: empty input");
  const double h = 1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2);
  return std::pow(h, 2.0 / (4.0 * s + static_cast<double>(d)));
}

double hsic_bandwidth_rule(std::size_t n, std::size_t d1, std::size_t d2, double s) {
  if (!(s > 0.0)) throw std::domain_error("smoothness s must be positive");
  if (n == 0 || d1 == 0 || d2 == 0) throw std::domain_error("bandwidth rule: empty input");
  return std::pow(static_cast<double>(n), -2.0 / (4.0 * s + static_cast<double>(d1 + d2)));
}

TestOutcome mmd_test(const TwoSamplePooled& points, const BandwidthChoice& bandwidths,
                     double alpha, const PermutationPlan& plan) {
  check_alpha(alpha);
  const std::size_t dim = points.y.dim();
  if (points.z.dim() != dim) throw std::invalid_argument("mmd: dimension mismatch");
  std::vector<double> lambdas;
  if (const auto* rule = std::get_if<SmoothnessRule>(&bandwidths)) {
    lambdas.assign(dim, mmd_bandwidth_rule(points.n1(), points.n2(), dim, rule->s));
  } else {
    lambdas = resolve_bandwidths(std::get<std::vector<double>>(bandwidths), dim);
  }
  return run_test(kernel_two_sample_statistic(points, gaussian_kernel(lambdas)), plan, alpha);
}

TestOutcome hsic_test(const PairedSample& pairs, const BandwidthChoice& bandwidths_y,
                      const BandwidthChoice& bandwidths_z, double alpha,
                      const PermutationPlan& plan) {
  check_alpha(alpha);
  const std::size_t d1 = pairs.y.dim(), d2 = pairs.z.dim();
  auto resolve = [&](const BandwidthChoice& c, std::size_t dim) {
    if (const auto* rule = std::get_if<SmoothnessRule>(&c)) {
      return std::vector<double>(dim, hsic_bandwidth_rule(pairs.size(), d1, d2, rule->s));
    }
    return resolve_bandwidths(std::get<std::vector<double>>(c), dim);
  };
  const auto ky = gaussian_kernel(resolve(bandwidths_y, d1));
  const auto kz = gaussian_kernel(resolve(bandwidths_z, d2));
  return run_test(kernel_independence_statistic(pairs, ky, kz), plan, alpha);
}

TestOutcome poisson_chisq_test(const PoissonCounts& counts, double alpha,
                               const PermutationPlan& plan) {
  check_alpha(alpha);
  return run_test(wrap(PoissonChisqEvaluator(counts)), plan, alpha);
}

}  // namespace permtest
