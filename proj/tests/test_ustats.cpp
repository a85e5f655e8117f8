#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "permtest/permutation.hpp"
#include "permtest/ustats.hpp"
#include "test_util.hpp"

using namespace permtest;
using testutil::close_rel;

namespace {

// Brute-force reference independent of the library's own naive evaluators.
double ref_two_sample_indicator(const std::vector<int>& y, const std::vector<int>& z) {
  auto g = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  double s = 0;
  const std::size_t n1 = y.size(), n2 = z.size();
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t b = 0; b < n1; ++b)
      for (std::size_t c = 0; c < n2; ++c)
        for (std::size_t e = 0; e < n2; ++e)
          if (a != b && c != e) s += g(y[a], y[b]) + g(z[c], z[e]) - g(y[a], z[e]) - g(y[b], z[c]);
  return s / double(n1 * (n1 - 1) * n2 * (n2 - 1));
}

double ref_independence_indicator(const std::vector<int>& y, const std::vector<int>& z) {
  auto g = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  const std::size_t n = y.size();
  double s = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t e = 0; e < n; ++e) {
          if (a == b || a == c || a == e || b == c || b == e || c == e) continue;
          s += (g(y[a], y[b]) + g(y[c], y[e]) - g(y[a], y[c]) - g(y[b], y[e])) *
               (g(z[a], z[b]) + g(z[c], z[e]) - g(z[a], z[c]) - g(z[b], z[e]));
        }
  return s / double(n * (n - 1) * (n - 2) * (n - 3));
}

TwoSamplePooled categorical_pair(const std::vector<int>& y, const std::vector<int>& z) {
  return {PointSet::categories(y), PointSet::categories(z)};
}

std::vector<std::int64_t> counts_of(const std::vector<int>& v, int d) {
  std::vector<std::int64_t> c(d, 0);
  for (int x : v) ++c[x - 1];
  return c;
}

std::vector<std::uint32_t> zero_based(const std::vector<int>& v) {
  std::vector<std::uint32_t> out;
  for (int x : v) out.push_back(static_cast<std::uint32_t>(x - 1));
  return out;
}

}  // namespace

TEST_CASE("two-sample hand example") {
  const std::vector<int> y{1, 1}, z{2, 2};
  CHECK(ref_two_sample_indicator(y, z) == doctest::Approx(2.0));
  const auto data = categorical_pair(y, z);
  const auto k = multinomial_kernel(2);
  CHECK(two_sample_u_naive(data, k) == doctest::Approx(2.0));
  CHECK(two_sample_u(gram(k, data.pooled()), 2, 2) == doctest::Approx(2.0));
  const std::vector<std::int64_t> cy{2, 0}, cz{0, 2};
  CHECK(multinomial_two_sample_u(cy, cz) == doctest::Approx(2.0));
}

TEST_CASE("two-sample identical samples give zero") {
  const auto data = categorical_pair({1, 1}, {1, 1});
  const auto k = multinomial_kernel(2);
  CHECK(two_sample_u_naive(data, k) == 0.0);
  CHECK(two_sample_u(gram(k, data.pooled()), 2, 2) == 0.0);
  const std::vector<std::int64_t> c{2, 0};
  CHECK(multinomial_two_sample_u(c, c) == 0.0);
}

TEST_CASE("two-sample closed form matches references on random data") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(6));
    const std::size_t n1 = 2 + rng.below(6), n2 = 2 + rng.below(6);
    const auto y = testutil::random_categories(n1, d, rng);
    const auto z = testutil::random_categories(n2, d, rng);
    const double ref = ref_two_sample_indicator(y, z);
    const auto data = categorical_pair(y, z);
    const auto k = multinomial_kernel(d);
    CHECK(close_rel(two_sample_u_naive(data, k), ref, 1e-12));
    CHECK(close_rel(two_sample_u(gram(k, data.pooled()), n1, n2), ref, 1e-12));
    CHECK(close_rel(multinomial_two_sample_u(counts_of(y, d), counts_of(z, d)), ref, 1e-12));

    std::vector<int> pooled = y;
    pooled.insert(pooled.end(), z.begin(), z.end());
    CategoricalTwoSampleEvaluator ev(zero_based(pooled), d, n1);
    TwoSampleGramEvaluator gev(gram(k, data.pooled()), n1, n2);
    const auto perm = sample_permutation(n1 + n2, rng);
    std::vector<int> yp, zp;
    for (std::size_t i = 0; i < n1 + n2; ++i) (i < n1 ? yp : zp).push_back(pooled[perm[i]]);
    const double pref = ref_two_sample_indicator(yp, zp);
    CHECK(close_rel(ev(perm.indices()), pref, 1e-12));
    CHECK(close_rel(gev(perm.indices()), pref, 1e-12));
    CHECK(close_rel(two_sample_u_naive(data, k, perm.indices()), pref, 1e-12));
  }
}

TEST_CASE("weighted categorical evaluator matches naive with weighted kernel") {
  Rng rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const int d = 2 + static_cast<int>(rng.below(4));
    const auto holdout = testutil::random_categories(3, d, rng);
    const auto w = split_weights(holdout, d);
    const auto k = weighted_multinomial_kernel(w);
    const std::size_t n1 = 3, n2 = 4;
    const auto y = testutil::random_categories(n1, d, rng);
    const auto z = testutil::random_categories(n2, d, rng);
    std::vector<int> pooled = y;
    pooled.insert(pooled.end(), z.begin(), z.end());
    std::vector<double> inv;
    for (double v : w) inv.push_back(1.0 / v);
    CategoricalTwoSampleEvaluator ev(zero_based(pooled), d, n1, inv);
    const auto data = categorical_pair(y, z);
    const auto perm = sample_permutation(n1 + n2, rng);
    CHECK(close_rel(ev(perm.indices()), two_sample_u_naive(data, k, perm.indices()), 1e-12));
    CHECK(close_rel(multinomial_two_sample_u(counts_of(y, d), counts_of(z, d), w),
                    two_sample_u_naive(data, k), 1e-12));
  }
}

TEST_CASE("two-sample errors") {
  const auto data = categorical_pair({1}, {1, 2});
  CHECK_THROWS_AS(two_sample_u_naive(data, multinomial_kernel(2)), std::domain_error);
  Rng rng(1);
  const auto big = categorical_pair(testutil::random_categories(16, 3, rng),
                                    testutil::random_categories(16, 3, rng));
  CHECK_THROWS_AS(two_sample_u_naive(big, multinomial_kernel(3)), std::length_error);
  const std::vector<std::int64_t> cy{1, 0}, cz{1, 1};
  CHECK_THROWS_AS(multinomial_two_sample_u(cy, cz), std::domain_error);
}

TEST_CASE("independence hand example") {
  const std::vector<int> y{1, 1, 2, 2}, z{1, 1, 2, 2};
  const double ref = ref_independence_indicator(y, z);
  CHECK(ref == doctest::Approx(8.0 / 3.0));
  PairedSample p{PointSet::categories(y), PointSet::categories(z)};
  const auto k = multinomial_kernel(2);
  CHECK(independence_u_naive(p, k, k) == doctest::Approx(ref));
  CHECK(independence_u(gram(k, p.y), gram(k, p.z)) == doctest::Approx(ref));
  CategoricalIndependenceEvaluator ev(zero_based(y), zero_based(z));
  const auto id = Permutation::identity(4);
  CHECK(ev(id.indices()) == doctest::Approx(ref));
}

TEST_CASE("independence with zero Z Gram is zero") {
  Rng rng(3);
  const auto y = testutil::random_points(6, 1, rng);
  const auto gy = gram(gaussian_kernel({0.5}), y);
  const GramMatrix gz(6, std::vector<double>(36, 0.0), true);
  CHECK(independence_u(gy, gz) == 0.0);
}

TEST_CASE("independence O(n^2) forms match references") {
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 4 + rng.below(5);
    const int d1 = 1 + static_cast<int>(rng.below(3)), d2 = 1 + static_cast<int>(rng.below(3));
    const auto y = testutil::random_categories(n, d1, rng);
    const auto z = testutil::random_categories(n, d2, rng);
    const double ref = ref_independence_indicator(y, z);
    PairedSample p{PointSet::categories(y), PointSet::categories(z)};
    const auto ky = multinomial_kernel(d1), kz = multinomial_kernel(d2);
    CHECK(close_rel(independence_u_naive(p, ky, kz), ref, 1e-12));
    CHECK(close_rel(independence_u(gram(ky, p.y), gram(kz, p.z)), ref, 1e-12));

    const auto perm = sample_permutation(n, rng);
    std::vector<int> zp(n);
    for (std::size_t i = 0; i < n; ++i) zp[i] = z[perm[i]];
    const double pref = ref_independence_indicator(y, zp);
    CategoricalIndependenceEvaluator ev(zero_based(y), zero_based(z));
    IndependenceGramEvaluator gev(gram(ky, p.y), gram(kz, p.z));
    CHECK(close_rel(ev(perm.indices()), pref, 1e-12));
    CHECK(close_rel(gev(perm.indices()), pref, 1e-12));
    CHECK(close_rel(independence_u_naive(p, ky, kz, perm.indices()), pref, 1e-12));
  }
}

TEST_CASE("independence Gaussian Gram form matches naive") {
  Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 4 + rng.below(5);
    PairedSample p{testutil::random_points(n, 2, rng), testutil::random_points(n, 1, rng)};
    const auto ky = gaussian_kernel({0.3, 0.7}), kz = gaussian_kernel({0.4});
    const auto perm = sample_permutation(n, rng);
    const double naive = independence_u_naive(p, ky, kz, perm.indices());
    CHECK(close_rel(independence_u(gram(ky, p.y), gram(kz, p.z), perm.indices()), naive, 1e-12));
    IndependenceGramEvaluator gev(gram(ky, p.y), gram(kz, p.z));
    CHECK(close_rel(gev(perm.indices()), naive, 1e-12));
  }
}

TEST_CASE("independence errors") {
  const auto k = multinomial_kernel(2);
  PairedSample p{PointSet::categories(std::vector<int>{1, 2, 1}),
                 PointSet::categories(std::vector<int>{1, 2, 2})};
  CHECK_THROWS_AS(independence_u(gram(k, p.y), gram(k, p.z)), std::domain_error);
  CHECK_THROWS_AS(independence_u_naive(p, k, k), std::domain_error);
}

TEST_CASE("permutation averages vanish") {
  Rng rng(29);
  for (std::size_t n : {4u, 5u, 6u}) {
    PairedSample p{testutil::random_points(n, 1, rng), testutil::random_points(n, 1, rng)};
    const auto k = gaussian_kernel({0.5});
    IndependenceGramEvaluator ev(gram(k, p.y), gram(k, p.z));
    double s = 0;
    for (const auto& perm : PermutationEnumeration(n)) s += ev(perm);
    CHECK(std::abs(s / double(factorial(n))) < 1e-12);

    const std::size_t n1 = n / 2, n2 = n - n1;
    TwoSampleGramEvaluator tv(gram(k, testutil::random_points(n, 1, rng)), n1, n2);
    double t = 0;
    for (const auto& perm : PermutationEnumeration(n)) t += tv(perm);
    CHECK(std::abs(t / double(factorial(n))) < 1e-12);
  }
}

TEST_CASE("poisson chi-square hand values") {
  auto single = [](std::int64_t v, std::int64_t w) {
    PoissonCounts c;
    c.d = 1;
    c.v = {v};
    c.w = {w};
    return poisson_chisq(c);
  };
  CHECK(single(3, 3) == doctest::Approx(-1.0));
  CHECK(single(0, 0) == 0.0);
  CHECK(single(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("poisson chi-square relabeling") {
  const auto c = PoissonCounts::from_individuals(2, {1, 0, 2, 1, 0, 0}, {0, 3, 1, 1, 0, 2});
  CHECK(c.v == std::vector<std::int64_t>{3, 1});
  CHECK(c.w == std::vector<std::int64_t>{1, 6});
  const auto id = Permutation::identity(6);
  CHECK(poisson_chisq(c, id.indices()) == doctest::Approx(poisson_chisq(c)));
  // swapping individuals within a group leaves the statistic unchanged
  const Permutation within({2, 0, 1, 5, 3, 4});
  CHECK(poisson_chisq(c, within.indices()) == poisson_chisq(c));
  // swapping the groups wholesale flips every Delta and leaves squares intact
  const Permutation swap({3, 4, 5, 0, 1, 2});
  CHECK(poisson_chisq(c, swap.indices()) == doctest::Approx(poisson_chisq(c)));

  PoissonCounts bare;
  bare.d = 2;
  bare.v = {1, 1};
  bare.w = {1, 1};
  CHECK_THROWS_AS(poisson_chisq(bare, Permutation::identity(4).indices()), std::domain_error);
  const auto uneven = PoissonCounts::from_individuals(1, {1, 2}, {1});
  CHECK_THROWS_AS(poisson_chisq(uneven), std::domain_error);
}

TEST_CASE("linear statistic") {
  const std::vector<double> y{1, 2}, z{1, 2};
  CHECK(linear_stat(y, z) == doctest::Approx(0.25));
  const std::vector<double> zc{3, 3};
  CHECK(linear_stat(y, zc) == 0.0);
  CHECK_THROWS_AS(linear_stat(std::vector<double>{1}, std::vector<double>{1}), std::domain_error);

  Rng rng(31);
  for (std::size_t n = 2; n <= 6; ++n) {
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    double s = 0;
    for (const auto& perm : PermutationEnumeration(n)) s += linear_stat(a, b, perm);
    CHECK(std::abs(s / double(factorial(n))) < 1e-12);
  }
}
