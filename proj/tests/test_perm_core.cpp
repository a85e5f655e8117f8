#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "permtest/calibration.hpp"
#include "permtest/permutation.hpp"

using namespace permtest;

namespace {

PermutationDistribution with_replicates(std::vector<double> reps, double observed,
                                        PlanMode mode = PlanMode::Exact) {
  PermutationDistribution d;
  std::sort(reps.begin(), reps.end());
  d.replicates = std::move(reps);
  d.observed = observed;
  d.plan.mode = mode;
  return d;
}

PermutationStatistic constant_stat(std::size_t n, double value) {
  return {n, [value](std::span<const std::size_t>) { return value; }};
}

// Group-mean difference on a two-sample layout: first half vs second half.
PermutationStatistic mean_difference(std::vector<double> x) {
  const std::size_t n = x.size();
  return {n, [x = std::move(x)](std::span<const std::size_t> p) {
            const std::size_t h = p.size() / 2;
            double a = 0, b = 0;
            for (std::size_t i = 0; i < p.size(); ++i) (i < h ? a : b) += x[p[i]];
            return a / double(h) - b / double(p.size() - h);
          }};
}

}  // namespace

TEST_CASE("permutation validation") {
  CHECK_NOTHROW(Permutation({2, 0, 1}));
  CHECK_THROWS_AS(Permutation({0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Permutation({0, 3, 1}), std::invalid_argument);
  CHECK(Permutation::identity(4).is_identity());
}

TEST_CASE("sample_permutation") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_permutation(0, rng), std::domain_error);
  for (int i = 0; i < 10; ++i) CHECK(sample_permutation(1, rng).is_identity());
  for (int i = 0; i < 100; ++i) CHECK(is_bijection(sample_permutation(5, rng).indices()));

  const int draws = 100000;
  int swapped = 0;
  for (int i = 0; i < draws; ++i) swapped += sample_permutation(2, rng)[0] == 1;
  const double sigma = std::sqrt(0.25 / draws);
  CHECK(std::abs(double(swapped) / draws - 0.5) < 3 * sigma);
}

TEST_CASE("sample_permutation is uniform over S_4") {
  Rng rng(99);
  std::vector<int> freq(24, 0);
  const int draws = 240000;
  auto all = enumerate_permutations(4);
  for (int i = 0; i < draws; ++i) {
    const auto p = sample_permutation(4, rng);
    const auto it = std::find(all.begin(), all.end(), p);
    ++freq[it - all.begin()];
  }
  double chi2 = 0;
  const double e = draws / 24.0;
  for (int f : freq) chi2 += (f - e) * (f - e) / e;
  CHECK(chi2 < 49.7);  // 0.999 quantile of chi-square with 23 df
}

TEST_CASE("enumerate_permutations") {
  CHECK(enumerate_permutations(1).size() == 1);
  CHECK(enumerate_permutations(1)[0].is_identity());
  const auto three = enumerate_permutations(3);
  CHECK(three.size() == 6);
  std::set<std::vector<std::size_t>> distinct;
  for (const auto& p : three) distinct.insert({p.indices().begin(), p.indices().end()});
  CHECK(distinct.size() == 6);
  const auto four = enumerate_permutations(4);
  CHECK(four.size() == 24);
  CHECK(std::find(four.begin(), four.end(), Permutation({0, 1, 2, 3})) != four.end());
  CHECK(std::find(four.begin(), four.end(), Permutation({3, 2, 1, 0})) != four.end());
  CHECK_THROWS_AS(enumerate_permutations(11), std::length_error);
  CHECK_THROWS_AS(enumerate_permutations(5, 100), std::length_error);
}

TEST_CASE("permutation_from_rank follows lexicographic order") {
  std::uint64_t r = 0;
  for (const auto& p : PermutationEnumeration(5)) {
    CHECK(permutation_from_rank(5, r++) == p);
  }
}

TEST_CASE("critical_value") {
  CHECK(critical_value(with_replicates({1, 2, 3, 4, 5}, 0), 0.2) == 4);
  CHECK(critical_value(with_replicates({7, 7, 7}, 7), 0.01) == 7);
  CHECK(critical_value(with_replicates({7, 7, 7}, 7), 0.9) == 7);
  CHECK(critical_value(with_replicates({0, 0, 1}, 0), 0.5) == 0);
  CHECK_THROWS_AS(critical_value(with_replicates({}, 0), 0.5), std::domain_error);
  CHECK_THROWS_AS(critical_value(with_replicates({1}, 0), 1.0), std::invalid_argument);

  const auto d = with_replicates({0.3, 1.5, -2, 4, 4, 0.1, 9, 2.2, 2.2, 3}, 0);
  double prev = critical_value(d, 0.01);
  for (double a = 0.02; a < 1.0; a += 0.01) {
    const double c = critical_value(d, a);
    CHECK(c <= prev);
    CHECK(std::find(d.replicates.begin(), d.replicates.end(), c) != d.replicates.end());
    prev = c;
  }
}

TEST_CASE("p_value conventions") {
  std::vector<double> reps(99);
  for (int i = 0; i < 99; ++i) reps[i] = i;
  auto d = with_replicates(reps, 1000, PlanMode::MonteCarlo);
  d.replicates.push_back(1000);
  d.identity_appended = true;
  CHECK(p_value(d) == doctest::Approx(1.0 / 100));

  auto flat = with_replicates(std::vector<double>(50, 3.0), 3.0, PlanMode::MonteCarlo);
  flat.replicates.push_back(3.0);
  flat.identity_appended = true;
  CHECK(p_value(flat) == 1.0);

  CHECK(p_value(with_replicates({1.0, -1.0}, 1.0)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(p_value(with_replicates({}, 0)), std::domain_error);
}

TEST_CASE("exact n=2 antisymmetric statistic") {
  const auto stat = mean_difference({1.0, 0.0});
  const auto dist = permutation_distribution(stat, PermutationPlan::exact());
  CHECK(dist.replicates == std::vector<double>{-1.0, 1.0});
  CHECK(p_value(dist) == doctest::Approx(0.5));
}

TEST_CASE("permutation_distribution") {
  const auto c = constant_stat(5, 2.5);
  const auto mc = permutation_distribution(c, PermutationPlan::monte_carlo(40, 7));
  CHECK(mc.size() == 41);
  for (double v : mc.replicates) CHECK(v == 2.5);
  CHECK(permutation_distribution(constant_stat(3, 1), PermutationPlan::exact()).size() == 6);
  CHECK_THROWS_AS(permutation_distribution(constant_stat(11, 1), PermutationPlan::exact()),
                  std::length_error);

  auto plan = PermutationPlan::monte_carlo(0, 1);
  CHECK_THROWS_AS(permutation_distribution(c, plan), std::invalid_argument);

  const auto dist = permutation_distribution(mean_difference({1, 2, 3, 4, 5, 6}),
                                             PermutationPlan::monte_carlo(200, 3));
  CHECK(std::is_sorted(dist.replicates.begin(), dist.replicates.end()));
}

TEST_CASE("statistic failures carry the replicate index") {
  PermutationStatistic bad{4, [](std::span<const std::size_t> p) -> double {
                             if (p[0] == 3 && p[1] == 2) throw std::runtime_error("boom");
                             return 0.0;
                           }};
  try {
    permutation_distribution(bad, PermutationPlan::exact());
    FAIL("expected failure");
  } catch (const StatisticError& e) {
    // lexicographic rank of the first permutation starting (3, 2, ...)
    CHECK(e.permutation_index() == 22);
  }
}

TEST_CASE("Monte Carlo determinism across worker counts") {
  std::vector<double> x(30);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(double(i));
  const auto stat = mean_difference(x);
  const auto a = permutation_distribution(stat, PermutationPlan::monte_carlo(999, 42, 1));
  const auto b = permutation_distribution(stat, PermutationPlan::monte_carlo(999, 42, 4));
  const auto c = permutation_distribution(stat, PermutationPlan::monte_carlo(999, 42, 7));
  CHECK(a.replicates == b.replicates);
  CHECK(a.replicates == c.replicates);
  const auto e1 = permutation_distribution(mean_difference({1, 5, 2, 8, 3, 9, 4}),
                                           [] { auto p = PermutationPlan::exact(); p.workers = 3; return p; }());
  const auto e2 = permutation_distribution(mean_difference({1, 5, 2, 8, 3, 9, 4}),
                                           PermutationPlan::exact());
  CHECK(e1.replicates == e2.replicates);
}

TEST_CASE("run_test") {
  const auto out = run_test(constant_stat(6, 1.0), PermutationPlan::monte_carlo(99, 1), 0.05);
  CHECK_FALSE(out.reject);
  CHECK(out.p_value == 1.0);

  // a clean separation: the observed split is the extreme of 20 choose 10
  std::vector<double> x(20);
  for (std::size_t i = 0; i < 20; ++i) x[i] = i < 10 ? 10.0 + i : double(i - 10);
  const auto strong = run_test(mean_difference(x), PermutationPlan::monte_carlo(999, 9), 0.05);
  CHECK(strong.reject);
  CHECK(strong.statistic > strong.critical_value);
  CHECK(strong.p_value == doctest::Approx(1.0 / 1000));
  CHECK(strong.replicate_count == 1000);
}

TEST_CASE("p-value and rejection agree") {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(12);
    for (auto& v : x) v = rng.uniform();
    const auto dist = permutation_distribution(mean_difference(x),
                                               PermutationPlan::monte_carlo(99, rng()));
    for (double a : {0.01, 0.05, 0.1, 0.2, 0.5}) {
      const auto o = make_outcome(dist, a);
      CHECK(o.reject == (o.p_value <= a));
      CHECK(o.p_value > 0.0);
      CHECK(o.p_value <= 1.0);
    }
  }
}
