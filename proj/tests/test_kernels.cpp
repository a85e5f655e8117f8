#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "permtest/kernels.hpp"
#include "test_util.hpp"

using namespace permtest;

namespace {

double sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

std::vector<double> pt(std::initializer_list<double> v) { return v; }

}  // namespace

TEST_CASE("indicator kernel") {
  const auto k = multinomial_kernel(10);
  CHECK(eval(k, pt({3}), pt({3})) == 1.0);
  CHECK(eval(k, pt({3}), pt({5})) == 0.0);
  CHECK_THROWS_AS(eval(k, pt({0}), pt({5})), std::domain_error);
  CHECK_THROWS_AS(eval(k, pt({11}), pt({5})), std::domain_error);
  CHECK_THROWS_AS(eval(k, pt({2.5}), pt({5})), std::domain_error);
  CHECK_THROWS_AS(eval(k, pt({1, 2}), pt({1, 2})), std::domain_error);
}

TEST_CASE("gaussian kernel") {
  const auto k = gaussian_kernel({1.0});
  CHECK(eval(k, pt({0.3}), pt({0.3})) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)));
  CHECK(eval(k, pt({0.3}), pt({0.3})) == doctest::Approx(0.3989423).epsilon(1e-7));
  CHECK_THROWS_AS(gaussian_kernel({0.0}), std::domain_error);
  CHECK_THROWS_AS(gaussian_kernel({1.0, -2.0}), std::domain_error);
  CHECK_THROWS_AS(eval(k, pt({0.1, 0.2}), pt({0.1, 0.2})), std::domain_error);

  const auto k2 = gaussian_kernel({0.2, 0.5});
  const double peak = kernel_max(k2);
  CHECK(peak == doctest::Approx(1.0 / (2 * std::numbers::pi * 0.1)));
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{rng.uniform(), rng.uniform()}, y{rng.uniform(), rng.uniform()};
    const double v = eval(k2, x, y);
    CHECK(v > 0.0);
    CHECK(v < peak);
    CHECK(v == eval(k2, y, x));
    CHECK(eval(k2, x, x) == peak);
  }
  // far apart points underflow gracefully
  CHECK(eval(gaussian_kernel({0.01}), pt({0}), pt({100})) == 0.0);
}

TEST_CASE("weighted multinomial kernel") {
  const auto k = weighted_multinomial_kernel({0.75, 0.25});
  CHECK(eval(k, pt({2}), pt({2})) == doctest::Approx(4.0));
  CHECK(eval(k, pt({1}), pt({1})) == doctest::Approx(4.0 / 3.0));
  CHECK(eval(k, pt({1}), pt({2})) == 0.0);
  CHECK_THROWS_AS(weighted_multinomial_kernel({0.9, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_multinomial_kernel({0.5, 0.3}), std::invalid_argument);
}

TEST_CASE("split_weights") {
  const std::vector<int> h1{1, 1};
  const auto w = split_weights(h1, 2);
  CHECK(w[0] == doctest::Approx(0.75));
  CHECK(w[1] == doctest::Approx(0.25));
  const std::vector<int> h2{1, 2, 3};
  for (double v : split_weights(h2, 3)) CHECK(v == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(split_weights(std::vector<int>{}, 3), std::domain_error);

  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(20));
    const auto h = testutil::random_categories(1 + rng.below(30), d, rng);
    const auto ws = split_weights(h, d);
    CHECK(std::abs(sum(ws) - 1.0) < 1e-12);
    for (double v : ws) CHECK(v >= 1.0 / (2.0 * d));
  }
}

TEST_CASE("product_weights") {
  const std::vector<int> hy{1, 1}, hz{2, 2};
  const auto w = product_weights(hy, hz, 2, 2);
  CHECK(w.at(0, 0) == doctest::Approx(0.75 * 0.25));
  CHECK(w.at(0, 1) == doctest::Approx(0.75 * 0.75));
  CHECK(w.at(1, 0) == doctest::Approx(0.25 * 0.25));
  CHECK(w.at(1, 1) == doctest::Approx(0.25 * 0.75));
  const std::vector<int> uy{1, 2, 3}, uz{1, 2};
  const auto u = product_weights(uy, uz, 3, 2);
  for (double v : u.dense()) CHECK(v == doctest::Approx(1.0 / 6));
  CHECK_THROWS_AS(product_weights(std::vector<int>{}, uz, 3, 2), std::domain_error);

  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const int d1 = 1 + static_cast<int>(rng.below(8)), d2 = 1 + static_cast<int>(rng.below(8));
    const auto a = testutil::random_categories(1 + rng.below(10), d1, rng);
    const auto b = testutil::random_categories(1 + rng.below(10), d2, rng);
    const auto m = product_weights(a, b, d1, d2);
    CHECK(std::abs(sum(m.dense()) - 1.0) < 1e-12);
    const auto k = product_weighted_kernel(m);
    CHECK(eval(k, pt({1, 1}), pt({1, 1})) == doctest::Approx(1.0 / m.at(0, 0)));
    const auto sparse = product_weighted_kernel(m, 0);
    CHECK(eval(sparse, pt({1, 1}), pt({1, 1})) == doctest::Approx(1.0 / m.at(0, 0)));
  }
}

TEST_CASE("gram matrices") {
  const auto one = gram(multinomial_kernel(2), PointSet::categories(std::vector<int>{1}), true);
  CHECK(one.size() == 1);
  CHECK(one(0, 0) == 0.0);

  const auto g = gram(multinomial_kernel(2), PointSet::categories(std::vector<int>{1, 1, 2}));
  CHECK(g(0, 1) == 1.0);
  CHECK(g(0, 2) == 0.0);
  CHECK(g(1, 2) == 0.0);
  CHECK(g.diagonal_zeroed());

  Rng rng(12);
  const auto pts = testutil::random_points(40, 3, rng);
  const auto gg = gram(gaussian_kernel({0.3, 0.2, 0.4}), pts, false);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j) CHECK(gg(i, j) == gg(j, i));
  CHECK(gg(0, 0) == kernel_max(gaussian_kernel({0.3, 0.2, 0.4})));
  CHECK_THROWS_AS(GramMatrix(2, {0, 1, 2, 0}, true), std::invalid_argument);
}
