#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "permtest/simlab.hpp"

using namespace permtest;

namespace {

double total(const std::vector<double>& p) {
  double s = 0;
  for (double v : p) s += v;
  return s;
}

}  // namespace

TEST_CASE("probability vectors") {
  const auto p = pmf(PerturbedHypercube{4, 0.1, {1, 1, -1, -1}});
  REQUIRE(p.size() == 4);
  CHECK(p[0] == doctest::Approx(0.35));
  CHECK(p[1] == doctest::Approx(0.35));
  CHECK(p[2] == doctest::Approx(0.15));
  CHECK(p[3] == doctest::Approx(0.15));
  double dist = 0;
  for (double v : p) dist += (v - 0.25) * (v - 0.25);
  CHECK(std::sqrt(dist) == doctest::Approx(0.2));

  for (double v : pmf(PowerLaw{7, 0.0})) CHECK(v == doctest::Approx(1.0 / 7));
  const auto pl = pmf(PowerLaw{50, 1.3});
  CHECK(std::abs(total(pl) - 1.0) < 1e-12);
  for (std::size_t k = 1; k < pl.size(); ++k) CHECK(pl[k] > pl[k - 1]);

  const auto j = pmf(JointPerturbed{4, 6, 1.0 / 30, {}, {1, -1, 1, -1, 1, -1}});
  CHECK(std::abs(total(j) - 1.0) < 1e-12);
  for (std::size_t a = 0; a < 4; ++a) {
    double row = 0;
    for (std::size_t b = 0; b < 6; ++b) row += j[a * 6 + b];
    CHECK(row == doctest::Approx(1.0 / 4));
  }
  for (std::size_t b = 0; b < 6; ++b) {
    double col = 0;
    for (std::size_t a = 0; a < 4; ++a) col += j[a * 6 + b];
    CHECK(col == doctest::Approx(1.0 / 6));
  }

  CHECK_THROWS_AS(pmf(PerturbedHypercube{4, 0.3, {}}), std::domain_error);
  CHECK_THROWS_AS(pmf(PerturbedHypercube{5, 0.1, {}}), std::domain_error);
  CHECK_THROWS_AS(pmf(PerturbedHypercube{4, 0.1, {1, 1, 1, -1}}), std::domain_error);
  CHECK_THROWS_AS(pmf(JointPerturbed{2, 2, 0.5, {}, {}}), std::domain_error);
  CHECK_THROWS_AS(pmf(ContinuousUniform{2}), std::domain_error);
}

TEST_CASE("sampling") {
  Rng rng(1);
  for (int v : CategoricalSampler({0.0, 1.0, 0.0}).draw(100, rng)) CHECK(v == 2);

  const std::size_t n = 100000;
  const auto draws = sample(Uniform{4}, n, rng).y;
  std::vector<double> freq(4);
  for (int v : draws) freq[static_cast<std::size_t>(v - 1)] += 1.0 / n;
  const double sd = std::sqrt(0.25 * 0.75 / n);
  for (double f : freq) CHECK(std::abs(f - 0.25) <= 3 * sd);

  const auto p = pmf(PowerLaw{6, 1.0});
  const auto pl = sample(PowerLaw{6, 1.0}, n, rng).y;
  std::vector<double> counts(6);
  for (int v : pl) counts[static_cast<std::size_t>(v - 1)] += 1;
  double chi2 = 0;
  for (std::size_t k = 0; k < 6; ++k) chi2 += std::pow(counts[k] - n * p[k], 2) / (n * p[k]);
  CHECK(chi2 < 20.5);  // chi-square(5) upper 0.001 point

  Rng a(42), b(42);
  CHECK(sample(PowerLaw{10, 0.5}, 50, a).y == sample(PowerLaw{10, 0.5}, 50, b).y);
  const auto g1 = sample(GaussianLocation{2, 1.0}, 20, a).points;
  const auto g2 = sample(GaussianLocation{2, 1.0}, 20, b).points;
  CHECK(std::vector<double>(g1.coords().begin(), g1.coords().end()) ==
        std::vector<double>(g2.coords().begin(), g2.coords().end()));

  const auto joint = sample(JointPerturbed{2, 2, 0.0, {}, {}}, 1000, rng);
  CHECK(joint.y.size() == 1000);
  CHECK(joint.z.size() == 1000);
  const auto lifted = lift_to_unit_interval({1, 3, 3}, 4, rng);
  CHECK(lifted[0][0] < 0.25);
  CHECK(lifted[1][0] >= 0.5);
  CHECK(lifted[1][0] < 0.75);
}

TEST_CASE("error rate estimation") {
  const auto yes = estimate_error_rates([](std::size_t, Rng&) { return true; }, 200, 1);
  CHECK(yes.rate == 1.0);
  CHECK(yes.se == 0.0);
  const auto no = estimate_error_rates([](std::size_t, Rng&) { return false; }, 200, 1);
  CHECK(no.rate == 0.0);
  const auto coin = estimate_error_rates([](std::size_t, Rng& r) { return r.uniform() < 0.3; },
                                         4000, 2, 3);
  CHECK(std::abs(coin.rate - 0.3) < 3 * coin.se);
  CHECK_THROWS_AS(estimate_error_rates([](std::size_t, Rng&) { return true; }, 50, 1),
                  std::invalid_argument);
}

TEST_CASE("distribution helpers") {
  CHECK(ks_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_distance({1, 2}, {3, 4}) == 1.0);
  CHECK(ks_distance({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(0.25));
  CHECK(sample_quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(sample_quantile({1, 2}, 0.25) == 1.25);
  CHECK(sample_skewness({1, 1, 1, 10}) > 0.0);
  CHECK(sample_skewness({1, 2, 3}) == doctest::Approx(0.0));
}

TEST_CASE("config parsing") {
  const auto c = ExperimentConfig::from_json(
      nlohmann::json::parse(R"({"experiment":"threshold","trials":10,"B":19,"C_grid":[1,2]})"));
  CHECK(c.trials == 10);
  CHECK(c.permutations == 19);
  CHECK(c.c_grid == std::vector<double>{1, 2});
  CHECK(c.n1 == 50);
  const auto q = ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"qq"})"));
  CHECK(q.n1 == 200);
  CHECK(q.permutations == 2000);
  const auto ind = ExperimentConfig::from_json(
      nlohmann::json::parse(R"({"experiment":"threshold","design":"independence"})"));
  CHECK(ind.n1 == 100);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"qq","bogus":1})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"nope"})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"power","trials":0})")),
      std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"power","trials":"x"})")),
      std::invalid_argument);
}

TEST_CASE("threshold experiment") {
  auto cfg = ExperimentConfig::defaults(Experiment::Threshold);
  cfg.trials = 100;
  cfg.permutations = 99;
  cfg.gammas = {0.4, 1.2};
  cfg.c_grid = {1.0, 1e6};
  const auto rows = experiment_threshold_sensitivity(cfg);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].method == "permutation");
  CHECK(std::isnan(rows[0].c));
  CHECK(rows[2].method == "threshold");
  CHECK(rows[2].c == 1e6);
  CHECK(rows[2].type1 == 0.0);

  std::ostringstream a, b;
  write_csv(a, rows);
  cfg.workers = 3;
  write_csv(b, experiment_threshold_sensitivity(cfg));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("# permtest-csv v1 experiment=threshold\nmethod,C,gamma,type1,se\n", 0) == 0);
}

TEST_CASE("histogram experiment") {
  auto cfg = ExperimentConfig::defaults(Experiment::Histogram);
  cfg.d_values = {5, 100};
  cfg.null_replicates = 1000;
  const auto rows = experiment_null_histogram(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].values.size() == 1000);
  CHECK(rows[0].skewness > 0.0);
  CHECK(rows[0].skewness > rows[1].skewness);
  for (const auto& r : rows) CHECK(std::abs(r.mean) <= 3 * r.se);
  std::ostringstream a, b;
  write_csv(a, rows);
  write_csv(b, experiment_null_histogram(cfg));
  CHECK(a.str() == b.str());
}

TEST_CASE("qq experiment") {
  auto cfg = ExperimentConfig::defaults(Experiment::QQ);
  cfg.d_values = {5};
  cfg.scenarios = {"null"};
  cfg.permutations = 500;
  cfg.null_replicates = 500;
  const auto rows = experiment_qq(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].q.size() == 99);
  CHECK(rows[0].ks < 0.1);
  for (std::size_t i = 1; i < rows[0].q.size(); ++i) {
    CHECK(rows[0].permutation[i] >= rows[0].permutation[i - 1]);
    CHECK(rows[0].null[i] >= rows[0].null[i - 1]);
  }
}

TEST_CASE("power experiment") {
  auto cfg = ExperimentConfig::defaults(Experiment::Power);
  CHECK(rate_delta(cfg, 0.0) == 0.0);
  const double delta = rate_delta(cfg, 2.0);
  const double b = 1.0 / cfg.d + delta * delta * cfg.d;
  CHECK(delta * std::sqrt(double(cfg.d)) ==
        doctest::Approx(2.0 * std::pow(b, 0.25) / std::sqrt(double(cfg.n1))));
  CHECK_THROWS_AS(rate_delta(cfg, 100.0), std::domain_error);

  cfg.trials = 100;
  cfg.permutations = 99;
  cfg.multipliers = {0.0, 4.0};
  const auto rows = experiment_power(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].power <= 0.05 + 3 * std::sqrt(0.05 * 0.95 / 100));
  CHECK(rows[1].power > rows[0].power);
}
