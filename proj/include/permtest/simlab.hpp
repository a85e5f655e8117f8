#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "permtest/kernels.hpp"
#include "permtest/rng.hpp"

namespace permtest {

// ---- distributions -----------------------------------------------------------------

struct PowerLaw {
  std::size_t d = 1;
  double gamma = 0.0;
};
struct Uniform {
  std::size_t d = 1;
};
/// 1/d + delta * signs[k]; empty signs means (+,...,+,-,...,-).
struct PerturbedHypercube {
  std::size_t d = 2;
  double delta = 0.0;
  std::vector<int> signs;
};
/// 1/(d1 d2) + delta * signs_y[k1] * signs_z[k2], row-major over (k1, k2).
struct JointPerturbed {
  std::size_t d1 = 2, d2 = 2;
  double delta = 0.0;
  std::vector<int> signs_y, signs_z;
};
struct ContinuousUniform {
  std::size_t dim = 1;
};
/// N(shift * 1, I) in `dim` dimensions.
struct GaussianLocation {
  std::size_t dim = 1;
  double shift = 0.0;
};

using DistSpec = std::variant<PowerLaw, Uniform, PerturbedHypercube, JointPerturbed,
                              ContinuousUniform, GaussianLocation>;

/// Probability vector (or d1 x d2 row-major matrix for JointPerturbed).
/// Continuous specs and violated invariants are std::domain_error.
std::vector<double> pmf(const DistSpec& spec);

/// (+1 x d/2, -1 x d/2); odd d is a domain error.
std::vector<int> balanced_signs(std::size_t d);

struct Dataset {
  std::vector<int> y;  // 1-based categories (first coordinate of joint draws)
  std::vector<int> z;  // second coordinate of joint draws
  PointSet points{1, {}};
};

/// n i.i.d. draws; categorical specs fill y (and z for joint specs),
/// continuous specs fill points.
Dataset sample(const DistSpec& spec, std::size_t n, Rng& rng);

/// Inverse-CDF sampler over 1..size().
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::vector<double> probabilities);
  int operator()(Rng& rng) const;
  std::vector<int> draw(std::size_t n, Rng& rng) const;
  std::size_t size() const noexcept { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

/// Category c in 1..kappa becomes a uniform point in [(c-1)/kappa, c/kappa).
PointSet lift_to_unit_interval(const std::vector<int>& cells, std::size_t kappa, Rng& rng);

// ---- error rates ------------------------------------------------------------------

struct ErrorRate {
  double rate = 0.0;
  double se = 0.0;
  std::size_t trials = 0;
};

/// Fraction of trials where `trial(i, rng)` rejects; trial i draws from
/// stream (seed, i). Requires trials >= 100.
ErrorRate estimate_error_rates(const std::function<bool(std::size_t, Rng&)>& trial,
                               std::size_t trials, std::uint64_t seed, unsigned workers = 1);

/// Binomial standard error sqrt(p (1 - p) / trials).
double binomial_se(double p, std::size_t trials);

// ---- experiments ------------------------------------------------------------------

enum class Experiment { Threshold, QQ, Histogram, Power };

std::string experiment_name(Experiment e);
Experiment parse_experiment(const std::string& name);

struct ExperimentConfig {
  Experiment experiment = Experiment::Threshold;
  std::uint64_t seed = 1;
  std::size_t trials = 2000;
  std::size_t permutations = 999;
  double alpha = 0.05;
  unsigned workers = 1;
  std::string output;

  // threshold: "two-sample" or "independence"; power: multinomial-two-sample,
  // multinomial-independence, mmd, hsic
  std::string design = "two-sample";
  std::size_t n1 = 50, n2 = 50;
  std::size_t d = 50;
  std::size_t d1 = 20, d2 = 20;
  std::vector<double> gammas{0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6};
  std::vector<double> c_grid{0.5, 1.0, 2.0, 4.0, 8.0};

  // qq and histogram
  std::vector<std::size_t> d_values{5, 100, 1000};
  std::vector<std::string> scenarios{"null", "alternative"};
  std::size_t null_replicates = 2000;

  // power
  std::vector<double> multipliers{0.0, 0.5, 1.0, 2.0, 3.0, 4.0};
  double smoothness = 1.0;

  /// Full-size defaults for the given experiment.
  static ExperimentConfig defaults(Experiment e);
  /// Defaults for json["experiment"] overlaid with the remaining keys.
  /// Unknown keys and invalid values are std::invalid_argument.
  static ExperimentConfig from_json(const nlohmann::json& j);

  void validate() const;
};

struct ThresholdRow {
  std::string method;  // "permutation" or "threshold"
  double c = 0.0;      // NaN on permutation rows
  double gamma = 0.0;
  double type1 = 0.0;
  double se = 0.0;
};

struct QQRow {
  std::string scenario;
  std::size_t d = 0;
  std::vector<double> q, permutation, null;
  double ks = 0.0;
};

struct HistogramRow {
  std::size_t d = 0;
  std::vector<double> values;
  double mean = 0.0, se = 0.0, skewness = 0.0;
};

struct PowerRow {
  std::string test;
  double multiplier = 0.0;
  double delta = 0.0;
  double distance = 0.0;  // L2 distance between the compared laws
  double power = 0.0;
  double se = 0.0;
};

std::vector<ThresholdRow> experiment_threshold_sensitivity(const ExperimentConfig& cfg);
std::vector<QQRow> experiment_qq(const ExperimentConfig& cfg);
std::vector<HistogramRow> experiment_null_histogram(const ExperimentConfig& cfg);
std::vector<PowerRow> experiment_power(const ExperimentConfig& cfg);

void write_csv(std::ostream& out, const std::vector<ThresholdRow>& rows);
void write_csv(std::ostream& out, const std::vector<QQRow>& rows);
void write_csv(std::ostream& out, const std::vector<HistogramRow>& rows);
void write_csv(std::ostream& out, const std::vector<PowerRow>& rows);

/// Runs cfg.experiment and writes its versioned CSV to `out`.
void run_experiment(const ExperimentConfig& cfg, std::ostream& out);

// ---- helpers shared with the experiments -------------------------------------------

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
double ks_distance(std::vector<double> a, std::vector<double> b);
/// Linear-interpolation sample quantile of sorted data.
double sample_quantile(const std::vector<double>& sorted, double q);
double sample_skewness(const std::vector<double>& x);

/// delta placing the perturbed family at `multiplier` times the rate scale
/// of the named power design; std::domain_error when it exceeds the family's
/// admissible range.
double rate_delta(const ExperimentConfig& cfg, double multiplier);

}  // namespace permtest
