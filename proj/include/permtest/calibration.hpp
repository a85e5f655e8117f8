#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "permtest/permutation.hpp"

namespace permtest {

enum class PlanMode { Exact, MonteCarlo };

struct PermutationPlan {
  PlanMode mode = PlanMode::MonteCarlo;
  std::size_t replicates = 999;  // B, Monte Carlo only
  std::uint64_t seed = 0;
  bool include_identity = true;
  std::uint64_t enumeration_limit = kDefaultEnumerationLimit;
  unsigned workers = 1;  // 0 = hardware concurrency

  static PermutationPlan exact(std::uint64_t limit = kDefaultEnumerationLimit) {
    PermutationPlan p;
    p.mode = PlanMode::Exact;
    p.enumeration_limit = limit;
    return p;
  }
  static PermutationPlan monte_carlo(std::size_t B, std::uint64_t seed, unsigned workers = 1) {
    PermutationPlan p;
    p.replicates = B;
    p.seed = seed;
    p.workers = workers;
    return p;
  }
};

/// Throws std::invalid_argument / std::length_error if the plan cannot be run
/// on n relabeled units.
void validate_plan(const PermutationPlan& plan, std::size_t n);

/// A statistic evaluated on a relabeling of n units. The callable receives the
/// relabeling (position i holds original unit perm[i]) and must be pure.
struct PermutationStatistic {
  std::size_t n = 0;
  std::function<double(std::span<const std::size_t>)> fn;
};

/// Raised when the statistic fails on a replicate; carries its index.
/// Exact mode indexes by lexicographic rank, Monte Carlo by replicate number.
class StatisticError : public std::runtime_error {
 public:
  StatisticError(std::size_t index, const std::string& what)
      : std::runtime_error("statistic failed on permutation " + std::to_string(index) + ": " +
                           what),
        index_(index) {}
  std::size_t permutation_index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

struct PermutationDistribution {
  double observed = 0.0;
  std::vector<double> replicates;  // sorted non-decreasing
  PermutationPlan plan;
  bool identity_appended = false;

  std::size_t size() const noexcept { return replicates.size(); }
};

/// Replicates within this relative distance of the observed value are stored
/// as exact ties with it, so that rounding differences between algebraically
/// equal relabelings cannot flip a decision.
inline constexpr double kTieTolerance = 1e-10;

PermutationDistribution permutation_distribution(const PermutationStatistic& stat,
                                                 const PermutationPlan& plan);

/// Smallest replicate t with #{replicates <= t}/M >= 1 - alpha.
double critical_value(const PermutationDistribution& dist, double alpha);

/// Monte Carlo: (1 + #{non-identity replicates >= observed}) / (B + 1).
/// Exact: #{replicates >= observed} / n!.
double p_value(const PermutationDistribution& dist);

struct TestOutcome {
  double statistic = 0.0;
  double critical_value = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  std::size_t replicate_count = 0;
  PermutationPlan plan;
};

TestOutcome make_outcome(const PermutationDistribution& dist, double alpha);

TestOutcome run_test(const PermutationStatistic& stat, const PermutationPlan& plan, double alpha);

void check_alpha(double alpha);

}  // namespace permtest
