#include "permtest/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "permtest/parallel.hpp"

namespace permtest {

namespace {

constexpr std::uint64_t kExactBlock = 2048;

double evaluate(const PermutationStatistic& stat, std::span<const std::size_t> perm,
                std::size_t index) {
  try {
    return stat.fn(perm);
  } catch (const StatisticError&) {
    throw;
  } catch (const std::exception& e) {
    throw StatisticError(index, e.what());
  }
}

void snap_ties(std::vector<double>& values, double observed) {
  double scale = std::abs(observed);
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double tol = kTieTolerance * scale;
  for (double& v : values) {
    if (std::abs(v - observed) <= tol) v = observed;
  }
}

}  // namespace

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

void validate_plan(const PermutationPlan& plan, std::size_t n) {
  if (n == 0) throw std::domain_error("permutation plan: statistic has no units");
  if (plan.mode == PlanMode::MonteCarlo) {
    if (plan.replicates < 1) throw std::invalid_argument("permutation plan: B must be >= 1");
    return;
  }
  const std::uint64_t count = factorial(n);
  if (count == 0 || count > plan.enumeration_limit) {
    throw std::length_error("permutation plan: exact mode needs " + std::to_string(n) +
                            "! <= enumeration limit " + std::to_string(plan.enumeration_limit));
  }
}

PermutationDistribution permutation_distribution(const PermutationStatistic& stat,
                                                 const PermutationPlan& plan) {
  validate_plan(plan, stat.n);
  const std::size_t n = stat.n;

  PermutationDistribution dist;
  dist.plan = plan;
  {
    std::vector<std::size_t> id(n);
    std::iota(id.begin(), id.end(), std::size_t{0});
    dist.observed = evaluate(stat, id, 0);
  }

  if (plan.mode == PlanMode::Exact) {
    const std::uint64_t total = factorial(n);
    dist.replicates.resize(total);
    const std::size_t blocks = (total + kExactBlock - 1) / kExactBlock;
    parallel_for(blocks, plan.workers, [&](std::size_t b) {
      const std::uint64_t first = b * kExactBlock;
      const std::uint64_t last = std::min<std::uint64_t>(total, first + kExactBlock);
      auto perm = permutation_from_rank(n, first);
      for (std::uint64_t r = first; r < last; ++r) {
        dist.replicates[r] = evaluate(stat, perm, r);
        std::next_permutation(perm.begin(), perm.end());
      }
    });
  } else {
    const std::size_t B = plan.replicates;
    dist.replicates.resize(B + (plan.include_identity ? 1 : 0));
    parallel_for(B, plan.workers, [&](std::size_t i) {
      thread_local std::vector<std::size_t> perm;
      perm.resize(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng rng = Rng::stream(plan.seed, i);
      shuffle_in_place(perm, rng);
      dist.replicates[i] = evaluate(stat, perm, i);
    });
    if (plan.include_identity) {
      dist.replicates[B] = dist.observed;
      dist.identity_appended = true;
    }
  }

  snap_ties(dist.replicates, dist.observed);
  std::sort(dist.replicates.begin(), dist.replicates.end());
  return dist;
}

double critical_value(const PermutationDistribution& dist, double alpha) {
  check_alpha(alpha);
  const std::size_t M = dist.replicates.size();
  if (M == 0) throw std::domain_error("critical_value: empty replicate set");
  // smallest k (1-based) with k/M >= 1 - alpha
  const double target = (1.0 - alpha) * static_cast<double>(M);
  auto k = static_cast<std::size_t>(std::ceil(target - 1e-9 * static_cast<double>(M)));
  k = std::clamp<std::size_t>(k, 1, M);
  return dist.replicates[k - 1];
}

double p_value(const PermutationDistribution& dist) {
  const std::size_t M = dist.replicates.size();
  if (M == 0) throw std::domain_error("p_value: empty replicate set");
  const auto first_ge =
      std::lower_bound(dist.replicates.begin(), dist.replicates.end(), dist.observed);
  std::size_t count = static_cast<std::size_t>(dist.replicates.end() - first_ge);
  if (dist.plan.mode == PlanMode::Exact) {
    return static_cast<double>(count) / static_cast<double>(M);
  }
  std::size_t B = M;
  if (dist.identity_appended) {
    B = M - 1;
    count -= 1;
  }
  return static_cast<double>(1 + count) / static_cast<double>(B + 1);
}

TestOutcome make_outcome(const PermutationDistribution& dist, double alpha) {
  TestOutcome out;
  out.statistic = dist.observed;
  out.critical_value = critical_value(dist, alpha);
  out.p_value = p_value(dist);
  out.reject = out.statistic > out.critical_value;
  out.alpha = alpha;
  out.replicate_count = dist.replicates.size();
  out.plan = dist.plan;
  return out;
}

TestOutcome run_test(const PermutationStatistic& stat, const PermutationPlan& plan,
                     double alpha) {
  check_alpha(alpha);
  return make_outcome(permutation_distribution(stat, plan), alpha);
}

}  // namespace permtest
