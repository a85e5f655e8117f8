#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "permtest/kernels.hpp"
#include "permtest/rng.hpp"

namespace permtest {

struct ConcStats {
  double sigma_two_sample = 0.0;
  std::pair<double, double> sigma_indep_bounds{0.0, 0.0};
  double lambda_n = 0.0;
  double m_n = 0.0;
};

/// sqrt( sum_{i != j <= n} g^2 / (n1^2 (n1 - 1)^2) ) over the pooled Gram.
double sigma_two_sample_upper(const GramMatrix& gram, std::size_t n1);

/// The two Hoelder bounds on Sigma_n, returned as square roots. The sup-norm
/// of g_Z^2 is the largest observed off-diagonal value.
std::pair<double, double> sigma_indep_uppers(const GramMatrix& gram_y, const GramMatrix& gram_z);

/// Sigma_n by brute-force maximization over all relabelings (n <= 8).
double sigma_indep_exact(const GramMatrix& gram_y, const GramMatrix& gram_z);
/// Sigma_{n1,n2} by brute-force maximization over all relabelings (n <= 8).
double sigma_two_sample_exact(const GramMatrix& gram, std::size_t n1);

/// (Lambda_n, M_n) from full Grams including the diagonal.
std::pair<double, double> lambda_m(const GramMatrix& gram_y, const GramMatrix& gram_z);

ConcStats conc_stats(const GramMatrix& pooled_gram, std::size_t n1, const GramMatrix& gram_y,
                     const GramMatrix& gram_z);

/// exp[-max(n^2 t^2 / (a_range^2 sum b^2), n^2 t^2 / (b_range^2 sum a^2))],
/// range = max - min. Returns 0 when both sides are constant.
double hoeffding_linear_bound(double t, std::span<const double> a, std::span<const double> b);

/// exp{-n t^2 / (2 n^-2 sum a_i^2 sum b_j^2 + (2/3) t max|a_i b_j|)}.
double bernstein_linear_bound(double t, std::span<const double> a, std::span<const double> b);

/// Centers a sequence at its mean.
std::vector<double> centered(std::span<const double> x);

/// One draw of sum_{i != j} z_i z_j (a_ij - abar) with z a uniformly random
/// balanced sign vector; `a` is n x n row-major. Odd n is a domain error.
double dependent_rademacher_chaos(std::span<const double> a, std::size_t n, Rng& rng);

/// exp{-c min(t^2/Sigma^2, t/Sigma)}.
double two_sample_tail_shape(double t, double sigma, double c);
/// c1 exp{-c2 min(n t / Lambda, n t^{2/3} / M^{3/2})}.
double independence_tail_shape(double t, std::size_t n, double lambda, double m, double c1,
                               double c2);

struct TailReport {
  std::vector<double> t_grid;
  std::vector<double> empirical;
  std::vector<double> se;
  std::vector<double> bound;
  std::vector<bool> violation;
  std::size_t violations = 0;
  std::size_t replicates = 0;

  void write_csv(std::ostream& out) const;
};

using TailSampler = std::function<double(Rng&)>;
using TailBound = std::function<double(double)>;

/// Draws `replicates` samples (replicate i from stream (seed, i)), and flags
/// grid points where empirical - 3 se exceeds the bound.
TailReport empirical_tail_check(const TailSampler& sampler, const TailBound& bound,
                                std::span<const double> t_grid, std::size_t replicates,
                                std::uint64_t seed = 0, unsigned workers = 1);

/// Same check against pre-drawn samples.
TailReport tail_report_from_samples(std::span<const double> samples, const TailBound& bound,
                                    std::span<const double> t_grid);

/// Largest c with exp(-c * exponent(t)) >= empirical(t) at every grid point
/// with a positive tail; infinity when no grid point has positive mass.
double largest_shape_constant(std::span<const double> t_grid, std::span<const double> empirical,
                              const std::function<double(double)>& exponent);

}  // namespace permtest
