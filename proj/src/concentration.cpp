#include "permtest/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "permtest/io.hpp"
#include "permtest/parallel.hpp"
#include "permtest/permutation.hpp"
#include "permtest/summation.hpp"

namespace permtest {

namespace {

double off_diagonal_power_sum(const GramMatrix& g, int power) {
  CompensatedSum s;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (i == j) continue;
      const double v = g(i, j);
      s += power == 2 ? v * v : v * v * v * v;
    }
  return s.value();
}

double prefactor(std::size_t n) {
  const double m = static_cast<double>(n);
  return 1.0 / (m * m * (m - 1) * (m - 1));
}

void check_exact_size(std::size_t n) {
  if (n > 8) throw std::length_error("exact Sigma: n exceeds the oracle limit of 8");
}

double sum_squares(std::span<const double> x) {
  CompensatedSum s;
  for (double v : x) s += v * v;
  return s.value();
}

double range_of(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo;
}

void check_linear_inputs(double t, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("linear bound: length mismatch");
  if (a.size() < 2) throw std::domain_error("linear bound: need n >= 2");
  if (!(t > 0.0)) throw std::domain_error("linear bound: t must be positive");
}

}  // namespace

double sigma_two_sample_upper(const GramMatrix& gram, std::size_t n1) {
  if (n1 < 2) throw std::domain_error("sigma_two_sample_upper: need n1 >= 2");
  return std::sqrt(prefactor(n1) * off_diagonal_power_sum(gram, 2));
}

std::pair<double, double> sigma_indep_uppers(const GramMatrix& gram_y, const GramMatrix& gram_z) {
  const std::size_t n = gram_y.size();
  if (gram_z.size() != n) throw std::invalid_argument("sigma_indep_uppers: Gram sizes differ");
  if (n < 2) throw std::domain_error("sigma_indep_uppers: need n >= 2");
  double sup_z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) sup_z = std::max(sup_z, gram_z(i, j) * gram_z(i, j));
  const double pre = prefactor(n);
  const double a = pre * sup_z * off_diagonal_power_sum(gram_y, 2);
  const double b = pre * std::sqrt(off_diagonal_power_sum(gram_y, 4)) *
                   std::sqrt(off_diagonal_power_sum(gram_z, 4));
  return {std::sqrt(a), std::sqrt(b)};
}

double sigma_indep_exact(const GramMatrix& gram_y, const GramMatrix& gram_z) {
  const std::size_t n = gram_y.size();
  if (gram_z.size() != n) throw std::invalid_argument("sigma_indep_exact: Gram sizes differ");
  if (n < 2) throw std::domain_error("sigma_indep_exact: need n >= 2");
  check_exact_size(n);
  double best = 0.0;
  for (const auto& p : PermutationEnumeration(n)) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double gy = gram_y(i, j), gz = gram_z(p[i], p[j]);
        s += gy * gy * gz * gz;
      }
    best = std::max(best, s);
  }
  return std::sqrt(prefactor(n) * best);
}

double sigma_two_sample_exact(const GramMatrix& gram, std::size_t n1) {
  const std::size_t n = gram.size();
  if (n1 < 2 || n1 > n) throw std::domain_error("sigma_two_sample_exact: need 2 <= n1 <= n");
  check_exact_size(n);
  double best = 0.0;
  for (const auto& p : PermutationEnumeration(n)) {
    double s = 0.0;
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n1; ++j)
        if (i != j) s += gram(p[i], p[j]) * gram(p[i], p[j]);
    best = std::max(best, s);
  }
  return std::sqrt(prefactor(n1) * best);
}

std::pair<double, double> lambda_m(const GramMatrix& gram_y, const GramMatrix& gram_z) {
  const std::size_t n = gram_y.size();
  if (gram_z.size() != n) throw std::invalid_argument("lambda_m: Gram sizes differ");
  if (n == 0) return {0.0, 0.0};
  CompensatedSum sy, sz;
  double my = 0.0, mz = 0.0;
  for (double v : gram_y.values()) {
    sy += v * v;
    my = std::max(my, std::abs(v));
  }
  for (double v : gram_z.values()) {
    sz += v * v;
    mz = std::max(mz, std::abs(v));
  }
  const double n4 = std::pow(static_cast<double>(n), 4);
  return {std::sqrt(sy.value() * sz.value() / n4), my * mz};
}

ConcStats conc_stats(const GramMatrix& pooled_gram, std::size_t n1, const GramMatrix& gram_y,
                     const GramMatrix& gram_z) {
  ConcStats c;
  c.sigma_two_sample = sigma_two_sample_upper(pooled_gram, n1);
  c.sigma_indep_bounds = sigma_indep_uppers(gram_y, gram_z);
  std::tie(c.lambda_n, c.m_n) = lambda_m(gram_y, gram_z);
  return c;
}

double hoeffding_linear_bound(double t, std::span<const double> a, std::span<const double> b) {
  check_linear_inputs(t, a, b);
  const double n = static_cast<double>(a.size());
  const double num = n * n * t * t;
  const double d1 = range_of(a) * range_of(a) * sum_squares(b);
  const double d2 = range_of(b) * range_of(b) * sum_squares(a);
  if (d1 == 0.0 && d2 == 0.0) return 0.0;
  const double e1 = d1 == 0.0 ? std::numeric_limits<double>::infinity() : num / d1;
  const double e2 = d2 == 0.0 ? std::numeric_limits<double>::infinity() : num / d2;
  return std::exp(-std::max(e1, e2));
}

double bernstein_linear_bound(double t, std::span<const double> a, std::span<const double> b) {
  check_linear_inputs(t, a, b);
  const double n = static_cast<double>(a.size());
  double amax = 0.0, bmax = 0.0;
  for (double v : a) amax = std::max(amax, std::abs(v));
  for (double v : b) bmax = std::max(bmax, std::abs(v));
  const double denom = 2.0 / (n * n) * sum_squares(a) * sum_squares(b) + 2.0 / 3.0 * t * amax * bmax;
  if (denom == 0.0) return 0.0;
  return std::exp(-n * t * t / denom);
}

std::vector<double> centered(std::span<const double> x) {
  CompensatedSum s;
  for (double v : x) s += v;
  const double mean = x.empty() ? 0.0 : s.value() / static_cast<double>(x.size());
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v -= mean;
  return out;
}

double dependent_rademacher_chaos(std::span<const double> a, std::size_t n, Rng& rng) {
  if (n % 2 != 0 || n == 0) throw std::domain_error("rademacher chaos: n must be even");
  if (a.size() != n * n) throw std::invalid_argument("rademacher chaos: matrix must be n x n");
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) total += a[i * n + j];
  const double abar = total.value() / (static_cast<double>(n) * static_cast<double>(n - 1));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_in_place(order, rng);
  std::vector<double> zeta(n);
  for (std::size_t i = 0; i < n; ++i) zeta[order[i]] = i < n / 2 ? 1.0 : -1.0;

  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += zeta[i] * zeta[j] * (a[i * n + j] - abar);
  return s.value();
}

double two_sample_tail_shape(double t, double sigma, double c) {
  if (sigma <= 0.0) return t > 0.0 ? 0.0 : 1.0;
  const double u = t / sigma;
  return std::exp(-c * std::min(u * u, u));
}

double independence_tail_shape(double t, std::size_t n, double lambda, double m, double c1,
                               double c2) {
  if (lambda <= 0.0 || m <= 0.0) return t > 0.0 ? 0.0 : c1;
  const double nn = static_cast<double>(n);
  const double e = std::min(nn * t / lambda, nn * std::cbrt(t * t) / std::pow(m, 1.5));
  return c1 * std::exp(-c2 * e);
}

void TailReport::write_csv(std::ostream& out) const {
  out << "t,empirical,se,bound,violation\n";
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    out << format_double(t_grid[i]) << ',' << format_double(empirical[i]) << ','
        << format_double(se[i]) << ',' << format_double(bound[i]) << ','
        << (violation[i] ? 1 : 0) << '\n';
  }
}

TailReport tail_report_from_samples(std::span<const double> samples, const TailBound& bound,
                                    std::span<const double> t_grid) {
  TailReport r;
  r.replicates = samples.size();
  r.t_grid.assign(t_grid.begin(), t_grid.end());
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double R = static_cast<double>(sorted.size());
  for (double t : t_grid) {
    const auto ge = static_cast<double>(sorted.end() -
                                        std::lower_bound(sorted.begin(), sorted.end(), t));
    const double p = R > 0 ? ge / R : 0.0;
    const double se = R > 0 ? std::sqrt(p * (1.0 - p) / R) : 0.0;
    const double b = bound(t);
    const bool bad = p - 3.0 * se > b;
    r.empirical.push_back(p);
    r.se.push_back(se);
    r.bound.push_back(b);
    r.violation.push_back(bad);
    r.violations += bad ? 1 : 0;
  }
  return r;
}

TailReport empirical_tail_check(const TailSampler& sampler, const TailBound& bound,
                                std::span<const double> t_grid, std::size_t replicates,
                                std::uint64_t seed, unsigned workers) {
  std::vector<double> samples(replicates);
  parallel_for(replicates, workers, [&](std::size_t i) {
    Rng rng = Rng::stream(seed, i);
    samples[i] = sampler(rng);
  });
  return tail_report_from_samples(samples, bound, t_grid);
}

double largest_shape_constant(std::span<const double> t_grid, std::span<const double> empirical,
                              const std::function<double(double)>& exponent) {
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (empirical[i] <= 0.0) continue;
    const double e = exponent(t_grid[i]);
    if (e <= 0.0) continue;
    c = std::min(c, -std::log(empirical[i]) / e);
  }
  return c;
}

}  // namespace permtest
