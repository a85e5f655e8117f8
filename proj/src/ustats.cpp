#include "permtest/ustats.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "permtest/summation.hpp"

namespace permtest {

namespace {

void check_labeling(std::span<const std::size_t> labeling, std::size_t n, const char* who) {
  if (!labeling.empty() && labeling.size() != n) {
    throw std::invalid_argument(std::string(who) + ": relabeling length does not match data");
  }
}

inline std::size_t at(std::span<const std::size_t> labeling, std::size_t i) noexcept {
  return labeling.empty() ? i : labeling[i];
}

void check_two_sample_sizes(std::size_t n1, std::size_t n2) {
  if (n1 < 2 || n2 < 2) throw std::domain_error("two-sample U: need n1 >= 2 and n2 >= 2");
}

double combine_two_sample(long double syy, long double szz, long double syz, std::size_t n1,
                          std::size_t n2) {
  const long double a = static_cast<long double>(n1);
  const long double b = static_cast<long double>(n2);
  // syy, szz, syz are sums over unordered pairs
  return static_cast<double>(2 * syy / (a * (a - 1)) + 2 * szz / (b * (b - 1)) -
                             2 * syz / (a * b));
}

/// Numerator of n_(4) U from the permutation-dependent sums T2 = sum_{i!=j}
/// A_ij B_ij and R = sum_i ra_i rb_i plus the totals SA, SB.
template <class T>
T independence_numerator(T t2, T r, T sa, T sb, T n) {
  const T t1 = r - t2;
  const T t0 = sa * sb - 4 * t1 - 2 * t2;
  return 4 * (n - 2) * (n - 3) * t2 + 4 * t0 - 8 * (n - 3) * t1;
}

long double falling4(std::size_t n) {
  const auto m = static_cast<long double>(n);
  return m * (m - 1) * (m - 2) * (m - 3);
}

std::vector<std::uint32_t> compress(std::span<const std::uint32_t> cats, std::size_t& k) {
  std::uint32_t maxv = 0;
  for (auto c : cats) maxv = std::max(maxv, c);
  std::vector<std::uint32_t> map(static_cast<std::size_t>(maxv) + 1,
                                 std::numeric_limits<std::uint32_t>::max());
  for (auto c : cats) map[c] = 0;
  std::uint32_t next = 0;
  for (auto& m : map) {
    if (m == 0) m = next++;
  }
  k = next;
  std::vector<std::uint32_t> out(cats.size());
  for (std::size_t i = 0; i < cats.size(); ++i) out[i] = map[cats[i]];
  return out;
}

}  // namespace

PointSet TwoSamplePooled::pooled() const {
  PointSet p = y;
  p.append(z);
  return p;
}

PoissonCounts PoissonCounts::from_individuals(std::size_t d, std::vector<std::int64_t> rows_y,
                                              std::vector<std::int64_t> rows_z) {
  if (d == 0) throw std::domain_error("Poisson counts: d must be positive");
  if (rows_y.size() % d != 0 || rows_z.size() % d != 0) {
    throw std::invalid_argument("Poisson counts: ragged per-individual rows");
  }
  PoissonCounts c;
  c.d = d;
  c.v.assign(d, 0);
  c.w.assign(d, 0);
  for (std::size_t i = 0; i < rows_y.size(); ++i) {
    if (rows_y[i] < 0) throw std::domain_error("Poisson counts: negative count");
    c.v[i % d] += rows_y[i];
  }
  for (std::size_t i = 0; i < rows_z.size(); ++i) {
    if (rows_z[i] < 0) throw std::domain_error("Poisson counts: negative count");
    c.w[i % d] += rows_z[i];
  }
  c.per_individual_y = std::move(rows_y);
  c.per_individual_z = std::move(rows_z);
  return c;
}

// ---- two-sample -------------------------------------------------------------

double two_sample_u(const GramMatrix& gram, std::size_t n1, std::size_t n2,
                    std::span<const std::size_t> labeling) {
  check_two_sample_sizes(n1, n2);
  if (gram.size() != n1 + n2) throw std::invalid_argument("two_sample_u: Gram size mismatch");
  if (!gram.diagonal_zeroed()) throw std::invalid_argument("two_sample_u: diagonal not zeroed");
  check_labeling(labeling, n1 + n2, "two_sample_u");
  const std::size_t n = n1 + n2;
  CompensatedSum syy, szz, syz;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = gram.row(at(labeling, i));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = row[at(labeling, j)];
      if (j < n1) {
        syy += g;
      } else if (i >= n1) {
        szz += g;
      } else {
        syz += g;
      }
    }
  }
  return combine_two_sample(syy.value(), szz.value(), syz.value(), n1, n2);
}

double two_sample_u_naive(const TwoSamplePooled& data, const KernelSpec& kernel,
                          std::span<const std::size_t> labeling) {
  const std::size_t n1 = data.n1(), n2 = data.n2();
  check_two_sample_sizes(n1, n2);
  if (n1 + n2 > kTwoSampleOracleLimit) {
    throw std::length_error("two_sample_u_naive: n1 + n2 exceeds the oracle limit of 30");
  }
  check_labeling(labeling, n1 + n2, "two_sample_u_naive");
  const PointSet pooled = data.pooled();
  auto y = [&](std::size_t i) { return pooled[at(labeling, i)]; };
  auto z = [&](std::size_t j) { return pooled[at(labeling, n1 + j)]; };
  CompensatedSum total;
  for (std::size_t i1 = 0; i1 < n1; ++i1)
    for (std::size_t i2 = 0; i2 < n1; ++i2) {
      if (i1 == i2) continue;
      for (std::size_t j1 = 0; j1 < n2; ++j1)
        for (std::size_t j2 = 0; j2 < n2; ++j2) {
          if (j1 == j2) continue;
          total += eval(kernel, y(i1), y(i2)) + eval(kernel, z(j1), z(j2)) -
                   eval(kernel, y(i1), z(j2)) - eval(kernel, y(i2), z(j1));
        }
    }
  const double denom = static_cast<double>(n1) * static_cast<double>(n1 - 1) *
                       static_cast<double>(n2) * static_cast<double>(n2 - 1);
  return total.value() / denom;
}

double multinomial_two_sample_u(std::span<const std::int64_t> counts_y,
                                std::span<const std::int64_t> counts_z,
                                std::span<const double> weights) {
  if (counts_y.size() != counts_z.size()) {
    throw std::invalid_argument("multinomial_two_sample_u: count vectors differ in length");
  }
  if (!weights.empty() && weights.size() != counts_y.size()) {
    throw std::invalid_argument("multinomial_two_sample_u: weight length mismatch");
  }
  std::int64_t n1 = 0, n2 = 0;
  for (std::size_t k = 0; k < counts_y.size(); ++k) {
    if (counts_y[k] < 0 || counts_z[k] < 0) {
      throw std::domain_error("multinomial_two_sample_u: negative count");
    }
    n1 += counts_y[k];
    n2 += counts_z[k];
  }
  check_two_sample_sizes(static_cast<std::size_t>(n1), static_cast<std::size_t>(n2));
  const long double d1 = static_cast<long double>(n1) * (n1 - 1);
  const long double d2 = static_cast<long double>(n2) * (n2 - 1);
  const long double d3 = static_cast<long double>(n1) * n2;
  if (weights.empty()) {
    std::int64_t p1 = 0, p2 = 0, p3 = 0;
    for (std::size_t k = 0; k < counts_y.size(); ++k) {
      const std::int64_t c = counts_y[k], e = counts_z[k];
      p1 += c * (c - 1);
      p2 += e * (e - 1);
      p3 += c * e;
    }
    return static_cast<double>(p1 / d1 + p2 / d2 - 2 * p3 / d3);
  }
  long double u = 0;
  for (std::size_t k = 0; k < counts_y.size(); ++k) {
    if (!(weights[k] > 0.0)) throw std::domain_error("multinomial_two_sample_u: weight <= 0");
    const long double c = counts_y[k], e = counts_z[k];
    u += (c * (c - 1) / d1 + e * (e - 1) / d2 - 2 * c * e / d3) / weights[k];
  }
  return static_cast<double>(u);
}

TwoSampleGramEvaluator::TwoSampleGramEvaluator(GramMatrix gram, std::size_t n1, std::size_t n2)
    : gram_(std::move(gram)), n1_(n1), n2_(n2) {
  check_two_sample_sizes(n1, n2);
  if (gram_.size() != n1 + n2) throw std::invalid_argument("two-sample evaluator: size mismatch");
  if (!gram_.diagonal_zeroed()) throw std::invalid_argument("two-sample evaluator: diagonal");
  const std::size_t n = n1 + n2;
  row_sums_.resize(n);
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum r;
    for (double g : gram_.row(i)) r += g;
    row_sums_[i] = r.value();
    total += r.value();
  }
  total_ = static_cast<long double>(total.value()) / 2;
}

double TwoSampleGramEvaluator::operator()(std::span<const std::size_t> labeling) const {
  const std::size_t n = n1_ + n2_;
  check_labeling(labeling, n, "two-sample evaluator");
  const bool y_side = n1_ <= n2_;
  const std::size_t begin = y_side ? 0 : n1_;
  const std::size_t end = y_side ? n1_ : n;
  long double inner = 0, rows = 0;
  for (std::size_t a = begin; a < end; ++a) {
    const std::size_t u = at(labeling, a);
    const double* row = gram_.row(u).data();
    rows += row_sums_[u];
    long double s = 0;
    for (std::size_t b = a + 1; b < end; ++b) s += row[at(labeling, b)];
    inner += s;
  }
  const long double cross = rows - 2 * inner;
  const long double other = total_ - inner - cross;
  return y_side ? combine_two_sample(inner, other, cross, n1_, n2_)
                : combine_two_sample(other, inner, cross, n1_, n2_);
}

CategoricalTwoSampleEvaluator::CategoricalTwoSampleEvaluator(std::vector<std::uint32_t> categories,
                                                             std::size_t d, std::size_t n1,
                                                             std::vector<double> inverse_weights)
    : n1_(n1) {
  if (categories.size() < n1) throw std::invalid_argument("categorical evaluator: n1 > n");
  n2_ = categories.size() - n1;
  check_two_sample_sizes(n1_, n2_);
  for (auto c : categories) {
    if (c >= d) throw std::domain_error("categorical evaluator: category out of range");
  }
  if (!inverse_weights.empty() && inverse_weights.size() != d) {
    throw std::invalid_argument("categorical evaluator: weight length mismatch");
  }
  std::size_t k = 0;
  cat_ = compress(categories, k);
  total_.assign(k, 0);
  for (auto c : cat_) ++total_[c];
  for (auto t : total_) sum_t2_ += t * t;
  if (!inverse_weights.empty()) {
    inv_.assign(k, 0.0);
    for (std::size_t i = 0; i < categories.size(); ++i) inv_[cat_[i]] = inverse_weights[categories[i]];
    const long double d2 = static_cast<long double>(n2_) * (n2_ - 1);
    long double c = 0;
    for (std::size_t j = 0; j < k; ++j) c += inv_[j] * total_[j] * (total_[j] - 1) / d2;
    const_weighted_ = static_cast<double>(c);
  }
}

double CategoricalTwoSampleEvaluator::operator()(std::span<const std::size_t> labeling) const {
  check_labeling(labeling, cat_.size(), "categorical evaluator");
  thread_local std::vector<std::int64_t> counts;
  thread_local std::vector<std::uint32_t> touched;
  if (counts.size() < total_.size()) counts.resize(total_.size(), 0);
  touched.clear();
  for (std::size_t i = 0; i < n1_; ++i) {
    const auto c = cat_[at(labeling, i)];
    if (counts[c]++ == 0) touched.push_back(c);
  }
  const long double d1 = static_cast<long double>(n1_) * (n1_ - 1);
  const long double d2 = static_cast<long double>(n2_) * (n2_ - 1);
  const long double d3 = static_cast<long double>(n1_) * n2_;
  double u;
  if (inv_.empty()) {
    std::int64_t q = 0, l2 = 0;
    for (auto c : touched) {
      q += counts[c] * counts[c];
      l2 += counts[c] * total_[c];
    }
    const auto n1 = static_cast<std::int64_t>(n1_), n2 = static_cast<std::int64_t>(n2_);
    const std::int64_t p1 = q - n1;
    const std::int64_t p3 = l2 - q;
    const std::int64_t p2 = sum_t2_ - 2 * l2 + q - n2;
    u = static_cast<double>(p1 / d1 + p2 / d2 - 2 * p3 / d3);
  } else {
    std::sort(touched.begin(), touched.end());
    long double s = const_weighted_;
    for (auto c : touched) {
      const long double y = counts[c], t = total_[c], z = t - y;
      s += inv_[c] * (y * (y - 1) / d1 + z * (z - 1) / d2 - 2 * y * z / d3 - t * (t - 1) / d2);
    }
    u = static_cast<double>(s);
  }
  for (auto c : touched) counts[c] = 0;
  return u;
}

// ---- independence -------------------------------------------------------------

double independence_u(const GramMatrix& gram_y, const GramMatrix& gram_z,
                      std::span<const std::size_t> z_relabeling) {
  const std::size_t n = gram_y.size();
  if (gram_z.size() != n) throw std::invalid_argument("independence_u: Gram sizes differ");
  if (n < 4) throw std::domain_error("independence_u: need n >= 4");
  if (!gram_y.diagonal_zeroed() || !gram_z.diagonal_zeroed()) {
    throw std::invalid_argument("independence_u: diagonals must be zeroed");
  }
  check_labeling(z_relabeling, n, "independence_u");
  CompensatedSum t2, r, sa, sb;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = gram_y.row(i);
    const auto b = gram_z.row(at(z_relabeling, i));
    CompensatedSum ra, rb;
    for (std::size_t j = 0; j < n; ++j) {
      ra += a[j];
      rb += b[at(z_relabeling, j)];
      t2 += a[j] * b[at(z_relabeling, j)];
    }
    sa += ra.value();
    sb += rb.value();
    r += ra.value() * rb.value();
  }
  const long double num = independence_numerator<long double>(
      t2.value(), r.value(), sa.value(), sb.value(), static_cast<long double>(n));
  return static_cast<double>(num / falling4(n));
}

double independence_u_naive(const PairedSample& data, const KernelSpec& kernel_y,
                            const KernelSpec& kernel_z,
                            std::span<const std::size_t> z_relabeling) {
  const std::size_t n = data.size();
  if (data.z.size() != n) throw std::invalid_argument("independence_u_naive: unpaired sample");
  if (n < 4) throw std::domain_error("independence_u_naive: need n >= 4");
  if (n > kIndependenceOracleLimit) {
    throw std::length_error("independence_u_naive: n exceeds the oracle limit of 10");
  }
  check_labeling(z_relabeling, n, "independence_u_naive");
  auto gy = [&](std::size_t i, std::size_t j) { return eval(kernel_y, data.y[i], data.y[j]); };
  auto gz = [&](std::size_t i, std::size_t j) {
    return eval(kernel_z, data.z[at(z_relabeling, i)], data.z[at(z_relabeling, j)]);
  };
  CompensatedSum total;
  for (std::size_t i1 = 0; i1 < n; ++i1)
    for (std::size_t i2 = 0; i2 < n; ++i2) {
      if (i2 == i1) continue;
      for (std::size_t i3 = 0; i3 < n; ++i3) {
        if (i3 == i1 || i3 == i2) continue;
        for (std::size_t i4 = 0; i4 < n; ++i4) {
          if (i4 == i1 || i4 == i2 || i4 == i3) continue;
          const double hy = gy(i1, i2) + gy(i3, i4) - gy(i1, i3) - gy(i2, i4);
          const double hz = gz(i1, i2) + gz(i3, i4) - gz(i1, i3) - gz(i2, i4);
          total += hy * hz;
        }
      }
    }
  return static_cast<double>(total.value() / falling4(n));
}

IndependenceGramEvaluator::IndependenceGramEvaluator(GramMatrix gram_y, GramMatrix gram_z)
    : gy_(std::move(gram_y)), gz_(std::move(gram_z)) {
  const std::size_t n = gy_.size();
  if (gz_.size() != n) throw std::invalid_argument("independence evaluator: Gram sizes differ");
  if (n < 4) throw std::domain_error("independence evaluator: need n >= 4");
  if (!gy_.diagonal_zeroed() || !gz_.diagonal_zeroed()) {
    throw std::invalid_argument("independence evaluator: diagonals must be zeroed");
  }
  ry_.resize(n);
  rz_.resize(n);
  CompensatedSum sy, sz;
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum a, b;
    for (double g : gy_.row(i)) a += g;
    for (double g : gz_.row(i)) b += g;
    ry_[i] = a.value();
    rz_[i] = b.value();
    sy += a.value();
    sz += b.value();
  }
  sy_ = sy.value();
  sz_ = sz.value();
}

double IndependenceGramEvaluator::operator()(std::span<const std::size_t> z_relabeling) const {
  const std::size_t n = gy_.size();
  check_labeling(z_relabeling, n, "independence evaluator");
  long double t2 = 0, r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pi = at(z_relabeling, i);
    const double* a = gy_.row(i).data();
    const double* b = gz_.row(pi).data();
    double s = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) s += a[j] * b[at(z_relabeling, j)];
    t2 += s;
    r += static_cast<long double>(ry_[i]) * rz_[pi];
  }
  t2 *= 2;
  const long double num =
      independence_numerator<long double>(t2, r, sy_, sz_, static_cast<long double>(n));
  return static_cast<double>(num / falling4(n));
}

CategoricalIndependenceEvaluator::CategoricalIndependenceEvaluator(std::vector<std::uint32_t> y,
                                                                   std::vector<std::uint32_t> z) {
  if (y.size() != z.size()) throw std::invalid_argument("independence evaluator: unpaired");
  if (y.size() < 4) throw std::domain_error("independence evaluator: need n >= 4");
  y_ = compress(y, ky_);
  z_ = compress(z, kz_);
  cy_.assign(ky_, 0);
  cz_.assign(kz_, 0);
  for (auto c : y_) ++cy_[c];
  for (auto c : z_) ++cz_[c];
  for (auto c : cy_) sa_ += c * (c - 1);
  for (auto c : cz_) sb_ += c * (c - 1);
}

double CategoricalIndependenceEvaluator::operator()(
    std::span<const std::size_t> z_relabeling) const {
  const std::size_t n = y_.size();
  check_labeling(z_relabeling, n, "independence evaluator");
  std::int64_t t2 = 0, r = 0;
  constexpr std::size_t kDenseCells = std::size_t{1} << 22;
  if (ky_ * kz_ <= kDenseCells) {
    thread_local std::vector<std::int64_t> cells;
    if (cells.size() < ky_ * kz_) cells.resize(ky_ * kz_, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto zc = z_[at(z_relabeling, i)];
      const std::size_t cell = static_cast<std::size_t>(y_[i]) * kz_ + zc;
      t2 += 2 * cells[cell]++;  // N(N-1) accumulated incrementally
      r += (cy_[y_[i]] - 1) * (cz_[zc] - 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      cells[static_cast<std::size_t>(y_[i]) * kz_ + z_[at(z_relabeling, i)]] = 0;
    }
  } else {
    thread_local std::vector<std::uint64_t> codes;
    codes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto zc = z_[at(z_relabeling, i)];
      codes[i] = static_cast<std::uint64_t>(y_[i]) * kz_ + zc;
      r += (cy_[y_[i]] - 1) * (cz_[zc] - 1);
    }
    std::sort(codes.begin(), codes.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && codes[j] == codes[i]) ++j;
      const auto m = static_cast<std::int64_t>(j - i);
      t2 += m * (m - 1);
      i = j;
    }
  }
  using i128 = __int128;
  const i128 num = independence_numerator<i128>(t2, r, sa_, sb_, static_cast<i128>(n));
  return static_cast<double>(static_cast<long double>(num) / falling4(n));
}

// ---- Poisson chi-square -------------------------------------------------------

namespace {

double chisq_from_delta(std::span<const std::int64_t> delta, std::span<const std::int64_t> total) {
  long double s = 0;
  for (std::size_t k = 0; k < total.size(); ++k) {
    if (total[k] > 0) {
      const long double dk = static_cast<long double>(delta[k]);
      s += (dk * dk - total[k]) / total[k];
    }
  }
  return static_cast<double>(s);
}

void check_poisson(const PoissonCounts& c) {
  if (c.d == 0 || c.v.size() != c.d || c.w.size() != c.d) {
    throw std::invalid_argument("poisson_chisq: count vectors must have length d");
  }
  for (std::size_t k = 0; k < c.d; ++k) {
    if (c.v[k] < 0 || c.w[k] < 0) throw std::domain_error("poisson_chisq: negative count");
  }
  if (!c.has_individuals()) return;
  if (c.per_individual_y.size() % c.d != 0 || c.per_individual_z.size() % c.d != 0) {
    throw std::invalid_argument("poisson_chisq: ragged per-individual rows");
  }
  if (c.individuals_y() != c.individuals_z()) {
    throw std::domain_error("poisson_chisq: groups must have equal numbers of individuals");
  }
  std::vector<std::int64_t> v(c.d, 0), w(c.d, 0);
  for (std::size_t i = 0; i < c.per_individual_y.size(); ++i) v[i % c.d] += c.per_individual_y[i];
  for (std::size_t i = 0; i < c.per_individual_z.size(); ++i) w[i % c.d] += c.per_individual_z[i];
  if (v != c.v || w != c.w) {
    throw std::invalid_argument("poisson_chisq: totals disagree with per-individual counts");
  }
}

}  // namespace

double poisson_chisq(const PoissonCounts& counts, std::span<const std::size_t> relabeling) {
  check_poisson(counts);
  if (relabeling.empty()) {
    std::vector<std::int64_t> delta(counts.d), total(counts.d);
    for (std::size_t k = 0; k < counts.d; ++k) {
      delta[k] = counts.v[k] - counts.w[k];
      total[k] = counts.v[k] + counts.w[k];
    }
    return chisq_from_delta(delta, total);
  }
  if (!counts.has_individuals()) {
    throw std::domain_error("poisson_chisq: relabeling requires per-individual counts");
  }
  return PoissonChisqEvaluator(counts)(relabeling);
}

PoissonChisqEvaluator::PoissonChisqEvaluator(PoissonCounts counts) {
  check_poisson(counts);
  if (!counts.has_individuals()) {
    throw std::domain_error("poisson_chisq: permutation test requires per-individual counts");
  }
  d_ = counts.d;
  n_ = counts.individuals_y();
  rows_ = std::move(counts.per_individual_y);
  rows_.insert(rows_.end(), counts.per_individual_z.begin(), counts.per_individual_z.end());
  total_.resize(d_);
  for (std::size_t k = 0; k < d_; ++k) total_[k] = counts.v[k] + counts.w[k];
}

double PoissonChisqEvaluator::operator()(std::span<const std::size_t> relabeling) const {
  check_labeling(relabeling, 2 * n_, "poisson_chisq");
  thread_local std::vector<std::int64_t> delta;
  delta.assign(d_, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::int64_t* row = rows_.data() + at(relabeling, i) * d_;
    for (std::size_t k = 0; k < d_; ++k) delta[k] += row[k];
  }
  for (std::size_t k = 0; k < d_; ++k) delta[k] = 2 * delta[k] - total_[k];
  return chisq_from_delta(delta, total_);
}

// ---- linear statistic ---------------------------------------------------------

double linear_stat(std::span<const double> y, std::span<const double> z,
                   std::span<const std::size_t> relabeling) {
  const std::size_t n = y.size();
  if (z.size() != n) throw std::invalid_argument("linear_stat: length mismatch");
  if (n < 2) throw std::domain_error("linear_stat: need n >= 2");
  check_labeling(relabeling, n, "linear_stat");
  CompensatedSum sy, sz;
  for (std::size_t i = 0; i < n; ++i) {
    sy += y[i];
    sz += z[i];
  }
  const double my = sy.value() / static_cast<double>(n);
  const double mz = sz.value() / static_cast<double>(n);
  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i) s += (y[i] - my) * (z[at(relabeling, i)] - mz);
  return s.value() / static_cast<double>(n);
}

}  // namespace permtest
