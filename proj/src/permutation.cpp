#include "permtest/permutation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace permtest {

bool is_bijection(std::span<const std::size_t> indices) {
  std::vector<char> seen(indices.size(), 0);
  for (std::size_t v : indices) {
    if (v >= indices.size() || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

Permutation::Permutation(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  if (!is_bijection(indices_)) {
    throw std::invalid_argument("Permutation: indices are not a bijection on {0..n-1}");
  }
}

Permutation Permutation::identity(std::size_t n) {
  Permutation p;
  p.indices_.resize(n);
  std::iota(p.indices_.begin(), p.indices_.end(), std::size_t{0});
  return p;
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] != i) return false;
  }
  return true;
}

std::uint64_t factorial(std::size_t n) noexcept {
  if (n > 20) return 0;
  std::uint64_t f = 1;
  for (std::size_t k = 2; k <= n; ++k) f *= k;
  return f;
}

void shuffle_in_place(std::span<std::size_t> values, Rng& rng) noexcept {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(values[i - 1], values[j]);
  }
}

Permutation sample_permutation(std::size_t n, Rng& rng) {
  if (n == 0) throw std::domain_error("sample_permutation: n must be at least 1");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle_in_place(idx, rng);
  return Permutation(std::move(idx));
}

std::vector<std::size_t> permutation_from_rank(std::size_t n, std::uint64_t rank) {
  const std::uint64_t total = factorial(n);
  if (total == 0 || rank >= total) {
    throw std::out_of_range("permutation_from_rank: rank out of range");
  }
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t k = n; k >= 1; --k) {
    const std::uint64_t block = factorial(k - 1);
    const auto pick = static_cast<std::size_t>(rank / block);
    rank %= block;
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

PermutationEnumeration::PermutationEnumeration(std::size_t n, std::uint64_t limit)
    : n_(n), count_(factorial(n)) {
  if (n == 0) throw std::domain_error("enumerate_permutations: n must be at least 1");
  if (count_ == 0 || count_ > limit) {
    throw std::length_error("enumerate_permutations: " + std::to_string(n) +
                            "! exceeds the enumeration limit of " + std::to_string(limit));
  }
}

PermutationEnumeration::iterator::iterator(std::size_t n) : current_(n), done_(false) {
  std::iota(current_.begin(), current_.end(), std::size_t{0});
}

PermutationEnumeration::iterator& PermutationEnumeration::iterator::operator++() {
  done_ = !std::next_permutation(current_.begin(), current_.end());
  return *this;
}

std::vector<Permutation> enumerate_permutations(std::size_t n, std::uint64_t limit) {
  PermutationEnumeration all(n, limit);
  std::vector<Permutation> out;
  out.reserve(all.size());
  for (const auto& p : all) out.emplace_back(p);
  return out;
}

}  // namespace permtest
