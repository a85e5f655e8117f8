#pragma once

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <span>
#include <vector>

#include "permtest/rng.hpp"

namespace permtest {

/// Default cap on n! for exhaustive enumeration (10! = 3628800).
inline constexpr std::uint64_t kDefaultEnumerationLimit = 3628800;

/// A bijection on {0, ..., n-1}. Position i of a permuted dataset holds the
/// original observation indices()[i].
class Permutation {
 public:
  Permutation() = default;

  /// Validates that `indices` is a bijection on {0, ..., size-1}.
  explicit Permutation(std::vector<std::size_t> indices);

  static Permutation identity(std::size_t n);

  std::size_t size() const noexcept { return indices_.size(); }
  std::size_t operator[](std::size_t i) const noexcept { return indices_[i]; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  bool is_identity() const noexcept;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> indices_;
};

/// True if `indices` is a bijection on {0, ..., indices.size()-1}.
bool is_bijection(std::span<const std::size_t> indices);

/// n! or 0 when it does not fit in 64 bits.
std::uint64_t factorial(std::size_t n) noexcept;

/// Draws a uniform permutation of size n (Fisher-Yates). Throws
/// std::domain_error for n = 0.
Permutation sample_permutation(std::size_t n, Rng& rng);

/// In-place Fisher-Yates shuffle of an existing buffer.
void shuffle_in_place(std::span<std::size_t> values, Rng& rng) noexcept;

/// The permutation of rank `rank` in lexicographic order.
std::vector<std::size_t> permutation_from_rank(std::size_t n, std::uint64_t rank);

/// All n! permutations of {0, ..., n-1} in lexicographic order.
///
/// Construction throws std::length_error when n! exceeds `limit`.
class PermutationEnumeration {
 public:
  explicit PermutationEnumeration(std::size_t n, std::uint64_t limit = kDefaultEnumerationLimit);

  class iterator {
   public:
    using value_type = std::vector<std::size_t>;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    const value_type& operator*() const noexcept { return current_; }
    iterator& operator++();
    void operator++(int) { ++*this; }
    bool operator==(std::default_sentinel_t) const noexcept { return done_; }

   private:
    friend class PermutationEnumeration;
    explicit iterator(std::size_t n);
    value_type current_;
    bool done_ = true;
  };

  iterator begin() const { return iterator(n_); }
  std::default_sentinel_t end() const noexcept { return {}; }
  std::uint64_t size() const noexcept { return count_; }

 private:
  std::size_t n_;
  std::uint64_t count_;
};

/// Convenience wrapper materializing the enumeration.
std::vector<Permutation> enumerate_permutations(std::size_t n,
                                                std::uint64_t limit = kDefaultEnumerationLimit);

}  // namespace permtest
