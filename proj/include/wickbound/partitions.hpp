#pragma once

// Set partitions of position labels {0..n-1}, streamed as restricted growth
// strings. Positions are 0-based throughout; the i-th element of an
// IndexSequence is position i.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "wickbound/errors.hpp"
#include "wickbound/report.hpp"

namespace wickbound {

inline constexpr std::size_t kDefaultMaxElements = 14;

/// Guard against Bell-number blowup. Enumerating n elements yields Bell(n)
/// items; Bell(14) is about 1.9e8.
struct EnumerationLimits {
  std::size_t max_elements = kDefaultMaxElements;
};

/// Bell(n) via the Bell triangle, saturating at UINT64_MAX.
inline std::uint64_t bell_number(std::size_t n) {
  std::vector<std::uint64_t> row{1};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) {
      std::uint64_t s;
      if (__builtin_add_overflow(next.back(), v, &s)) s = UINT64_MAX;
      next.push_back(s);
    }
    row = std::move(next);
  }
  return row.front();
}

inline void check_guard(std::size_t n, const EnumerationLimits& limits) {
  if (n > limits.max_elements || n > 64) {
    throw CombinatorialBlowup("combinatorial blowup: enumerating partitions of " + std::to_string(n) +
                              " elements yields Bell(" + std::to_string(n) + ") = " +
                              std::to_string(bell_number(n)) + " items, guard is " +
                              std::to_string(limits.max_elements) + " elements");
  }
}

/// Partition of {0..n-1} into nonempty blocks, blocks sorted by their
/// smallest element and each block sorted ascending.
struct SetPartition {
  std::vector<std::vector<std::size_t>> blocks;
  std::size_t parent_length = 0;

  std::size_t size() const noexcept { return blocks.size(); }

  friend bool operator==(const SetPartition&, const SetPartition&) = default;
  friend auto operator<=>(const SetPartition&, const SetPartition&) = default;
};

/// Build the canonical partition from a restricted growth string.
inline SetPartition partition_from_labels(std::span<const std::uint8_t> labels, std::size_t nblocks) {
  SetPartition p;
  p.parent_length = labels.size();
  p.blocks.resize(nblocks);
  for (std::size_t i = 0; i < labels.size(); ++i) p.blocks[labels[i]].push_back(i);
  return p;
}

/// Streaming enumerator over all partitions of n elements in lexicographic
/// restricted-growth-string order (which is canonical block order).
///
///   PartitionEnumerator e(4);
///   do { use(e.labels(), e.block_count()); } while (e.next());
class PartitionEnumerator {
 public:
  explicit PartitionEnumerator(std::size_t n, const EnumerationLimits& limits = {})
      : labels_(n, 0), maxprefix_(n, 0) {
    if (n == 0) throw InvalidInput("partition enumeration needs n >= 1");
    check_guard(n, limits);
  }

  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  std::size_t block_count() const noexcept { return static_cast<std::size_t>(maxprefix_.back()) + 1; }
  std::size_t length() const noexcept { return labels_.size(); }
  SetPartition current() const { return partition_from_labels(labels_, block_count()); }

  /// Advance; false once the last partition (all singletons) was visited.
  bool next() noexcept {
    const std::size_t n = labels_.size();
    for (std::size_t i = n; i-- > 1;) {
      if (labels_[i] <= maxprefix_[i - 1]) {
        ++labels_[i];
        maxprefix_[i] = std::max(maxprefix_[i - 1], labels_[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
          labels_[j] = 0;
          maxprefix_[j] = maxprefix_[i];
        }
        return true;
      }
    }
    return false;
  }

 private:
  std::vector<std::uint8_t> labels_;
  // maxprefix_[i] = max(labels_[0..i])
  std::vector<std::uint8_t> maxprefix_;
};

/// Calls f(labels, nblocks) for every partition of n elements.
template <class F>
void for_each_partition(std::size_t n, F&& f, const EnumerationLimits& limits = {}) {
  PartitionEnumerator e(n, limits);
  do {
    f(e.labels(), e.block_count());
  } while (e.next());
}

inline std::vector<SetPartition> enumerate_partitions(std::size_t n, const EnumerationLimits& limits = {}) {
  std::vector<SetPartition> out;
  for_each_partition(
      n, [&](std::span<const std::uint8_t> l, std::size_t k) { out.push_back(partition_from_labels(l, k)); },
      limits);
  return out;
}

/// Concatenation J_1 + ... + J_L + J' of index groups and a free tail, with
/// positions assigned consecutively in that order.
struct RestrictedLayout {
  std::vector<std::size_t> group_sizes;
  std::size_t tail = 0;

  std::size_t total() const noexcept {
    std::size_t t = tail;
    for (auto g : group_sizes) t += g;
    return t;
  }

  /// Group index of every position, -1 for tail positions.
  std::vector<int> group_of() const {
    std::vector<int> out;
    for (std::size_t g = 0; g < group_sizes.size(); ++g) out.insert(out.end(), group_sizes[g], static_cast<int>(g));
    out.insert(out.end(), tail, -1);
    return out;
  }
};

/// True iff no block lies entirely inside one group. Blocks inside the tail
/// are allowed.
inline bool is_admissible(std::span<const std::uint8_t> labels, std::size_t nblocks, std::span<const int> group_of) {
  constexpr int kUnset = -2, kMixed = -3;
  std::uint8_t seen[64];
  int owner[64];
  for (std::size_t b = 0; b < nblocks; ++b) {
    seen[b] = 0;
    owner[b] = kUnset;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto b = labels[i];
    const int g = group_of[i];
    if (!seen[b]) {
      seen[b] = 1;
      owner[b] = g;
    } else if (owner[b] != g) {
      owner[b] = kMixed;
    }
  }
  for (std::size_t b = 0; b < nblocks; ++b)
    if (owner[b] >= 0) return false;
  return true;
}

/// Calls f(labels, nblocks) for every partition of the concatenated layout
/// with no block internal to a single group.
template <class F>
void for_each_restricted(const RestrictedLayout& layout, F&& f, const EnumerationLimits& limits = {}) {
  const std::size_t n = layout.total();
  if (n == 0) {
    // The empty product has exactly one (empty) partition.
    f(std::span<const std::uint8_t>{}, std::size_t{0});
    return;
  }
  check_guard(n, limits);
  const auto groups = layout.group_of();
  for_each_partition(
      n,
      [&](std::span<const std::uint8_t> l, std::size_t k) {
        if (is_admissible(l, k, groups)) f(l, k);
      },
      limits);
}

inline std::vector<SetPartition> enumerate_restricted(const RestrictedLayout& layout,
                                                      const EnumerationLimits& limits = {}) {
  std::vector<SetPartition> out;
  for_each_restricted(
      layout, [&](std::span<const std::uint8_t> l, std::size_t k) { out.push_back(partition_from_labels(l, k)); },
      limits);
  return out;
}

/// Sum over partitions of {1..n} of prod |S|!, exactly.
inline std::uint64_t factorial_partition_sum(std::size_t n, const EnumerationLimits& limits = {}) {
  check_guard(n, limits);
  if (n > 20) throw CombinatorialBlowup("factorial partition sum overflows 64 bits beyond 20 elements");
  std::uint64_t fact[21] = {1};
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * i;
  std::uint64_t total = 0;
  std::vector<std::uint8_t> sizes;
  for_each_partition(
      n,
      [&](std::span<const std::uint8_t> l, std::size_t k) {
        sizes.assign(k, 0);
        for (auto b : l) ++sizes[b];
        std::uint64_t prod = 1;
        for (auto s : sizes) prod *= fact[s];
        if (__builtin_add_overflow(total, prod, &total))
          throw CombinatorialBlowup("factorial partition sum overflows 64 bits");
      },
      limits);
  return total;
}

/// Checks sum_{pi in P(2n)} prod |S|! <= (2n)! e^{2n}.
inline BoundReport verify_comb_est(std::size_t n, const EnumerationLimits& limits = {}) {
  const std::size_t two_n = 2 * n;
  check_guard(two_n, limits);
  const auto lhs = factorial_partition_sum(two_n, limits);
  const double rhs = std::tgamma(static_cast<double>(two_n) + 1.0) * std::exp(static_cast<double>(two_n));
  auto r = make_bound("comb_est", static_cast<double>(lhs), rhs);
  r.flag = static_cast<double>(lhs) <= rhs;
  r.n = static_cast<int>(n);
  r.witnesses["lhs_exact"] = std::to_string(lhs);
  return r;
}

}  // namespace wickbound
