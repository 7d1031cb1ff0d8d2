#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "wickbound/partitions.hpp"

using namespace wickbound;

namespace {

// Independent generator: insert element k into every existing block or a new one.
void grow(std::size_t k, std::size_t n, std::vector<std::vector<std::size_t>>& blocks,
          std::vector<SetPartition>& out) {
  if (k == n) {
    out.push_back({blocks, n});
    return;
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    blocks[b].push_back(k);
    grow(k + 1, n, blocks, out);
    blocks[b].pop_back();
  }
  blocks.push_back({k});
  grow(k + 1, n, blocks, out);
  blocks.pop_back();
}

std::vector<SetPartition> recursive_partitions(std::size_t n) {
  std::vector<SetPartition> out;
  std::vector<std::vector<std::size_t>> blocks;
  grow(0, n, blocks, out);
  return out;
}

// Bell numbers as row sums of Stirling numbers of the second kind.
std::uint64_t bell_via_stirling(std::size_t n) {
  std::vector<std::vector<std::uint64_t>> S(n + 1, std::vector<std::uint64_t>(n + 1, 0));
  S[0][0] = 1;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t k = 1; k <= i; ++k) S[i][k] = k * S[i - 1][k] + S[i - 1][k - 1];
  std::uint64_t b = 0;
  for (std::size_t k = 0; k <= n; ++k) b += S[n][k];
  return b;
}

// sum_pi prod |S|! satisfies a(n) = (2n-1) a(n-1) - (n-1)(n-2) a(n-2).
std::uint64_t factorial_sum_recurrence(std::size_t n) {
  std::vector<std::int64_t> a{1, 1};
  for (std::size_t k = 2; k <= n; ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    a.push_back((2 * kk - 1) * a[k - 1] - (kk - 1) * (kk - 2) * a[k - 2]);
  }
  return static_cast<std::uint64_t>(a[n]);
}

bool block_inside_group(const std::vector<std::size_t>& block, const std::vector<int>& group_of) {
  const int g = group_of[block.front()];
  if (g < 0) return false;
  return std::all_of(block.begin(), block.end(), [&](std::size_t i) { return group_of[i] == g; });
}

std::set<SetPartition> as_set(const std::vector<SetPartition>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("small partition counts") {
  CHECK(enumerate_partitions(2).size() == 2);
  CHECK(enumerate_partitions(3).size() == 5);
  CHECK(enumerate_partitions(4).size() == 15);
  const auto two = enumerate_partitions(2);
  CHECK(two[0].blocks == std::vector<std::vector<std::size_t>>{{0, 1}});
  CHECK(two[1].blocks == std::vector<std::vector<std::size_t>>{{0}, {1}});
}

TEST_CASE("partition count equals Bell(n) for n <= 10") {
  for (std::size_t n = 1; n <= 10; ++n) {
    std::uint64_t count = 0;
    for_each_partition(n, [&](auto, std::size_t) { ++count; });
    CHECK(count == bell_via_stirling(n));
    CHECK(bell_number(n) == bell_via_stirling(n));
  }
}

TEST_CASE("enumeration matches an independent recursive generator") {
  for (std::size_t n = 1; n <= 7; ++n) {
    const auto mine = enumerate_partitions(n);
    const auto ref = recursive_partitions(n);
    CHECK(mine.size() == ref.size());
    CHECK(as_set(mine) == as_set(ref));
    CHECK(as_set(mine).size() == mine.size());
  }
}

TEST_CASE("blocks are canonical") {
  for (const auto& p : enumerate_partitions(6)) {
    CHECK(p.parent_length == 6);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      CHECK_FALSE(p.blocks[b].empty());
      CHECK(std::is_sorted(p.blocks[b].begin(), p.blocks[b].end()));
      if (b > 0) CHECK(p.blocks[b - 1].front() < p.blocks[b].front());
    }
  }
}

TEST_CASE("size guard names Bell(n)") {
  CHECK_THROWS_AS(enumerate_partitions(15), CombinatorialBlowup);
  try {
    PartitionEnumerator e(15);
    FAIL("expected a guard error");
  } catch (const CombinatorialBlowup& e) {
    CHECK(std::string(e.what()).find("Bell(15)") != std::string::npos);
  }
  EnumerationLimits wide{16};
  CHECK_NOTHROW(PartitionEnumerator(15, wide));
  CHECK_THROWS_AS(PartitionEnumerator(0), InvalidInput);
}

TEST_CASE("restricted partitions of two pairs") {
  const auto parts = enumerate_restricted({{2, 2}, 0});
  REQUIRE(parts.size() == 3);
  const std::set<SetPartition> expected{
      {{{0, 1, 2, 3}}, 4},
      {{{0, 2}, {1, 3}}, 4},
      {{{0, 3}, {1, 2}}, 4},
  };
  CHECK(as_set(parts) == expected);
}

TEST_CASE("restricted edge cases") {
  CHECK(enumerate_restricted({{1}, 0}).empty());
  // {0,2}{1} and {0}{1,2} contain a singleton inside the group and drop out.
  const auto with_tail = enumerate_restricted({{2}, 1});
  REQUIRE(with_tail.size() == 1);
  CHECK(with_tail[0] == SetPartition{{{0, 1, 2}}, 3});
  CHECK(enumerate_restricted({{}, 0}).size() == 1);
}

TEST_CASE("empty group list gives all partitions of the tail") {
  for (std::size_t n = 1; n <= 7; ++n) CHECK(as_set(enumerate_restricted({{}, n})) == as_set(enumerate_partitions(n)));
}

TEST_CASE("restriction equals brute-force filter up to 8 elements") {
  const std::vector<RestrictedLayout> layouts{
      {{1, 1}, 0}, {{2, 2}, 0}, {{3}, 2},    {{2, 2}, 2}, {{1, 2, 3}, 0},
      {{2, 3}, 3}, {{4, 4}, 0}, {{1, 1, 1}, 3}, {{2, 2, 2}, 2}, {{}, 5},
  };
  for (const auto& layout : layouts) {
    const auto groups = layout.group_of();
    std::vector<SetPartition> filtered;
    for (const auto& p : recursive_partitions(layout.total()))
      if (std::none_of(p.blocks.begin(), p.blocks.end(), [&](const auto& b) { return block_inside_group(b, groups); }))
        filtered.push_back(p);
    CHECK(as_set(enumerate_restricted(layout)) == as_set(filtered));
  }
}

TEST_CASE("factorial partition sums") {
  CHECK(factorial_partition_sum(1) == 1);
  CHECK(factorial_partition_sum(2) == 3);
  CHECK(factorial_partition_sum(4) == 73);
  for (std::size_t n = 1; n <= 12; ++n) CHECK(factorial_partition_sum(n) == factorial_sum_recurrence(n));
}

TEST_CASE("combinatorial estimate holds for 2n <= 12") {
  const auto r1 = verify_comb_est(1);
  CHECK(r1.lhs == 3.0);
  CHECK(r1.rhs == Catch::Approx(2.0 * std::exp(2.0)).epsilon(1e-12));
  CHECK(r1.rhs == Catch::Approx(14.778).margin(1e-3));
  CHECK(r1.flag);
  const auto r2 = verify_comb_est(2);
  CHECK(r2.lhs == 73.0);
  CHECK(r2.rhs == Catch::Approx(1310.35).margin(1e-2));
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto r = verify_comb_est(n);
    CHECK(r.flag);
    CHECK(r.ratio < 1.0);
  }
  CHECK_THROWS_AS(verify_comb_est(8), CombinatorialBlowup);
}
