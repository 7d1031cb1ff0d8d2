#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "wickbound/errors.hpp"
#include "wickbound/moments.hpp"
#include "wickbound/partitions.hpp"
#include "wickbound/report.hpp"
#include "wickbound/site.hpp"

namespace wickbound {

/// Anything that answers joint cumulants kappa[y_I].
template <class S>
concept CumulantSource = requires(const S& s, std::span<const SiteRef> I) {
  { s.cumulant(I) } -> std::convertible_to<cplx>;
};

/// Which position of the canonical key the moment recursion singles out.
/// The result does not depend on the choice; the rule exists so that this
/// can be tested.
enum class AnchorRule { First, Middle, Last };

/// Memoized cumulants of a MomentProvider, computed by
///   kappa[y_I] = E[y^I] - sum_{E : x in E, E != I} E[y^{I\E}] kappa[y_E].
/// Values are stored under the sorted index sequence. Concurrent lookups and
/// inserts of the same key are safe; inserts are idempotent.
class CumulantTable {
 public:
  explicit CumulantTable(const MomentProvider& provider, AnchorRule rule = AnchorRule::First)
      : provider_(&provider), rule_(rule) {}

  const MomentProvider& provider() const noexcept { return *provider_; }

  cplx moment(std::span<const SiteRef> I) const {
    if (I.empty()) return 1.0;
    check_order(I.size());
    auto key = canonical_key(I);
    {
      std::shared_lock lock(mu_);
      if (auto it = moments_.find(key); it != moments_.end()) return it->second;
    }
    const cplx value = provider_->moment(key);
    std::unique_lock lock(mu_);
    moments_.emplace(std::move(key), value);
    return value;
  }

  cplx cumulant(std::span<const SiteRef> I) const {
    if (I.empty()) throw InvalidInput("cumulant of an empty index sequence is undefined");
    check_order(I.size());
    auto key = canonical_key(I);
    {
      std::shared_lock lock(mu_);
      if (auto it = cumulants_.find(key); it != cumulants_.end()) return it->second;
    }
    const cplx value = compute(key);
    std::unique_lock lock(mu_);
    cumulants_.emplace(std::move(key), value);
    return value;
  }

  std::size_t cached_cumulants() const {
    std::shared_lock lock(mu_);
    return cumulants_.size();
  }

 private:
  void check_order(std::size_t n) const {
    if (n > provider_->max_order() || n > 63)
      throw OrderOverflow("order " + std::to_string(n) + " exceeds provider max order " +
                          std::to_string(provider_->max_order()));
  }

  std::size_t anchor(std::size_t n) const noexcept {
    switch (rule_) {
      case AnchorRule::Middle: return n / 2;
      case AnchorRule::Last: return n - 1;
      case AnchorRule::First: break;
    }
    return 0;
  }

  cplx compute(const IndexSequence& key) const {
    const std::size_t n = key.size();
    cplx value = moment(key);
    if (n == 1) return value;
    const std::uint64_t full = (std::uint64_t{1} << n) - 1;
    const std::uint64_t anchor_bit = std::uint64_t{1} << anchor(n);
    const std::uint64_t others = full & ~anchor_bit;
    // E ranges over proper subsets containing the anchor: E = anchor + s, s != others.
    for (std::uint64_t s = (others - 1) & others;; s = (s - 1) & others) {
      const std::uint64_t e = s | anchor_bit;
      value -= moment(select(key, full & ~e)) * cumulant(select(key, e));
      if (s == 0) break;
    }
    return value;
  }

  const MomentProvider* provider_;
  AnchorRule rule_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<IndexSequence, cplx, IndexSequenceHash> moments_;
  mutable std::unordered_map<IndexSequence, cplx, IndexSequenceHash> cumulants_;
};

/// E[y^I] = sum over partitions of I of prod kappa[y_A].
template <CumulantSource S>
cplx moments_from_cumulants(const S& source, std::span<const SiteRef> I, const EnumerationLimits& limits = {}) {
  if (I.empty()) return 1.0;
  cplx total = 0.0;
  IndexSequence block;
  std::vector<std::uint64_t> masks;
  for_each_partition(
      I.size(),
      [&](std::span<const std::uint8_t> labels, std::size_t k) {
        masks.assign(k, 0);
        for (std::size_t i = 0; i < labels.size(); ++i) masks[labels[i]] |= std::uint64_t{1} << i;
        cplx prod = 1.0;
        for (auto mask : masks) {
          prod *= source.cumulant(select(I, mask));
          if (prod == 0.0) break;
        }
        total += prod;
      },
      limits);
  return total;
}

/// Expectation of prod_l :y^{J_l}: times y^{J'} for a fixed group layout,
/// as a sum of cumulant products over partitions with no block internal to
/// one group. The admissible partitions are enumerated once, so repeated
/// evaluation for many index sequences of the same shape is cheap.
class WickProductEvaluator {
 public:
  explicit WickProductEvaluator(RestrictedLayout layout, const EnumerationLimits& limits = {})
      : layout_(std::move(layout)) {
    for_each_restricted(
        layout_,
        [&](std::span<const std::uint8_t> labels, std::size_t k) {
          std::vector<std::uint64_t> masks(k, 0);
          for (std::size_t i = 0; i < labels.size(); ++i) masks[labels[i]] |= std::uint64_t{1} << i;
          partitions_.push_back(std::move(masks));
        },
        limits);
  }

  const RestrictedLayout& layout() const noexcept { return layout_; }
  std::size_t term_count() const noexcept { return partitions_.size(); }

  /// `joined` is the concatenation J_1 + ... + J_L + J'.
  template <CumulantSource S>
  cplx evaluate(const S& source, std::span<const SiteRef> joined) const {
    if (joined.size() != layout_.total()) throw InvalidInput("index sequence does not match the Wick layout");
    cplx total = 0.0;
    for (const auto& blocks : partitions_) {
      cplx prod = 1.0;
      for (auto mask : blocks) {
        prod *= source.cumulant(select(joined, mask));
        if (prod == 0.0) break;
      }
      total += prod;
    }
    return total;
  }

 private:
  RestrictedLayout layout_;
  std::vector<std::vector<std::uint64_t>> partitions_;
};

/// E[ prod_l :y^{J_l}: y^{J'} ].
template <CumulantSource S>
cplx wick_product_expectation(const S& source, const std::vector<IndexSequence>& groups, const IndexSequence& tail,
                              const EnumerationLimits& limits = {}) {
  RestrictedLayout layout;
  IndexSequence joined;
  for (const auto& g : groups) {
    layout.group_sizes.push_back(g.size());
    joined.insert(joined.end(), g.begin(), g.end());
  }
  layout.tail = tail.size();
  joined.insert(joined.end(), tail.begin(), tail.end());
  return WickProductEvaluator(std::move(layout), limits).evaluate(source, joined);
}

struct WickTerm {
  cplx coefficient;
  IndexSequence monomial;  // canonical (sorted); empty for the constant term
};

/// :y^I: as a polynomial in the underlying variables. Terms are ordered by
/// decreasing degree, so the leading term y^I comes first.
struct WickExpansion {
  IndexSequence index;
  std::vector<WickTerm> terms;

  /// Value of the polynomial at one realization.
  template <class ValueFn>
  cplx evaluate(ValueFn&& value_of) const {
    cplx total = 0.0;
    for (const auto& t : terms) {
      cplx prod = t.coefficient;
      for (const auto& r : t.monomial) prod *= value_of(r);
      total += prod;
    }
    return total;
  }

  /// Term-by-term expectation.
  cplx expectation(const CumulantTable& table) const {
    cplx total = 0.0;
    for (const auto& t : terms) total += t.coefficient * table.moment(t.monomial);
    return total;
  }
};

/// Unrolls :y^I: = y^I - sum_{E != I} E[y^{I\E}] :y^E: over position subsets.
inline WickExpansion wick_expansion(const CumulantTable& table, std::span<const SiteRef> I) {
  const std::size_t n = I.size();
  if (n > table.provider().max_order() || n > 20)
    throw OrderOverflow("Wick polynomial of order " + std::to_string(n) + " exceeds provider max order");
  const std::uint64_t count = std::uint64_t{1} << n;
  // poly[mask] maps a monomial (as a position submask) to its coefficient.
  std::vector<std::unordered_map<std::uint64_t, cplx>> poly(count);
  std::vector<std::uint64_t> order(count);
  for (std::uint64_t i = 0; i < count; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [](auto a, auto b) { return std::popcount(a) < std::popcount(b); });
  for (auto mask : order) {
    auto& p = poly[mask];
    p[mask] += 1.0;
    if (mask == 0) continue;
    for (std::uint64_t e = (mask - 1) & mask;; e = (e - 1) & mask) {
      const cplx weight = table.moment(select(I, mask & ~e));
      if (weight != 0.0)
        for (const auto& [mono, c] : poly[e]) p[mono] -= weight * c;
      if (e == 0) break;
    }
  }
  std::unordered_map<IndexSequence, cplx, IndexSequenceHash> merged;
  for (const auto& [mono, c] : poly[count - 1]) merged[canonical_key(select(I, mono))] += c;

  WickExpansion out;
  out.index.assign(I.begin(), I.end());
  for (auto& [mono, c] : merged)
    if (c != 0.0) out.terms.push_back({c, mono});
  std::sort(out.terms.begin(), out.terms.end(), [](const WickTerm& a, const WickTerm& b) {
    if (a.monomial.size() != b.monomial.size()) return a.monomial.size() > b.monomial.size();
    return a.monomial < b.monomial;
  });
  return out;
}

/// Compares a central finite difference of ln E[exp(lambda . y)] at 0 with
/// the recursive cumulant. The mixed derivative is approximated by the
/// tensor-product stencil sum_s (prod s_k) g(h sum_k s_k e_{i_k}) / (2h)^n,
/// whose truncation error is O(h^2).
inline BoundReport generating_check(const MomentProvider& provider, std::span<const SiteRef> I, double h,
                                    double tolerance = 1e-6) {
  const auto* mgf = dynamic_cast<const LogMgfProvider*>(&provider);
  if (!mgf) throw NoGeneratingFunction("provider does not expose a closed-form generating function");
  const std::size_t n = I.size();
  if (n == 0 || n > 4) throw InvalidInput("generating_check supports 1 <= |I| <= 4");

  // Real variables: y* = y, so the conjugation flag does not create a new variable.
  IndexSequence vars;
  std::vector<std::size_t> slot(n);
  for (std::size_t k = 0; k < n; ++k) {
    const SiteRef plain{I[k].site, false};
    auto it = std::find(vars.begin(), vars.end(), plain);
    slot[k] = static_cast<std::size_t>(it - vars.begin());
    if (it == vars.end()) vars.push_back(plain);
  }
  std::vector<double> lambda(vars.size());
  double fd = 0.0;
  for (std::uint64_t signs = 0; signs < (std::uint64_t{1} << n); ++signs) {
    std::fill(lambda.begin(), lambda.end(), 0.0);
    double parity = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double s = (signs >> k) & 1 ? -1.0 : 1.0;
      parity *= s;
      lambda[slot[k]] += s * h;
    }
    fd += parity * mgf->log_mgf(vars, lambda);
  }
  fd /= std::pow(2.0 * h, static_cast<double>(n));

  const CumulantTable table(provider);
  const cplx kappa = table.cumulant(I);
  auto r = make_bound("generating_check", std::abs(fd - kappa), tolerance);
  r.witnesses["finite_difference"] = std::to_string(fd);
  r.witnesses["cumulant"] = std::to_string(kappa.real());
  r.constants["h"] = h;
  r.n = static_cast<int>(n);
  return r;
}

}  // namespace wickbound
