#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace wickbound {

/// A reference to one random variable of a field: an opaque site id plus a
/// conjugation flag. For a field closed under conjugation, `{s, true}` names
/// the variable psi(s)*.
struct SiteRef {
  std::uint64_t site = 0;
  bool conj = false;

  constexpr SiteRef conjugated() const noexcept { return {site, !conj}; }

  friend constexpr bool operator==(const SiteRef&, const SiteRef&) = default;
  friend constexpr auto operator<=>(const SiteRef&, const SiteRef&) = default;
};

/// Ordered sequence of site references. Positions are the labels, so the same
/// site may occur several times.
using IndexSequence = std::vector<SiteRef>;

inline IndexSequence make_sequence(std::initializer_list<std::uint64_t> sites) {
  IndexSequence out;
  out.reserve(sites.size());
  for (auto s : sites) out.push_back({s, false});
  return out;
}

inline IndexSequence conjugate(std::span<const SiteRef> seq) {
  IndexSequence out(seq.begin(), seq.end());
  for (auto& r : out) r = r.conjugated();
  return out;
}

inline IndexSequence concat(std::span<const SiteRef> a, std::span<const SiteRef> b) {
  IndexSequence out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// Sorted copy; moments and cumulants are permutation invariant so this is
/// the memoization key.
inline IndexSequence canonical_key(std::span<const SiteRef> seq) {
  IndexSequence key(seq.begin(), seq.end());
  std::sort(key.begin(), key.end());
  return key;
}

struct IndexSequenceHash {
  std::size_t operator()(const IndexSequence& seq) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& r : seq) {
      h ^= (r.site << 1) | static_cast<std::uint64_t>(r.conj);
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

/// Subsequence selected by a position bitmask (bit i selects position i).
inline IndexSequence select(std::span<const SiteRef> seq, std::uint64_t mask) {
  IndexSequence out;
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (mask & (std::uint64_t{1} << i)) out.push_back(seq[i]);
  return out;
}

}  // namespace wickbound
