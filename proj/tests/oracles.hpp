#pragma once

// Brute-force reference computations over finite discrete fields, written
// independently of the library recursions.

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <vector>

#include "wickbound/fields/discrete.hpp"

namespace oracle {

using wickbound::cplx;
using wickbound::FiniteDiscreteField;
using wickbound::IndexSequence;
using wickbound::SiteRef;

inline cplx atom_value(const FiniteDiscreteField& f, std::size_t atom, const SiteRef& r) {
  std::size_t col = 0;
  while (f.sites()[col] != r.site) ++col;
  const cplx v = f.atoms()[atom].values[col];
  return r.conj ? std::conj(v) : v;
}

inline cplx monomial(const FiniteDiscreteField& f, std::size_t atom, const IndexSequence& I, std::uint64_t mask) {
  cplx prod = 1.0;
  for (std::size_t i = 0; i < I.size(); ++i)
    if (mask >> i & 1) prod *= atom_value(f, atom, I[i]);
  return prod;
}

inline cplx expectation(const FiniteDiscreteField& f, const std::function<cplx(std::size_t)>& value) {
  cplx total = 0.0;
  for (std::size_t a = 0; a < f.atoms().size(); ++a) total += f.atoms()[a].probability * value(a);
  return total;
}

inline cplx moment(const FiniteDiscreteField& f, const IndexSequence& I, std::uint64_t mask) {
  return expectation(f, [&](std::size_t a) { return monomial(f, a, I, mask); });
}

inline cplx moment(const FiniteDiscreteField& f, const IndexSequence& I) {
  return moment(f, I, (std::uint64_t{1} << I.size()) - 1);
}

/// All set partitions of the positions in `mask`, as lists of submasks.
inline void partitions_of(std::uint64_t mask, std::vector<std::uint64_t>& current,
                          const std::function<void(const std::vector<std::uint64_t>&)>& f) {
  if (mask == 0) {
    f(current);
    return;
  }
  const std::uint64_t low = mask & (~mask + 1);
  const std::uint64_t rest = mask & ~low;
  for (std::uint64_t s = rest;; s = (s - 1) & rest) {
    current.push_back(low | s);
    partitions_of(rest & ~s, current, f);
    current.pop_back();
    if (s == 0) break;
  }
}

/// kappa[y_I] = sum_pi (-1)^{|pi|-1} (|pi|-1)! prod_B E[y^B].
inline cplx cumulant(const FiniteDiscreteField& f, const IndexSequence& I) {
  cplx total = 0.0;
  std::vector<std::uint64_t> cur;
  partitions_of((std::uint64_t{1} << I.size()) - 1, cur, [&](const std::vector<std::uint64_t>& blocks) {
    const auto k = static_cast<double>(blocks.size());
    cplx prod = (blocks.size() % 2 ? 1.0 : -1.0) * std::tgamma(k);
    for (auto b : blocks) prod *= moment(f, I, b);
    total += prod;
  });
  return total;
}

/// Value of :y^I: at one atom from the defining recursion, with exact
/// moments of the field.
class WickValues {
 public:
  WickValues(const FiniteDiscreteField& f, IndexSequence I) : f_(f), I_(std::move(I)) {}

  cplx operator()(std::size_t atom, std::uint64_t mask) {
    const auto key = std::make_pair(atom, mask);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    cplx v = monomial(f_, atom, I_, mask);
    if (mask != 0)
      for (std::uint64_t e = (mask - 1) & mask;; e = (e - 1) & mask) {
        v -= moment(f_, I_, mask & ~e) * (*this)(atom, e);
        if (e == 0) break;
      }
    memo_.emplace(key, v);
    return v;
  }

  cplx full(std::size_t atom) { return (*this)(atom, (std::uint64_t{1} << I_.size()) - 1); }

 private:
  const FiniteDiscreteField& f_;
  IndexSequence I_;
  std::map<std::pair<std::size_t, std::uint64_t>, cplx> memo_;
};

/// E[prod_l :y^{J_l}: y^{J'}] by direct summation over the sample space.
inline cplx wick_product(const FiniteDiscreteField& f, const std::vector<IndexSequence>& groups,
                         const IndexSequence& tail) {
  std::vector<WickValues> values;
  for (const auto& g : groups) values.emplace_back(f, g);
  return expectation(f, [&](std::size_t a) {
    cplx prod = monomial(f, a, tail, (std::uint64_t{1} << tail.size()) - 1);
    for (auto& w : values) prod *= w.full(a);
    return prod;
  });
}

}  // namespace oracle
