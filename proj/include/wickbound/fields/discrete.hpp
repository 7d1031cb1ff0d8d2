#pragma once

#include <cmath>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "wickbound/errors.hpp"
#include "wickbound/moments.hpp"

namespace wickbound {

struct Atom {
  double probability = 0.0;
  std::vector<cplx> values;  // one value per site, in field.sites() order
};

/// Random field with finitely many outcomes. Every moment is an exact
/// weighted sum over atoms, which makes it the brute-force oracle for the
/// cumulant machinery.
class FiniteDiscreteField : public MomentProvider, public LogMgfProvider {
 public:
  FiniteDiscreteField(std::vector<std::uint64_t> sites, std::vector<Atom> atoms, std::size_t max_order = 12)
      : sites_(std::move(sites)), atoms_(std::move(atoms)), max_order_(max_order) {
    if (atoms_.empty()) throw InvalidInput("discrete field needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (a.probability < 0.0) throw InvalidInput("negative atom probability");
      if (a.values.size() != sites_.size()) throw InvalidInput("atom value count does not match site count");
      total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("atom probabilities sum to " + std::to_string(total));
    for (std::size_t i = 0; i < sites_.size(); ++i) column_[sites_[i]] = i;
  }

  const std::vector<std::uint64_t>& sites() const noexcept { return sites_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t max_order() const override { return max_order_; }

  std::size_t column(std::uint64_t site) const {
    auto it = column_.find(site);
    if (it == column_.end()) throw UnknownSite("site " + std::to_string(site) + " is not part of the field");
    return it->second;
  }

  cplx value(const Atom& atom, const SiteRef& r) const {
    const cplx v = atom.values[column(r.site)];
    return r.conj ? std::conj(v) : v;
  }

  cplx moment(std::span<const SiteRef> I) const override {
    std::vector<std::size_t> cols(I.size());
    for (std::size_t k = 0; k < I.size(); ++k) cols[k] = column(I[k].site);
    cplx total = 0.0;
    for (const auto& a : atoms_) {
      cplx prod = a.probability;
      for (std::size_t k = 0; k < I.size(); ++k) prod *= I[k].conj ? std::conj(a.values[cols[k]]) : a.values[cols[k]];
      total += prod;
    }
    return total;
  }

  bool is_real() const noexcept {
    for (const auto& a : atoms_)
      for (auto v : a.values)
        if (v.imag() != 0.0) return false;
    return true;
  }

  double log_mgf(std::span<const SiteRef> variables, std::span<const double> lambda) const override {
    if (!is_real()) throw NoGeneratingFunction("complex-valued discrete field has no real generating function");
    double total = 0.0;
    for (const auto& a : atoms_) {
      double dot = 0.0;
      for (std::size_t k = 0; k < variables.size(); ++k) dot += lambda[k] * a.values[column(variables[k].site)].real();
      total += a.probability * std::exp(dot);
    }
    return std::log(total);
  }

 private:
  std::vector<std::uint64_t> sites_;
  std::vector<Atom> atoms_;
  std::size_t max_order_;
  std::unordered_map<std::uint64_t, std::size_t> column_;
};

inline cplx exact_moment(const FiniteDiscreteField& field, std::span<const SiteRef> I) { return field.moment(I); }

/// Random discrete field with `atom_count` outcomes on sites 0..site_count-1.
/// Values are uniform in the unit square (or on [-1,1] when `real`).
inline FiniteDiscreteField random_discrete_field(std::mt19937_64& rng, std::size_t site_count, std::size_t atom_count,
                                                 bool real = false) {
  std::uniform_real_distribution<double> unit(0.05, 1.0), val(-1.0, 1.0);
  std::vector<Atom> atoms(atom_count);
  double total = 0.0;
  for (auto& a : atoms) {
    a.probability = unit(rng);
    total += a.probability;
    for (std::size_t s = 0; s < site_count; ++s) {
      const double re = val(rng);
      a.values.emplace_back(re, real ? 0.0 : val(rng));
    }
  }
  for (auto& a : atoms) a.probability /= total;
  // Exact normalization: push rounding into the last atom.
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) partial += atoms[i].probability;
  atoms.back().probability = 1.0 - partial;
  std::vector<std::uint64_t> sites(site_count);
  for (std::size_t s = 0; s < site_count; ++s) sites[s] = s;
  return FiniteDiscreteField(std::move(sites), std::move(atoms));
}

}  // namespace wickbound
