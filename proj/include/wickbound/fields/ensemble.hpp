#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "wickbound/cumulants.hpp"
#include "wickbound/errors.hpp"
#include "wickbound/fft.hpp"
#include "wickbound/fields/spectral.hpp"
#include "wickbound/moments.hpp"

namespace wickbound {

/// splitmix64 finalizer; derives independent per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed ^ mix_seed(stream + 1)));
}

struct Estimate {
  cplx value;
  double std_error;  // standard error of |value| (real and imaginary parts combined)
};

/// Empirical moments of N field realizations. Row s holds sample s; column c
/// holds the variable with site id `sites[c]`. Cumulants are plug-in
/// cumulants of the empirical moments (biased at O(1/N)).
class EnsembleEstimator : public MomentProvider {
 public:
  EnsembleEstimator(std::vector<std::uint64_t> sites, std::size_t samples, std::vector<cplx> data,
                    std::uint64_t seed = 0)
      : sites_(std::move(sites)), samples_(samples), data_(std::move(data)), seed_(seed) {
    if (samples_ < 2) throw InvalidInput("ensemble needs at least two samples");
    if (data_.size() != samples_ * sites_.size()) throw InvalidInput("sample matrix shape mismatch");
    for (std::size_t c = 0; c < sites_.size(); ++c) column_[sites_[c]] = c;
  }

  std::size_t samples() const noexcept { return samples_; }
  std::size_t columns() const noexcept { return sites_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::uint64_t>& sites() const noexcept { return sites_; }
  const std::vector<cplx>& data() const noexcept { return data_; }
  std::size_t max_order() const override { return 8; }

  cplx at(std::size_t sample, const SiteRef& r) const {
    const cplx v = data_[sample * sites_.size() + column(r.site)];
    return r.conj ? std::conj(v) : v;
  }

  cplx moment(std::span<const SiteRef> I) const override { return moment_range(I, 0, samples_); }

  /// Sample mean of y^I with its standard error sd / sqrt(N).
  Estimate moment_with_error(std::span<const SiteRef> I) const {
    cplx sum = 0.0;
    double sq = 0.0;
    for (std::size_t s = 0; s < samples_; ++s) {
      const cplx v = product(s, I);
      sum += v;
      sq += std::norm(v);
    }
    const double n = static_cast<double>(samples_);
    const cplx mean = sum / n;
    const double var = std::max(0.0, (sq - n * std::norm(mean)) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
  }

  /// Plug-in cumulant with a batch-means standard error over `batches`
  /// equal slices of the ensemble.
  Estimate cumulant_with_error(std::span<const SiteRef> I, std::size_t batches = 20) const {
    const cplx full = CumulantTable(*this).cumulant(I);
    if (batches < 2 || batches > samples_) throw InvalidInput("invalid batch count");
    std::vector<cplx> values;
    const std::size_t per = samples_ / batches;
    for (std::size_t b = 0; b < batches; ++b) {
      const BatchView view(*this, b * per, (b + 1) * per);
      values.push_back(CumulantTable(view).cumulant(I));
    }
    cplx mean = 0.0;
    for (auto v : values) mean += v;
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (auto v : values) var += std::norm(v - mean);
    var /= static_cast<double>(batches - 1);
    return {full, std::sqrt(var / static_cast<double>(batches))};
  }

  /// Flat little-endian binary (re, im interleaved, row-major) plus a JSON
  /// header with dimensions, seed and box description.
  void export_binary(const std::string& path_prefix, const nlohmann::json& box) const {
    std::ofstream bin(path_prefix + ".bin", std::ios::binary);
    bin.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size() * sizeof(cplx)));
    nlohmann::json header{{"schema_version", 1},
                          {"rows", samples_},
                          {"cols", sites_.size()},
                          {"dtype", "complex128-le"},
                          {"layout", "row-major, sample x site"},
                          {"seed", seed_},
                          {"box", box},
                          {"sites", sites_}};
    std::ofstream(path_prefix + ".json") << header.dump(2) << '\n';
  }

 private:
  class BatchView : public MomentProvider {
   public:
    BatchView(const EnsembleEstimator& e, std::size_t begin, std::size_t end) : e_(e), begin_(begin), end_(end) {}
    cplx moment(std::span<const SiteRef> I) const override { return e_.moment_range(I, begin_, end_); }
    std::size_t max_order() const override { return e_.max_order(); }

   private:
    const EnsembleEstimator& e_;
    std::size_t begin_, end_;
  };

  std::size_t column(std::uint64_t site) const {
    auto it = column_.find(site);
    if (it == column_.end()) throw UnknownSite("site " + std::to_string(site) + " is not in the sample box");
    return it->second;
  }

  cplx product(std::size_t s, std::span<const SiteRef> I) const {
    cplx prod = 1.0;
    for (const auto& r : I) prod *= at(s, r);
    return prod;
  }

  cplx moment_range(std::span<const SiteRef> I, std::size_t begin, std::size_t end) const {
    if (I.empty()) return 1.0;
    cplx sum = 0.0;
    for (std::size_t s = begin; s < end; ++s) sum += product(s, I);
    return sum / static_cast<double>(end - begin);
  }

  std::vector<std::uint64_t> sites_;
  std::size_t samples_;
  std::vector<cplx> data_;
  std::uint64_t seed_;
  std::unordered_map<std::uint64_t, std::size_t> column_;
};

/// N realizations of the (psi, phi) pair on the periodic box {0..L-1} by
/// spectral sampling: on the DFT grid k = j/L the 2x2 spectral matrix
/// [[F1, G], [G*, F2]] is Cholesky-factored, applied to independent
/// circular complex normals, and inverse transformed. The real fields are
/// sqrt(2) Re of the result, whose covariance is the L-periodization of the
/// target covariance. Columns are psi(0..L-1) then phi(0..L-1).
inline EnsembleEstimator sample_ensemble(const SpectralGaussianField& field, std::size_t L, std::size_t N,
                                         std::uint64_t seed) {
  if (L == 0) throw InvalidInput("sample box must be nonempty");
  if (N < 2) throw InvalidInput("ensemble needs N >= 2");
  const Fft fft({static_cast<int>(L)});
  std::vector<cplx> a11(L), a21(L), a22(L);
  for (std::size_t j = 0; j < L; ++j) {
    double k = static_cast<double>(j) / static_cast<double>(L);
    if (k >= 0.5) k -= 1.0;
    const double f1 = field.spectrum(Pair::PsiPsi).density(k).real();
    const double f2 = field.spectrum(Pair::PhiPhi).density(k).real();
    const cplx g = field.spectrum(Pair::PsiPhi).density(k);
    a11[j] = std::sqrt(std::max(f1, 0.0));
    a21[j] = a11[j].real() > 0.0 ? std::conj(g) / a11[j] : cplx(0.0);
    a22[j] = std::sqrt(std::max(0.0, f2 - std::norm(a21[j])));
  }
  std::vector<std::uint64_t> sites;
  for (int c = 0; c < 2; ++c)
    for (std::size_t x = 0; x < L; ++x) sites.push_back(lattice_site(c, static_cast<std::int64_t>(x)));

  const double scale = std::sqrt(2.0 / static_cast<double>(L));
  std::vector<cplx> data(N * 2 * L);
  std::vector<cplx> z1(L), z2(L);
  for (std::size_t s = 0; s < N; ++s) {
    auto rng = stream_rng(seed, s);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    for (std::size_t j = 0; j < L; ++j) {
      const cplx w1(normal(rng), normal(rng)), w2(normal(rng), normal(rng));
      z1[j] = a11[j] * w1;
      z2[j] = a21[j] * w1 + a22[j] * w2;
    }
    fft.inverse(z1);
    fft.inverse(z2);
    cplx* row = &data[s * 2 * L];
    for (std::size_t x = 0; x < L; ++x) {
      row[x] = scale * z1[x].real();
      row[L + x] = scale * z2[x].real();
    }
  }
  return EnsembleEstimator(std::move(sites), N, std::move(data), seed);
}

}  // namespace wickbound
