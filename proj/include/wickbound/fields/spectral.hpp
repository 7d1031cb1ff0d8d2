#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>

#include "wickbound/errors.hpp"
#include "wickbound/fields/gaussian.hpp"

namespace wickbound {

/// Site ids of the two-component lattice fields on Z: component 0 is psi,
/// component 1 is phi.
inline constexpr std::uint64_t kPositionBias = std::uint64_t{1} << 55;
inline constexpr std::uint64_t kPositionMask = (std::uint64_t{1} << 56) - 1;

inline std::uint64_t lattice_site(int component, std::int64_t x) {
  return (static_cast<std::uint64_t>(component) << 56) | ((static_cast<std::uint64_t>(x) + kPositionBias) & kPositionMask);
}
inline int site_component(std::uint64_t site) { return static_cast<int>(site >> 56); }
inline std::int64_t site_position(std::uint64_t site) {
  return static_cast<std::int64_t>(site & kPositionMask) - static_cast<std::int64_t>(kPositionBias);
}

inline SiteRef psi_at(std::int64_t x) { return {lattice_site(0, x), false}; }
inline SiteRef phi_at(std::int64_t x) { return {lattice_site(1, x), false}; }

/// A covariance on Z given by its Fourier transform on the torus [-1/2, 1/2),
///   F(x) = int dk exp(2 pi i x k) Fhat(k).
struct Spectrum {
  std::string name;
  std::function<cplx(double)> density;
  /// Exact inverse transform when known; quadrature is used otherwise.
  std::function<cplx(std::int64_t)> closed_form;
  /// F(x) = 0 for |x| > support_radius.
  std::optional<std::int64_t> support_radius;
};

inline Spectrum constant_spectrum(double value) {
  return {"constant", [value](double) { return cplx(value); },
          [value](std::int64_t x) { return x == 0 ? cplx(value) : cplx(0.0); }, std::int64_t{0}};
}

inline Spectrum zero_spectrum() { return constant_spectrum(0.0); }

/// value * 1(|k| < cutoff); the jump points take the midpoint value so that
/// grid quadrature is trapezoidal across the discontinuity.
inline Spectrum indicator_spectrum(double cutoff, double value = 1.0) {
  auto density = [cutoff, value](double k) {
    const double a = std::abs(k);
    if (a < cutoff) return cplx(value);
    if (a == cutoff) return cplx(0.5 * value);
    return cplx(0.0);
  };
  auto closed = [cutoff, value](std::int64_t x) {
    if (x == 0) return cplx(2.0 * cutoff * value);
    const double xd = static_cast<double>(x);
    return cplx(value * std::sin(2.0 * std::numbers::pi * cutoff * xd) / (std::numbers::pi * xd));
  };
  return {"indicator", density, closed, std::nullopt};
}

/// Covariance variance * r^|x|, 0 <= r < 1.
inline Spectrum ar1_spectrum(double r, double variance = 1.0) {
  if (!(r >= 0.0 && r < 1.0)) throw InvalidInput("ar1 spectrum needs 0 <= r < 1");
  auto density = [r, variance](double k) {
    return cplx(variance * (1.0 - r * r) / (1.0 - 2.0 * r * std::cos(2.0 * std::numbers::pi * k) + r * r));
  };
  auto closed = [r, variance](std::int64_t x) { return cplx(variance * std::pow(r, static_cast<double>(std::abs(x)))); };
  return {"ar1", density, closed, std::nullopt};
}

inline double torus_point(std::size_t j, std::size_t grid) {
  return -0.5 + static_cast<double>(j) / static_cast<double>(grid);
}

struct PsdCheck {
  bool ok = true;
  double worst_margin = INFINITY;  // min over grid of the smallest PSD slack
  double worst_k = 0.0;
};

/// Fhat1 >= 0, Fhat2 >= 0 and |Ghat|^2 <= Fhat1 Fhat2 on every grid point.
inline PsdCheck check_psd(const Spectrum& f1, const Spectrum& f2, const Spectrum& g, std::size_t grid,
                          double tolerance = 1e-12) {
  PsdCheck out;
  for (std::size_t j = 0; j < grid; ++j) {
    const double k = torus_point(j, grid);
    const cplx a = f1.density(k), b = f2.density(k), c = g.density(k);
    const double margin = std::min({a.real(), b.real(), a.real() * b.real() - std::norm(c)});
    const double imag = std::max(std::abs(a.imag()), std::abs(b.imag()));
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_k = k;
    }
    if (margin < -tolerance || imag > tolerance) out.ok = false;
  }
  return out;
}

enum class Pair { PsiPsi, PhiPhi, PsiPhi };

/// Zero-mean real stationary Gaussian pair (psi, phi) on Z with
///   <psi(x) psi(y)> = F1(x-y), <phi(x) phi(y)> = F2(x-y), <psi(x) phi(y)> = G(x-y).
/// The PSD conditions are validated on the quadrature grid at construction.
class SpectralGaussianField : public GaussianModel {
 public:
  static constexpr std::size_t kDefaultGrid = std::size_t{1} << 12;

  SpectralGaussianField(Spectrum f1, Spectrum f2, Spectrum g, std::size_t grid = kDefaultGrid)
      : f1_(std::move(f1)), f2_(std::move(f2)), g_(std::move(g)), grid_(grid) {
    const auto psd = check_psd(f1_, f2_, g_, grid_);
    if (!psd.ok)
      throw PsdViolation("spectra violate Fhat1, Fhat2 >= 0, |Ghat|^2 <= Fhat1 Fhat2 at k = " +
                         std::to_string(psd.worst_k) + " (margin " + std::to_string(psd.worst_margin) + ")");
  }

  const Spectrum& spectrum(Pair which) const noexcept {
    switch (which) {
      case Pair::PsiPsi: return f1_;
      case Pair::PhiPhi: return f2_;
      case Pair::PsiPhi: break;
    }
    return g_;
  }
  std::size_t grid() const noexcept { return grid_; }

  /// Covariance at a displacement: closed form when available, otherwise
  /// inverse-Fourier quadrature (cached).
  cplx gaussian_covariance(Pair which, std::int64_t displacement) const {
    const auto& s = spectrum(which);
    if (s.support_radius && std::abs(displacement) > *s.support_radius) return 0.0;
    if (s.closed_form) return s.closed_form(displacement);
    const auto key = std::make_pair(static_cast<int>(which), displacement);
    {
      std::lock_guard lock(cache_mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const cplx v = quadrature_covariance(which, displacement);
    std::lock_guard lock(cache_mutex_);
    cache_.emplace(key, v);
    return v;
  }

  /// Rectangle rule on the uniform periodic grid (trapezoidal on the torus).
  cplx quadrature_covariance(Pair which, std::int64_t displacement) const {
    const auto& s = spectrum(which);
    cplx total = 0.0;
    const double x = static_cast<double>(displacement);
    for (std::size_t j = 0; j < grid_; ++j) {
      const double k = torus_point(j, grid_);
      total += s.density(k) * std::polar(1.0, 2.0 * std::numbers::pi * k * x);
    }
    return total / static_cast<double>(grid_);
  }

  cplx mean(const SiteRef&) const override { return 0.0; }
  bool zero_mean() const override { return true; }

  cplx covariance(const SiteRef& a, const SiteRef& b) const override {
    const int ca = site_component(a.site), cb = site_component(b.site);
    const std::int64_t xa = site_position(a.site), xb = site_position(b.site);
    if (ca > 1 || cb > 1) throw UnknownSite("site is not part of the (psi, phi) lattice field");
    if (ca == 0 && cb == 0) return gaussian_covariance(Pair::PsiPsi, xa - xb);
    if (ca == 1 && cb == 1) return gaussian_covariance(Pair::PhiPhi, xa - xb);
    if (ca == 0) return gaussian_covariance(Pair::PsiPhi, xa - xb);
    return gaussian_covariance(Pair::PsiPhi, xb - xa);
  }

 private:
  Spectrum f1_, f2_, g_;
  std::size_t grid_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<int, std::int64_t>, cplx> cache_;
};

/// i.i.d. unit-variance fields coupled through Ghat(k) = 1(|k| < 1/4), so
/// G(x) = sin(pi x / 2) / (pi x) and G(0) = 1/2.
inline SpectralGaussianField sinc_coupling_example(std::size_t grid = SpectralGaussianField::kDefaultGrid) {
  return SpectralGaussianField(constant_spectrum(1.0), constant_spectrum(1.0), indicator_spectrum(0.25, 1.0), grid);
}

/// Two independent i.i.d. real Gaussian fields with the given variance.
inline SpectralGaussianField iid_gaussian_pair(double variance = 1.0) {
  return SpectralGaussianField(constant_spectrum(variance), constant_spectrum(variance), zero_spectrum());
}

}  // namespace wickbound
