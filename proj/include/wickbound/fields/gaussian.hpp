#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wickbound/errors.hpp"
#include "wickbound/moments.hpp"

namespace wickbound {

inline constexpr std::size_t kGaussianMaxOrder = 8;

/// Gaussian field described by its means and covariances. Moments follow
/// from Isserlis' theorem with means: sum over partitions of I into
/// singletons and pairs of prod mean * prod covariance.
class GaussianModel : public MomentProvider {
 public:
  virtual cplx mean(const SiteRef& a) const = 0;
  /// kappa[y_a, y_b] = E[y_a y_b] - E[y_a] E[y_b].
  virtual cplx covariance(const SiteRef& a, const SiteRef& b) const = 0;
  virtual bool zero_mean() const { return false; }

  std::size_t max_order() const override { return kGaussianMaxOrder; }

  cplx moment(std::span<const SiteRef> I) const override { return gaussian_moment(I); }

  cplx gaussian_moment(std::span<const SiteRef> I) const {
    if (I.size() > kGaussianMaxOrder)
      throw OrderOverflow("Gaussian moment of order " + std::to_string(I.size()) + " exceeds guard " +
                          std::to_string(kGaussianMaxOrder));
    if (I.empty()) return 1.0;
    if (zero_mean() && I.size() % 2 == 1) return 0.0;
    std::vector<SiteRef> rest(I.begin(), I.end());
    return pairings(rest);
  }

 private:
  cplx pairings(std::vector<SiteRef>& rest) const {
    if (rest.empty()) return 1.0;
    const SiteRef head = rest.back();
    rest.pop_back();
    cplx total = 0.0;
    if (!zero_mean()) {
      const cplx mu = mean(head);
      if (mu != 0.0) total += mu * pairings(rest);
    }
    for (std::size_t j = 0; j < rest.size(); ++j) {
      const cplx c = covariance(head, rest[j]);
      if (c == 0.0) continue;
      std::swap(rest[j], rest.back());
      const SiteRef partner = rest.back();
      rest.pop_back();
      total += c * pairings(rest);
      rest.push_back(partner);
      std::swap(rest[j], rest.back());
    }
    rest.push_back(head);
    return total;
  }
};

/// Closed-form cumulants of a Gaussian model: the mean at order 1, the
/// covariance at order 2, zero above.
class GaussianCumulants {
 public:
  explicit GaussianCumulants(const GaussianModel& model) : model_(&model) {}

  cplx cumulant(std::span<const SiteRef> I) const {
    switch (I.size()) {
      case 0: throw InvalidInput("cumulant of an empty index sequence is undefined");
      case 1: return model_->mean(I[0]);
      case 2: return model_->covariance(I[0], I[1]);
      default: return 0.0;
    }
  }

  /// True when every cumulant of this order is identically zero.
  bool vanishes(std::size_t order) const { return order > 2 || (order == 1 && model_->zero_mean()); }

  const GaussianModel& model() const noexcept { return *model_; }

 private:
  const GaussianModel* model_;
};

/// Real Gaussian vector with explicit mean and covariance matrix.
class FiniteGaussianField : public GaussianModel, public LogMgfProvider {
 public:
  FiniteGaussianField(std::vector<std::uint64_t> sites, std::vector<double> mean,
                      std::vector<std::vector<double>> covariance)
      : sites_(std::move(sites)), mean_(std::move(mean)), cov_(std::move(covariance)) {
    if (mean_.size() != sites_.size() || cov_.size() != sites_.size())
      throw InvalidInput("mean/covariance shape does not match site count");
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (cov_[i].size() != sites_.size()) throw InvalidInput("covariance matrix must be square");
      column_[sites_[i]] = i;
    }
    for (std::size_t i = 0; i < sites_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (std::abs(cov_[i][j] - cov_[j][i]) > 1e-12) throw InvalidInput("covariance matrix must be symmetric");
  }

  cplx mean(const SiteRef& a) const override { return mean_[column(a.site)]; }
  cplx covariance(const SiteRef& a, const SiteRef& b) const override { return cov_[column(a.site)][column(b.site)]; }
  bool zero_mean() const override {
    for (auto m : mean_)
      if (m != 0.0) return false;
    return true;
  }

  double log_mgf(std::span<const SiteRef> variables, std::span<const double> lambda) const override {
    double lin = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < variables.size(); ++i) {
      const auto ci = column(variables[i].site);
      lin += lambda[i] * mean_[ci];
      for (std::size_t j = 0; j < variables.size(); ++j) quad += lambda[i] * cov_[ci][column(variables[j].site)] * lambda[j];
    }
    return lin + 0.5 * quad;
  }

 private:
  std::size_t column(std::uint64_t site) const {
    auto it = column_.find(site);
    if (it == column_.end()) throw UnknownSite("site " + std::to_string(site) + " is not part of the field");
    return it->second;
  }

  std::vector<std::uint64_t> sites_;
  std::vector<double> mean_;
  std::vector<std::vector<double>> cov_;
  std::unordered_map<std::uint64_t, std::size_t> column_;
};

/// Centered circularly-symmetric complex Gaussian field given by
/// C(x, y) = E[psi(x)* psi(y)]; E[psi(x) psi(y)] = 0.
class CircularGaussianField : public GaussianModel {
 public:
  using Covariance = std::function<cplx(std::uint64_t, std::uint64_t)>;

  explicit CircularGaussianField(Covariance c) : c_(std::move(c)) {}

  cplx mean(const SiteRef&) const override { return 0.0; }
  bool zero_mean() const override { return true; }

  cplx covariance(const SiteRef& a, const SiteRef& b) const override {
    if (a.conj == b.conj) return 0.0;
    return a.conj ? c_(a.site, b.site) : c_(b.site, a.site);
  }

 private:
  Covariance c_;
};

/// i.i.d. circular complex Gaussian with E|phi|^2 = variance.
inline CircularGaussianField iid_complex_gaussian(double variance = 1.0) {
  return CircularGaussianField([variance](std::uint64_t x, std::uint64_t y) { return x == y ? cplx(variance) : cplx(0.0); });
}

}  // namespace wickbound
