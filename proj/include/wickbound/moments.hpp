#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "wickbound/site.hpp"

namespace wickbound {

using cplx = std::complex<double>;

/// Source of joint moments E[y^I]. Implementations must return 1 for the
/// empty sequence, be permutation invariant in I, satisfy
/// moment(conj(I)) == conj(moment(I)), and tolerate concurrent const calls.
class MomentProvider {
 public:
  virtual ~MomentProvider() = default;

  virtual cplx moment(std::span<const SiteRef> I) const = 0;

  /// Largest |I| the provider can answer.
  virtual std::size_t max_order() const = 0;
};

/// Providers whose variables have joint exponential moments and a closed-form
/// log moment generating function ln E[exp(sum_j lambda_j y_j)] over real
/// lambda. `variables` lists the distinct sites lambda is indexed by.
class LogMgfProvider {
 public:
  virtual ~LogMgfProvider() = default;
  virtual double log_mgf(std::span<const SiteRef> variables, std::span<const double> lambda) const = 0;
};

}  // namespace wickbound
