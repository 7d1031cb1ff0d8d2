#pragma once

// Discrete nonlinear Schroedinger evolution on a periodic lattice (Z_L)^d,
//   i d/dt psi(x) = sum_y alpha(x - y) psi(y) + lambda |psi(x)|^2 psi(x),
// with a Strang split-step integrator, and Monte Carlo estimation of the
// time correlation f_t(x) = kappa[psi_0(0)*, psi_t(x)] under the harmonic
// (lambda = 0) Gibbs measure.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wickbound/errors.hpp"
#include "wickbound/fft.hpp"
#include "wickbound/fields/ensemble.hpp"
#include "wickbound/fields/gaussian.hpp"

namespace wickbound::dnls {

struct HoppingTerm {
  std::vector<int> offset;
  double amplitude = 0.0;
};

struct DnlsConfig {
  int dimension = 1;
  int side = 32;
  std::vector<HoppingTerm> hopping;  // alpha(x); must satisfy alpha(-x) = alpha(x)
  double lambda = 0.0;
  double beta = 1.0;
  double mu = 1.0;
  double dt = 0.1;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;

  std::size_t volume() const {
    std::size_t v = 1;
    for (int i = 0; i < dimension; ++i) v *= static_cast<std::size_t>(side);
    return v;
  }
};

/// Nearest-neighbour hopping with on-site shift mu:
/// alpha_hat(k) = mu + 2 sum_i (1 - cos 2 pi k_i) >= mu.
inline std::vector<HoppingTerm> nearest_neighbor_hopping(int dimension, double mu) {
  std::vector<HoppingTerm> out;
  out.push_back({std::vector<int>(static_cast<std::size_t>(dimension), 0), mu + 2.0 * dimension});
  for (int i = 0; i < dimension; ++i)
    for (int s : {-1, 1}) {
      std::vector<int> off(static_cast<std::size_t>(dimension), 0);
      off[static_cast<std::size_t>(i)] = s;
      out.push_back({off, -1.0});
    }
  return out;
}

inline DnlsConfig default_config() {
  DnlsConfig c;
  c.hopping = nearest_neighbor_hopping(c.dimension, c.mu);
  return c;
}

/// Row-major multi-index of a flat lattice index.
inline std::vector<int> unflatten(std::size_t index, int dimension, int side) {
  std::vector<int> out(static_cast<std::size_t>(dimension));
  for (int i = dimension - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(side));
    index /= static_cast<std::size_t>(side);
  }
  return out;
}

inline std::size_t flatten(const std::vector<int>& x, int side) {
  std::size_t idx = 0;
  for (int xi : x) idx = idx * static_cast<std::size_t>(side) + static_cast<std::size_t>(((xi % side) + side) % side);
  return idx;
}

/// alpha_hat(k) = sum_x alpha(x) exp(-2 pi i k.x) on the grid k = j / L,
/// in the FFT's flat ordering.
inline std::vector<double> alpha_hat(const DnlsConfig& c) {
  const std::size_t V = c.volume();
  std::vector<double> out(V, 0.0);
  for (std::size_t j = 0; j < V; ++j) {
    const auto kj = unflatten(j, c.dimension, c.side);
    cplx sum = 0.0;
    for (const auto& h : c.hopping) {
      double phase = 0.0;
      for (int i = 0; i < c.dimension; ++i)
        phase += static_cast<double>(kj[static_cast<std::size_t>(i)]) * h.offset[static_cast<std::size_t>(i)] /
                 static_cast<double>(c.side);
      sum += h.amplitude * std::polar(1.0, -2.0 * std::numbers::pi * phase);
    }
    out[j] = sum.real();
  }
  return out;
}

inline void validate(const DnlsConfig& c) {
  if (c.dimension < 1) throw InvalidInput("dimension must be >= 1");
  if (c.side < 1) throw InvalidInput("side length must be >= 1");
  if (!(c.lambda >= 0.0)) throw InvalidInput("coupling lambda must be >= 0");
  if (!(c.beta > 0.0)) throw InvalidInput("inverse temperature beta must be > 0");
  if (!(c.mu > 0.0)) throw InvalidInput("mass shift mu must be > 0");
  if (!(c.dt > 0.0)) throw InvalidInput("time step dt must be > 0");
  if (c.samples < 2) throw InvalidInput("sample count must be >= 2");
  for (const auto& h : c.hopping) {
    if (h.offset.size() != static_cast<std::size_t>(c.dimension)) throw InvalidInput("hopping offset has wrong dimension");
    std::vector<int> neg(h.offset);
    for (auto& v : neg) v = -v;
    double mirrored = 0.0;
    for (const auto& g : c.hopping)
      if (g.offset == neg) mirrored += g.amplitude;
    double own = 0.0;
    for (const auto& g : c.hopping)
      if (g.offset == h.offset) own += g.amplitude;
    if (std::abs(mirrored - own) > 1e-12) throw InvalidInput("hopping kernel must satisfy alpha(-x) = alpha(x)");
  }
  for (double a : alpha_hat(c))
    if (a < -1e-12) throw InvalidInput("hopping kernel has alpha_hat(k) < 0 on the lattice torus");
}

/// Harmonic Gibbs spectral density 1 / (beta (alpha_hat(k) + mu)).
inline std::vector<double> gibbs_spectrum(const DnlsConfig& c) {
  auto a = alpha_hat(c);
  for (auto& v : a) v = 1.0 / (c.beta * (v + c.mu));
  return a;
}

/// c(d) = E[psi(x)* psi(x + d)] of the harmonic Gibbs measure, over flat d.
inline std::vector<cplx> gibbs_covariance(const DnlsConfig& c) {
  const auto S = gibbs_spectrum(c);
  std::vector<cplx> cov(S.begin(), S.end());
  const Fft fft(std::vector<int>(static_cast<std::size_t>(c.dimension), c.side));
  fft.inverse(cov);
  for (auto& v : cov) v /= static_cast<double>(c.volume());
  return cov;
}

/// The harmonic Gibbs law as a moment provider; site id = flat lattice index.
inline CircularGaussianField gibbs_field(const DnlsConfig& c) {
  auto cov = gibbs_covariance(c);
  const int d = c.dimension, L = c.side;
  return CircularGaussianField([cov = std::move(cov), d, L](std::uint64_t x, std::uint64_t y) {
    const auto xs = unflatten(x, d, L), ys = unflatten(y, d, L);
    std::vector<int> diff(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) diff[i] = ys[i] - xs[i];
    return cov[flatten(diff, L)];
  });
}

struct FieldState {
  std::vector<cplx> psi;
  double t = 0.0;

  double norm2() const {
    double s = 0.0;
    for (auto v : psi) s += std::norm(v);
    return s;
  }
};

/// Strang split-step integrator: half nonlinear phase, exact harmonic step
/// in Fourier space, half nonlinear phase. Both sub-flows preserve
/// sum |psi|^2 exactly.
class Evolver {
 public:
  explicit Evolver(const DnlsConfig& c)
      : config_(c), fft_(std::vector<int>(static_cast<std::size_t>(c.dimension), c.side)), alpha_hat_(alpha_hat(c)) {}

  const DnlsConfig& config() const noexcept { return config_; }
  const std::vector<double>& dispersion() const noexcept { return alpha_hat_; }
  const Fft& fft() const noexcept { return fft_; }

  /// Advance to time `until`; (until - t) must be an integer multiple of dt
  /// up to rounding. Negative spans run the integrator backwards.
  void evolve(FieldState& state, double until) const { evolve(state, until, config_.dt); }

  void evolve(FieldState& state, double until, double dt) const {
    const double span = until - state.t;
    const double steps_real = span / dt;
    const long long steps = std::llround(steps_real);
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6)
      throw InvalidInput("time step does not divide the evolution span");
    if (steps == 0) {
      state.t = until;
      return;
    }
    const double h = steps > 0 ? dt : -dt;
    const long long count = std::llabs(steps);
    if (phases_h_ != h) {
      phases_.resize(alpha_hat_.size());
      for (std::size_t k = 0; k < alpha_hat_.size(); ++k) phases_[k] = std::polar(1.0, -h * alpha_hat_[k]);
      phases_h_ = h;
    }
    const bool nonlinear = config_.lambda != 0.0;
    if (nonlinear) nonlinear_phase(state.psi, 0.5 * h);
    for (long long s = 0; s < count; ++s) {
      linear_step(state.psi);
      if (nonlinear) nonlinear_phase(state.psi, s + 1 < count ? h : 0.5 * h);
    }
    state.t = until;
  }

  /// Exact harmonic flow psi_hat -> exp(-i t alpha_hat) psi_hat.
  void harmonic_flow(std::vector<cplx>& psi, double t) const {
    fft_.forward(psi);
    const double inv = 1.0 / static_cast<double>(psi.size());
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] *= std::polar(inv, -t * alpha_hat_[k]);
    fft_.inverse(psi);
  }

  /// sum_k alpha_hat(k) |psi_hat(k)|^2 / V.
  double harmonic_energy(const std::vector<cplx>& psi) const {
    std::vector<cplx> work(psi);
    fft_.forward(work);
    double e = 0.0;
    for (std::size_t k = 0; k < work.size(); ++k) e += alpha_hat_[k] * std::norm(work[k]);
    return e / static_cast<double>(work.size());
  }

 private:
  void nonlinear_phase(std::vector<cplx>& psi, double h) const {
    const double lh = config_.lambda * h;
    for (auto& v : psi) v *= std::polar(1.0, -lh * std::norm(v));
  }

  void linear_step(std::vector<cplx>& psi) const {
    fft_.forward(psi);
    const double inv = 1.0 / static_cast<double>(psi.size());
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] *= phases_[k] * inv;
    fft_.inverse(psi);
  }

  DnlsConfig config_;
  Fft fft_;
  std::vector<double> alpha_hat_;
  mutable std::vector<cplx> phases_;
  mutable double phases_h_ = 0.0;
};

/// One draw from the harmonic Gibbs surrogate: circular complex Gaussian
/// modes with variance 1 / (beta (alpha_hat + mu)), inverse transformed.
/// Sample `index` uses its own RNG stream derived from the seed.
inline FieldState sample_initial_state(const DnlsConfig& c, const std::vector<double>& spectrum, const Fft& fft,
                                       std::size_t index) {
  auto rng = stream_rng(c.seed, index);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  FieldState s;
  s.psi.resize(spectrum.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(spectrum.size()));
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double re = normal(rng), im = normal(rng);
    s.psi[k] = std::sqrt(spectrum[k]) * scale * cplx(re, im);
  }
  fft.inverse(s.psi);
  return s;
}

inline std::vector<FieldState> sample_initial(const DnlsConfig& c) {
  validate(c);
  const auto S = gibbs_spectrum(c);
  const Fft fft(std::vector<int>(static_cast<std::size_t>(c.dimension), c.side));
  std::vector<FieldState> out;
  out.reserve(c.samples);
  for (std::size_t i = 0; i < c.samples; ++i) out.push_back(sample_initial_state(c, S, fft, i));
  return out;
}

/// Monte Carlo estimates on a time grid. f[t][x] estimates
/// kappa[psi_0(0)*, psi_t(x)], g[t][x] estimates
/// E[:psi_0(0)*: psi_t(x)* psi_t(x) psi_t(x)]. Both average over all base
/// points z by translation invariance before averaging over trajectories.
struct CorrelationSeries {
  DnlsConfig config;
  std::vector<double> times;
  std::vector<std::vector<cplx>> f, g;
  std::vector<std::vector<double>> f_se, g_se;
  /// Per-x standard error of f_t - exp(-i t alpha) f_0 from the paired
  /// per-trajectory differences.
  std::vector<std::vector<double>> paired_se;
  std::vector<double> norm_drift;  // max over trajectories of |sum|psi_t|^2 - sum|psi_0|^2|
};

namespace detail {

struct RunningMoments {
  std::vector<cplx> sum;
  std::vector<double> sumsq;
  explicit RunningMoments(std::size_t n = 0) : sum(n, 0.0), sumsq(n, 0.0) {}
  void add(const std::vector<cplx>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum[i] += v[i];
      sumsq[i] += std::norm(v[i]);
    }
  }
  cplx mean(std::size_t i, double n) const { return sum[i] / n; }
  double se(std::size_t i, double n) const {
    const double var = std::max(0.0, (sumsq[i] - n * std::norm(sum[i] / n)) / (n - 1.0));
    return std::sqrt(var / n);
  }
};

/// (1/V) sum_z conj(a(z)) b(z + x), from the Fourier transforms of a and b.
inline void translation_average(const Fft& fft, const std::vector<cplx>& a_hat, std::vector<cplx> b,
                                std::vector<cplx>& out) {
  fft.forward(b);
  const double V = static_cast<double>(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = std::conj(a_hat[k]) * b[k] / (V * V);
  fft.inverse(b);
  out = std::move(b);
}

}  // namespace detail

inline CorrelationSeries correlation_series(const DnlsConfig& c, std::vector<double> times) {
  validate(c);
  if (times.empty()) throw InvalidInput("time grid is empty");
  std::sort(times.begin(), times.end());
  if (times.front() < 0.0) throw InvalidInput("time grid must be nonnegative");
  const Evolver ev(c);
  const auto S = gibbs_spectrum(c);
  const std::size_t V = c.volume(), T = times.size();
  const double N = static_cast<double>(c.samples);

  std::vector<detail::RunningMoments> fa(T, detail::RunningMoments(V)), ga(T, detail::RunningMoments(V)),
      da(T, detail::RunningMoments(V));
  cplx mean0 = 0.0;
  std::vector<cplx> mean_t(T, 0.0), mean_h(T, 0.0);
  std::vector<double> drift(T, 0.0);

  std::vector<cplx> psi0_hat, a, b, cubic, free_hat, diff(V);
  for (std::size_t s = 0; s < c.samples; ++s) {
    FieldState state = sample_initial_state(c, S, ev.fft(), s);
    const double n0 = state.norm2();
    psi0_hat = state.psi;
    ev.fft().forward(psi0_hat);
    for (const auto& z : state.psi) mean0 += z;
    std::vector<cplx> f0;
    for (std::size_t ti = 0; ti < T; ++ti) {
      ev.evolve(state, times[ti]);
      drift[ti] = std::max(drift[ti], std::abs(state.norm2() - n0));
      detail::translation_average(ev.fft(), psi0_hat, state.psi, a);
      cubic = state.psi;
      for (auto& v : cubic) v *= std::norm(v);
      detail::translation_average(ev.fft(), psi0_hat, cubic, b);
      for (const auto& z : state.psi) mean_t[ti] += z;
      for (const auto& z : cubic) mean_h[ti] += z;
      fa[ti].add(a);
      ga[ti].add(b);
      if (ti == 0) f0 = a;
      // Paired difference against the harmonic transport of this trajectory's f_0.
      free_hat = f0;
      ev.harmonic_flow(free_hat, times[ti] - times[0]);
      for (std::size_t x = 0; x < V; ++x) diff[x] = a[x] - free_hat[x];
      da[ti].add(diff);
    }
  }

  CorrelationSeries out;
  out.config = c;
  out.times = times;
  out.norm_drift = drift;
  const double NV = N * static_cast<double>(V);
  const cplx m0 = mean0 / NV;
  for (std::size_t ti = 0; ti < T; ++ti) {
    const cplx mt = mean_t[ti] / NV, mh = mean_h[ti] / NV;
    std::vector<cplx> f(V), g(V);
    std::vector<double> fse(V), gse(V), dse(V);
    for (std::size_t x = 0; x < V; ++x) {
      f[x] = fa[ti].mean(x, N) - std::conj(m0) * mt;
      g[x] = ga[ti].mean(x, N) - std::conj(m0) * mh;
      fse[x] = fa[ti].se(x, N);
      gse[x] = ga[ti].se(x, N);
      dse[x] = da[ti].se(x, N);
    }
    out.f.push_back(std::move(f));
    out.g.push_back(std::move(g));
    out.f_se.push_back(std::move(fse));
    out.g_se.push_back(std::move(gse));
    out.paired_se.push_back(std::move(dse));
  }
  return out;
}

struct ResidualRow {
  double t = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  /// l2 norm of the per-x Monte Carlo standard errors of the f_t estimate.
  double std_error = 0.0;
  /// l2 norm of the standard errors of the paired per-trajectory residual.
  double paired_std_error = 0.0;
};

/// residual(t) = || f_hat_t - exp(-i t alpha_hat) f_hat_0 ||_{L^2(T^d)},
/// evaluated on the DFT grid: (1/V) sum_k |.|^2 under the square root.
inline std::vector<ResidualRow> duhamel_residual(const CorrelationSeries& series) {
  const Evolver ev(series.config);
  const auto& ah = ev.dispersion();
  const std::size_t V = series.config.volume();
  std::vector<cplx> f0_hat = series.f.front();
  ev.fft().forward(f0_hat);
  std::vector<ResidualRow> rows;
  for (std::size_t ti = 0; ti < series.times.size(); ++ti) {
    const double t = series.times[ti] - series.times.front();
    std::vector<cplx> ft_hat = series.f[ti];
    ev.fft().forward(ft_hat);
    double acc = 0.0;
    for (std::size_t k = 0; k < V; ++k) acc += std::norm(ft_hat[k] - std::polar(1.0, -t * ah[k]) * f0_hat[k]);
    double se = 0.0, pse = 0.0;
    for (std::size_t x = 0; x < V; ++x) {
      se += series.f_se[ti][x] * series.f_se[ti][x];
      pse += series.paired_se[ti][x] * series.paired_se[ti][x];
    }
    rows.push_back({series.times[ti], series.config.lambda, std::sqrt(acc / static_cast<double>(V)), std::sqrt(se),
                    std::sqrt(pse)});
  }
  return rows;
}

/// Least-squares C in residual ~ C lambda t through the origin, over rows
/// with 0 < t <= t_max. Returns 0 when lambda = 0.
inline double fit_duhamel_constant(const std::vector<ResidualRow>& rows, double t_max) {
  double num = 0.0, den = 0.0;
  for (const auto& r : rows) {
    if (r.t <= 0.0 || r.t > t_max * (1.0 + 1e-12)) continue;
    const double s = r.lambda * r.t;
    num += r.residual * s;
    den += s * s;
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Evenly spaced grid {0, t_max/K, ..., t_max} snapped to multiples of dt.
inline std::vector<double> time_grid(double t_max, std::size_t K, double dt) {
  std::vector<double> out;
  for (std::size_t j = 0; j <= K; ++j) {
    const double t = t_max * static_cast<double>(j) / static_cast<double>(K);
    out.push_back(std::round(t / dt) * dt);
  }
  return out;
}

struct StudyPlan {
  std::vector<double> lambdas{0.0, 0.01, 0.02, 0.05};
  double zero_horizon = 50.0;  // time window for the lambda = 0 run
  double zero_step = 2.5;
  std::size_t points = 20;     // grid points on (0, 1/lambda] for lambda > 0
  double agreement = 0.25;     // max |C_lambda / mean C - 1|
  double sigma_multiple = 3.0;
};

struct StudyFit {
  double lambda = 0.0;
  double constant = 0.0;
};

struct DuhamelStudy {
  std::vector<ResidualRow> rows;
  std::vector<StudyFit> fits;
  /// max over lambda = 0 rows of residual / std_error.
  double zero_lambda_sigma = 0.0;
  bool zero_lambda_ok = true;
  double spread = 0.0;  // max |C_lambda / mean C - 1| over lambda > 0
  bool constants_agree = true;
  double max_norm_drift = 0.0;
};

/// Runs correlation_series for every lambda of the plan on the same seed
/// (common random numbers) and fits residual ~ C lambda t on t <= 1/lambda.
inline DuhamelStudy duhamel_study(const DnlsConfig& base, const StudyPlan& plan) {
  DuhamelStudy out;
  std::vector<double> constants;
  for (double lambda : plan.lambdas) {
    DnlsConfig c = base;
    c.lambda = lambda;
    std::vector<double> times;
    if (lambda == 0.0) {
      const auto steps = static_cast<std::size_t>(std::llround(plan.zero_horizon / plan.zero_step));
      times = time_grid(plan.zero_horizon, steps, c.dt);
    } else {
      times = time_grid(1.0 / lambda, plan.points, c.dt);
    }
    const auto series = correlation_series(c, times);
    for (double d : series.norm_drift) out.max_norm_drift = std::max(out.max_norm_drift, d);
    const auto rows = duhamel_residual(series);
    if (lambda == 0.0) {
      for (const auto& r : rows) {
        const double sigma = r.residual == 0.0 ? 0.0 : r.residual / r.std_error;
        out.zero_lambda_sigma = std::max(out.zero_lambda_sigma, sigma);
        if (!(r.residual <= plan.sigma_multiple * r.std_error)) out.zero_lambda_ok = false;
      }
    } else {
      const double C = fit_duhamel_constant(rows, 1.0 / lambda);
      out.fits.push_back({lambda, C});
      constants.push_back(C);
    }
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  if (!constants.empty()) {
    double mean = 0.0;
    for (double C : constants) mean += C;
    mean /= static_cast<double>(constants.size());
    for (double C : constants) out.spread = std::max(out.spread, std::abs(C / mean - 1.0));
    out.constants_agree = std::isfinite(out.spread) && out.spread <= plan.agreement;
  }
  return out;
}

}  // namespace wickbound::dnls
