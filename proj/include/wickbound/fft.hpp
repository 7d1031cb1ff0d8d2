#pragma once

#include <complex>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace wickbound {

/// Unnormalized complex DFT on a d-dimensional periodic grid. Forward uses
/// exp(-2 pi i k.x / L), inverse exp(+2 pi i k.x / L).
class Fft {
 public:
  explicit Fft(std::vector<int> dims) : dims_(std::move(dims)) {
    size_ = 1;
    for (int d : dims_) size_ *= static_cast<std::size_t>(d);
    std::vector<std::complex<double>> scratch(size_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int rank = static_cast<int>(dims_.size());
    // FFTW planning is not thread-safe.
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft(rank, dims_.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    inverse_ = fftw_plan_dft(rank, dims_.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!forward_ || !inverse_) throw std::runtime_error("FFTW planning failed");
  }

  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  ~Fft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  std::size_t size() const noexcept { return size_; }
  const std::vector<int>& dims() const noexcept { return dims_; }

  void forward(std::span<std::complex<double>> data) const { run(forward_, data); }
  void inverse(std::span<std::complex<double>> data) const { run(inverse_, data); }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  void run(fftw_plan plan, std::span<std::complex<double>> data) const {
    if (data.size() != size_) throw std::invalid_argument("FFT buffer size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
  }

  std::vector<int> dims_;
  std::size_t size_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace wickbound
