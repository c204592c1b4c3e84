#pragma once

// Thin RAII layer over FFTW's real-to-complex transform. Plans are created
// under a process-wide lock (FFTW planning is not thread-safe); executing
// a plan on caller-owned buffers is.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace vmic::detail {

class RealFft {
public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return size_; }
  std::size_t bins() const noexcept { return size_ / 2 + 1; }

  /// |X_k|^2 for k = 0..size/2 of `input` zero-padded to size().
  std::vector<double> power(std::span<const double> input) const;

  /// Inverse of a half spectrum (bins() values), unnormalized.
  std::vector<double> inverse(std::span<const std::complex<double>> half) const;

private:
  struct Plans;
  std::size_t size_;
  std::unique_ptr<Plans> plans_;
};

} // namespace vmic::detail
