#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace vmic::detail {

namespace {

std::mutex& planner_mutex()
{
  static std::mutex mu;
  return mu;
}

template <class T>
struct FftwDeleter {
  void operator()(T* p) const noexcept { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t n)
{
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (!p)
    throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

} // namespace

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

RealFft::RealFft(std::size_t size) : size_(size), plans_(std::make_unique<Plans>())
{
  if (size == 0)
    throw std::invalid_argument("FFT size must be > 0");
  auto in = fftw_alloc<double>(size_);
  auto out = fftw_alloc<fftw_complex>(bins());
  const int n = static_cast<int>(size_);
  std::lock_guard lock(planner_mutex());
  plans_->forward = fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft_c2r_1d(n, out.get(), in.get(), FFTW_ESTIMATE);
  if (!plans_->forward || !plans_->backward)
    throw std::runtime_error("FFTW planning failed");
}

RealFft::~RealFft()
{
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->backward);
}

std::vector<double> RealFft::power(std::span<const double> input) const
{
  auto in = fftw_alloc<double>(size_);
  auto out = fftw_alloc<fftw_complex>(bins());
  const std::size_t n = std::min(input.size(), size_);
  std::copy_n(input.begin(), n, in.get());
  std::fill(in.get() + n, in.get() + size_, 0.0);
  fftw_execute_dft_r2c(plans_->forward, in.get(), out.get());
  std::vector<double> p(bins());
  for (std::size_t k = 0; k < p.size(); ++k)
    p[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  return p;
}

std::vector<double> RealFft::inverse(std::span<const std::complex<double>> half) const
{
  if (half.size() != bins())
    throw std::invalid_argument("half spectrum length must be size/2 + 1");
  auto in = fftw_alloc<fftw_complex>(bins());
  auto out = fftw_alloc<double>(size_);
  for (std::size_t k = 0; k < half.size(); ++k) {
    in[k][0] = half[k].real();
    in[k][1] = half[k].imag();
  }
  // c2r destroys its input; the buffer is ours
  fftw_execute_dft_c2r(plans_->backward, in.get(), out.get());
  return std::vector<double>(out.get(), out.get() + size_);
}

} // namespace vmic::detail
