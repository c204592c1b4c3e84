#include "support.hpp"

#include <atomic>
#include <unistd.h>

namespace vmic::test {

TempDir::TempDir()
{
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("vmic-test-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir()
{
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::complex<double> fit_sine(std::span<const double> x, double f, double fs,
                              std::size_t first, std::size_t last)
{
  // Normal equations for [cos, sin] regressors.
  double cc = 0, ss = 0, cs = 0, xc = 0, xs = 0;
  const double w = 2.0 * M_PI * f / fs;
  for (std::size_t n = first; n < last; ++n) {
    const double c = std::cos(w * double(n));
    const double s = std::sin(w * double(n));
    cc += c * c;
    ss += s * s;
    cs += c * s;
    xc += x[n] * c;
    xs += x[n] * s;
  }
  const double det = cc * ss - cs * cs;
  const double a = (xc * ss - xs * cs) / det;
  const double b = (xs * cc - xc * cs) / det;
  // a cos + b sin = Re((a - jb) e^{jwn})
  return {a, -b};
}

AudioBuffer mono(std::vector<double> samples, double fs)
{
  AudioBuffer b;
  b.fs = fs;
  b.channels = 1;
  b.samples = std::move(samples);
  return b;
}

std::vector<double> render_pose(const MicParams& params, double r, double theta,
                                std::span<const double> input,
                                EngineOptions options)
{
  MicSetup mic{"test", MicPlacement{}, params};
  Scene scene(params.fs, {mic}, {r * std::cos(theta), r * std::sin(theta)}, options);
  std::vector<double> out(input.size());
  const std::size_t block = options.block_size;
  for (std::size_t i = 0; i < input.size(); i += block) {
    const std::size_t n = std::min(block, input.size() - i);
    scene.render_block(input.subspan(i, n), std::span(out).subspan(i, n));
  }
  return out;
}

std::vector<double> channel(std::span<const double> interleaved,
                            std::size_t channels, std::size_t k)
{
  std::vector<double> out;
  out.reserve(interleaved.size() / channels);
  for (std::size_t i = k; i < interleaved.size(); i += channels)
    out.push_back(interleaved[i]);
  return out;
}

} // namespace vmic::test
