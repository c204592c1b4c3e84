#pragma once

// Shared helpers for the test binaries.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vmic/audio_io.hpp"
#include "vmic/render.hpp"

namespace vmic::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline double rms(std::span<const double> x)
{
  double acc = 0.0;
  for (double v : x)
    acc += v * v;
  return x.empty() ? 0.0 : std::sqrt(acc / double(x.size()));
}

inline double db(double ratio)
{
  return 20.0 * std::log10(ratio);
}

/// Least-squares fit of a cos(wn) + b sin(wn) over x[first, last); returns
/// the complex amplitude A with x[n] ~ Re(A e^{jwn}).
std::complex<double> fit_sine(std::span<const double> x, double f, double fs,
                              std::size_t first, std::size_t last);

/// Mono AudioBuffer.
AudioBuffer mono(std::vector<double> samples, double fs = 44100.0);

/// Renders `input` through a single-mic scene with the source placed at
/// (r, theta) in the microphone's frame.
std::vector<double> render_pose(const MicParams& params, double r, double theta,
                                std::span<const double> input,
                                EngineOptions options = {});

/// Channel `k` of an interleaved buffer.
std::vector<double> channel(std::span<const double> interleaved,
                            std::size_t channels, std::size_t k);

} // namespace vmic::test
