#include "vmic/response.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vmic/errors.hpp"

namespace vmic {

std::string_view to_string(IntegratorMode mode)
{
  return mode == IntegratorMode::ideal ? "ideal" : "lossy";
}

IntegratorMode parse_integrator_mode(std::string_view text)
{
  if (text == "ideal")
    return IntegratorMode::ideal;
  if (text == "lossy")
    return IntegratorMode::lossy;
  throw std::invalid_argument("integrator mode must be 'ideal' or 'lossy', got '" +
                              std::string(text) + "'");
}

std::vector<double> log_frequency_grid(double f_lo, double f_hi,
                                       std::size_t count)
{
  if (!(f_lo > 0.0 && f_hi > f_lo) || count < 2)
    throw RangeError("log grid needs 0 < f_lo < f_hi and at least 2 points");
  std::vector<double> grid(count);
  const double ratio = std::log(f_hi / f_lo);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = f_lo * std::exp(ratio * static_cast<double>(i) /
                              static_cast<double>(count - 1));
  grid.front() = f_lo;
  grid.back() = f_hi;
  return grid;
}

std::vector<double> default_frequency_grid(double fs)
{
  return log_frequency_grid(20.0, 0.5 * fs, 1024);
}

double classical_directivity(double m, double theta)
{
  return m + (1.0 - m) * std::cos(theta);
}

namespace {

// exp(-j 2 pi f dist / c0) / dist. The phase in cycles is formed in
// extended precision and wrapped to one period before the trig calls, so
// long paths at high frequency keep a phase error near one ulp.
Complex propagate(double dist, const MicParams& p, double f)
{
  const long double cycles = static_cast<long double>(f) * dist / p.c0;
  const long double frac = cycles - std::nearbyint(cycles);
  return std::polar(1.0 / dist, -kTwoPi * static_cast<double>(frac));
}

void check_grid(std::span<const double> freqs, const MicParams& p)
{
  double prev = -1.0;
  for (double f : freqs) {
    if (!(f >= 0.0 && f <= 0.5 * p.fs) || !(f > prev)) {
      std::ostringstream os;
      os << "frequency grid must be strictly increasing within [0, fs/2]; got "
         << f << " Hz";
      throw RangeError(os.str());
    }
    prev = f;
  }
}

template <class Kernel>
ComplexResponse tabulate(std::span<const double> freqs, const MicParams& p,
                         Kernel&& kernel)
{
  p.validate();
  check_grid(freqs, p);
  ComplexResponse out;
  out.frequencies.assign(freqs.begin(), freqs.end());
  out.gain.reserve(freqs.size());
  for (double f : freqs)
    out.gain.push_back(kernel(f));
  return out;
}

} // namespace

Complex integrator_gain(double f, const MicParams& p, IntegratorMode mode)
{
  if (mode == IntegratorMode::ideal) {
    if (f == 0.0)
      throw SingularityError("ideal integrator is singular at f = 0");
    return 1.0 / Complex(0.0, kTwoPi * f);
  }
  const Complex zinv = std::polar(1.0, -kTwoPi * f / p.fs);
  return (1.0 + zinv) / ((1.0 - p.g * zinv) * (2.0 * p.fs));
}

Complex omni_gain(const ScenePose& pose, const MicParams& p, double f)
{
  check_validity(pose, p.d);
  return propagate(pose.r, p, f);
}

Complex dipole_gain(const ScenePose& pose, const MicParams& p, double f)
{
  const auto [r1, r2] = checked_capsule_distances(pose, p.d);
  return propagate(r1, p, f) - propagate(r2, p, f);
}

Complex bidi_gain(const ScenePose& pose, const MicParams& p, double f,
                  IntegratorMode mode)
{
  const Complex dip = dipole_gain(pose, p, f);
  return integrator_gain(f, p, mode) * (p.c0 / p.d) * dip;
}

Complex global_gain(const ScenePose& pose, const MicParams& p, double f,
                    IntegratorMode mode)
{
  const Complex omni = omni_gain(pose, p, f);
  if (p.m == 1.0)
    return omni;
  return p.m * omni + (1.0 - p.m) * bidi_gain(pose, p, f, mode);
}

Complex directivity_gain(const ScenePose& pose, const MicParams& p, double f,
                         IntegratorMode mode)
{
  const auto [r1, r2] = checked_capsule_distances(pose, p.d);
  if (p.m == 1.0)
    return Complex(1.0, 0.0);
  const double r = pose.r;
  const double half = 0.5 * p.d;
  const double rdcos = r * p.d * std::cos(pose.theta);
  // r - ri = (r^2 - ri^2) / (r + ri), free of cancellation
  const double lead1 = (rdcos - half * half) / (r + r1);
  const double lead2 = (-rdcos - half * half) / (r + r2);
  const double k = kTwoPi * f / p.c0;
  const Complex comb = std::polar(r / r1, k * lead1) - std::polar(r / r2, k * lead2);
  return p.m + (1.0 - p.m) * integrator_gain(f, p, mode) * (p.c0 / p.d) * comb;
}

ComplexResponse omni_response(const ScenePose& pose, const MicParams& params,
                              std::span<const double> freqs)
{
  return tabulate(freqs, params,
                  [&](double f) { return omni_gain(pose, params, f); });
}

ComplexResponse dipole_response(const ScenePose& pose, const MicParams& params,
                                std::span<const double> freqs)
{
  return tabulate(freqs, params,
                  [&](double f) { return dipole_gain(pose, params, f); });
}

ComplexResponse bidi_response(const ScenePose& pose, const MicParams& params,
                              std::span<const double> freqs,
                              IntegratorMode mode)
{
  return tabulate(freqs, params,
                  [&](double f) { return bidi_gain(pose, params, f, mode); });
}

ComplexResponse global_response(const ScenePose& pose, const MicParams& params,
                                std::span<const double> freqs,
                                IntegratorMode mode)
{
  return tabulate(freqs, params,
                  [&](double f) { return global_gain(pose, params, f, mode); });
}

ComplexResponse directivity_response(const ScenePose& pose,
                                     const MicParams& params,
                                     std::span<const double> freqs,
                                     IntegratorMode mode)
{
  return tabulate(freqs, params, [&](double f) {
    return directivity_gain(pose, params, f, mode);
  });
}

} // namespace vmic
