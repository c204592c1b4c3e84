#pragma once

// Frequency-domain transfer functions of the microphone model, evaluated on
// the unit circle z = exp(j 2 pi f / fs). Fractional delays are exact here;
// the time-domain engine approximates them by interpolation.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "vmic/geometry.hpp"

namespace vmic {

using Complex = std::complex<double>;

enum class IntegratorMode {
  ideal, // 1/(j 2 pi f), analysis only
  lossy  // bilinear with loss g, what the engine runs
};

std::string_view to_string(IntegratorMode mode);
/// Accepts "ideal" / "lossy"; throws std::invalid_argument otherwise.
IntegratorMode parse_integrator_mode(std::string_view text);

struct ComplexResponse {
  std::vector<double> frequencies; // Hz
  std::vector<Complex> gain;
};

/// `count` log-spaced points from f_lo to f_hi inclusive.
std::vector<double> log_frequency_grid(double f_lo, double f_hi,
                                       std::size_t count = 1024);

/// Default analysis grid: 1024 log-spaced points in [20 Hz, fs/2].
std::vector<double> default_frequency_grid(double fs);

/// Classical directivity function m + (1 - m) cos(theta).
double classical_directivity(double m, double theta);

// Single-frequency kernels. All throw ValidityError for poses outside the
// validity domain; the ideal integrator throws SingularityError at f = 0.
Complex integrator_gain(double f, const MicParams& params, IntegratorMode mode);
Complex omni_gain(const ScenePose& pose, const MicParams& params, double f);
Complex dipole_gain(const ScenePose& pose, const MicParams& params, double f);
Complex bidi_gain(const ScenePose& pose, const MicParams& params, double f,
                  IntegratorMode mode);
Complex global_gain(const ScenePose& pose, const MicParams& params, double f,
                    IntegratorMode mode);
Complex directivity_gain(const ScenePose& pose, const MicParams& params,
                         double f, IntegratorMode mode);

// Grid forms. Grids must be strictly increasing within [0, fs/2]
// (RangeError otherwise).
ComplexResponse omni_response(const ScenePose& pose, const MicParams& params,
                              std::span<const double> freqs);
ComplexResponse dipole_response(const ScenePose& pose, const MicParams& params,
                                std::span<const double> freqs);
ComplexResponse bidi_response(const ScenePose& pose, const MicParams& params,
                              std::span<const double> freqs,
                              IntegratorMode mode);
ComplexResponse global_response(const ScenePose& pose, const MicParams& params,
                                std::span<const double> freqs,
                                IntegratorMode mode);
/// Global response divided by the omni response. Computed from the path
/// length differences r - r1, r - r2 directly, so the non-causal advances
/// z^(D0 - Di) are well defined; this is never realized as a time-domain
/// filter.
ComplexResponse directivity_response(const ScenePose& pose,
                                     const MicParams& params,
                                     std::span<const double> freqs,
                                     IntegratorMode mode);

} // namespace vmic
