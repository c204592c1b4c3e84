#pragma once

// Measurement artifacts built on the model: monochromatic and subband
// directivity diagrams, limit-case deviation maps, proximity-effect curves
// and time-varying subband energy balances.
//
// Subband analysis uses a third-octave bank realized by partitioning FFT
// bins between band edges (rectangular, no window), so band energies add
// up to the frame energy minus whatever falls outside the bank.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vmic/geometry.hpp"
#include "vmic/render.hpp"
#include "vmic/response.hpp"

namespace vmic {

inline constexpr std::size_t kDefaultAngleCount = 72;

/// `count` equally spaced angles over [0, 2*pi), starting at 0.
std::vector<double> angle_grid(std::size_t count = kDefaultAngleCount);

enum class PatternKind { monochromatic, subband };

/// |H_dir| over angles x frequencies (or bands) x distances.
struct PatternTable {
  PatternKind kind = PatternKind::monochromatic;
  std::vector<double> angles;       // rad
  std::vector<double> frequencies;  // Hz; band centers for subband tables
  std::vector<std::string> band_labels; // subband tables only
  std::vector<double> distances;    // m
  std::vector<double> magnitude;    // [distance][frequency][angle]
  IntegratorMode mode = IntegratorMode::lossy;
  MicParams params;

  std::size_t index(std::size_t angle, std::size_t freq, std::size_t dist) const
  {
    return (dist * frequencies.size() + freq) * angles.size() + angle;
  }
  double at(std::size_t angle, std::size_t freq = 0, std::size_t dist = 0) const
  {
    return magnitude[index(angle, freq, dist)];
  }
};

/// Contiguous analysis bands.
class BandSet {
public:
  BandSet() = default;
  /// edges.size() == labels.size() + 1; edges strictly increasing within
  /// (0, fs/2]. Throws RangeError otherwise.
  BandSet(std::vector<double> edges, std::vector<std::string> labels, double fs);

  /// Base-2 third-octave bands 1000 * 2^(k/3) between the nominal centers
  /// `lo_center` and `hi_center` (defaults 31.5 Hz .. 16 kHz), labelled with
  /// their nominal names. Bands reaching past fs/2 are dropped.
  static BandSet third_octave(double fs, double lo_center = 31.5,
                              double hi_center = 16000.0);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  double lower(std::size_t band) const { return edges_.at(band); }
  double upper(std::size_t band) const { return edges_.at(band + 1); }
  /// Geometric center.
  double center(std::size_t band) const;
  /// Band containing f, or size() when outside the bank.
  std::size_t find(double f) const;

private:
  std::vector<double> edges_;
  std::vector<std::string> labels_;
};

/// Per-band mean-square energies from the power spectrum |X_k|^2
/// (k = 0..fft_size/2) of `samples` real samples zero-padded to fft_size.
/// Bin k belongs to the band with lower <= k fs / fft_size < upper.
std::vector<double> band_energies(std::span<const double> power,
                                  std::size_t fft_size, std::size_t samples,
                                  double fs, const BandSet& bands);

/// |H_dir(theta)| at one frequency and distance. Throws RangeError unless
/// 0 < f <= fs/2, ValidityError when r < d/2.
PatternTable monochromatic_pattern(const MicParams& params, double f, double r,
                                   std::span<const double> angles,
                                   IntegratorMode mode);

/// max over angles of ||H_dir| - |m + (1 - m) cos(theta)|| per (f, r).
struct DeviationMap {
  std::vector<double> frequencies;
  std::vector<double> distances;
  std::vector<double> deviation; // [frequency][distance]
  IntegratorMode mode = IntegratorMode::ideal;
  MicParams params;

  double at(std::size_t freq, std::size_t dist) const
  {
    return deviation[freq * distances.size() + dist];
  }
};

DeviationMap limit_case_deviation(const MicParams& params,
                                  std::span<const double> frequencies,
                                  std::span<const double> distances,
                                  std::span<const double> angles,
                                  IntegratorMode mode = IntegratorMode::ideal);

struct SubbandOptions {
  EngineOptions engine;
  std::size_t workers = 1; // angles are rendered in parallel when > 1
  /// Bands whose reference (m = 1) energy falls below this fraction of the
  /// total are treated as silent.
  double silence_floor = 1e-10;
};

/// Renders `stimulus` through the engine for every angle and reports, per
/// band, the RMS of the directional render over the RMS of the omni (m = 1)
/// render at the same distance: an energy-domain |H_dir| per band. Throws
/// BandSilenceError when the stimulus has no energy in some band.
PatternTable subband_pattern(std::span<const double> stimulus,
                             const MicParams& params,
                             std::span<const double> angles, double r,
                             const BandSet& bands,
                             const SubbandOptions& options = {});

/// Low-frequency boost relative to a reference frequency, per distance,
/// normalized to 0 dB at the largest distance.
struct ProximityCurve {
  std::vector<double> distances;
  std::vector<double> boost_db;
  double theta = 0.0;
  double f_low = 0.0;
  double f_ref = 0.0;
  IntegratorMode mode = IntegratorMode::lossy;
  MicParams params;
};

/// Throws RangeError unless f_low < f_ref and the grid is non-empty;
/// ValidityError for distances below d/2.
ProximityCurve proximity_curve(const MicParams& params, double theta,
                               double f_low, double f_ref,
                               std::span<const double> distances,
                               IntegratorMode mode = IntegratorMode::lossy);

/// Frame-by-frame mean-square energy per band.
struct EnergyBalance {
  double fs = 0.0;
  double frame_seconds = 0.0;
  BandSet bands;
  std::vector<double> total;               // per frame
  std::vector<std::vector<double>> energy; // [frame][band]

  std::size_t frames() const noexcept { return total.size(); }
};

/// Throws RangeError for frames shorter than 10 ms and StreamError for an
/// empty signal. The final partial frame is kept; its energies are
/// normalized by the samples it actually holds.
EnergyBalance energy_balance(std::span<const double> signal, double fs,
                             const BandSet& bands, double frame_ms);

// Stimuli -----------------------------------------------------------------

/// Gaussian white noise with the given RMS, reproducible from `seed`.
std::vector<double> white_noise(std::size_t samples, double rms,
                                std::uint64_t seed);

/// Pink (1/f power) noise shaped in the frequency domain, zero mean, scaled
/// to the given RMS. Reproducible from `seed`.
std::vector<double> pink_noise(std::size_t samples, double rms,
                               std::uint64_t seed);

std::vector<double> sine_tone(std::size_t samples, double f, double fs,
                              double amplitude = 1.0);

} // namespace vmic
