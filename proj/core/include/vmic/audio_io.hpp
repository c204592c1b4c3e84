#pragma once

// RIFF/WAVE reading and writing. Samples are held as interleaved doubles
// nominally in [-1, 1]; file bit depth only matters at the file boundary.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace vmic {

struct AudioBuffer {
  double fs = 0.0;
  std::size_t channels = 1;
  std::vector<double> samples; // interleaved, frame-major

  std::size_t frames() const { return channels ? samples.size() / channels : 0; }
  double at(std::size_t frame, std::size_t channel) const
  {
    return samples[frame * channels + channel];
  }

  /// Throws StreamError when fs <= 0, channels == 0 or the sample count is
  /// not a multiple of the channel count.
  void validate() const;
};

enum class SampleFormat { pcm16, pcm24, float32 };

/// Parses "16", "24" or "32" (float).
SampleFormat sample_format_from_bits(int bits);

struct WavWriteReport {
  std::size_t clipped = 0; // samples clamped to the integer range
};

/// Reads PCM 16/24-bit or IEEE float 32-bit WAVE. Unknown chunks are
/// skipped. Throws FormatError (naming the chunk) or IoError.
AudioBuffer read_wav(const std::filesystem::path& path);
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

/// Integer formats use round-half-away-from-zero and clamp; every clamped
/// sample is counted in the report.
WavWriteReport write_wav(const AudioBuffer& buffer,
                         const std::filesystem::path& path,
                         SampleFormat format = SampleFormat::pcm16);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer,
                                     SampleFormat format,
                                     WavWriteReport* report = nullptr);

/// 16-bit quantization as applied by write_wav. Sets *clipped when the
/// value had to be clamped.
std::int16_t quantize16(double x, bool* clipped = nullptr) noexcept;
inline double dequantize16(std::int16_t v) noexcept { return v / 32768.0; }

/// Channel average; mono input is returned unchanged.
AudioBuffer to_mono(const AudioBuffer& buffer);

} // namespace vmic
