#include "vmic/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <sstream>
#include <string>

#include "vmic/errors.hpp"

namespace vmic {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off)
{
  return std::uint32_t(b[off]) | std::uint32_t(b[off + 1]) << 8 |
         std::uint32_t(b[off + 2]) << 16 | std::uint32_t(b[off + 3]) << 24;
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off)
{
  return std::uint16_t(b[off] | b[off + 1] << 8);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t off, const char* tag)
{
  return std::memcmp(b.data() + off, tag, 4) == 0;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i)
    out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag)
{
  out.insert(out.end(), tag, tag + 4);
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::uint16_t block_align = 0;
};

FmtChunk parse_fmt(std::span<const std::uint8_t> body)
{
  if (body.size() < 16)
    throw FormatError("fmt ", "fmt chunk shorter than 16 bytes");
  FmtChunk fmt;
  fmt.format = read_u16(body, 0);
  fmt.channels = read_u16(body, 2);
  fmt.rate = read_u32(body, 4);
  fmt.block_align = read_u16(body, 12);
  fmt.bits = read_u16(body, 14);
  if (fmt.format == kFormatExtensible) {
    if (body.size() < 40)
      throw FormatError("fmt ", "WAVE_FORMAT_EXTENSIBLE chunk too short");
    // first two bytes of the sub-format GUID carry the actual format tag
    fmt.format = read_u16(body, 24);
  }
  if (fmt.channels == 0)
    throw FormatError("fmt ", "channel count is zero");
  if (fmt.rate == 0)
    throw FormatError("fmt ", "sampling rate is zero");
  const bool ok = (fmt.format == kFormatPcm && (fmt.bits == 16 || fmt.bits == 24)) ||
                  (fmt.format == kFormatFloat && fmt.bits == 32);
  if (!ok) {
    std::ostringstream os;
    os << "unsupported codec (format tag " << fmt.format << ", " << fmt.bits
       << " bits); expected PCM 16/24-bit or IEEE float 32-bit";
    throw FormatError("fmt ", os.str());
  }
  if (fmt.block_align != fmt.channels * (fmt.bits / 8))
    throw FormatError("fmt ", "block alignment inconsistent with channels/bits");
  return fmt;
}

double decode_sample(const std::uint8_t* p, const FmtChunk& fmt)
{
  switch (fmt.bits) {
  case 16:
    return dequantize16(std::int16_t(p[0] | p[1] << 8));
  case 24: {
    std::int32_t v = std::int32_t(p[0]) | std::int32_t(p[1]) << 8 |
                     std::int32_t(p[2]) << 16;
    if (v & 0x800000)
      v -= 0x1000000;
    return v / 8388608.0;
  }
  default: {
    float f;
    std::memcpy(&f, p, 4);
    return f;
  }
  }
}

// Round half away from zero, then clamp to [lo, hi].
double quantize_scaled(double x, double scale, double lo, double hi,
                       bool* clipped) noexcept
{
  double v = std::round(x * scale);
  bool clip = false;
  if (!(v >= lo)) { // NaN lands here too
    v = lo;
    clip = true;
  } else if (v > hi) {
    v = hi;
    clip = true;
  }
  if (clipped)
    *clipped = clip;
  return v;
}

std::int32_t quantize24(double x, bool* clipped) noexcept
{
  return std::int32_t(quantize_scaled(x, 8388608.0, -8388608.0, 8388607.0, clipped));
}

} // namespace

void AudioBuffer::validate() const
{
  if (!(fs > 0.0))
    throw StreamError("audio buffer sampling rate must be > 0");
  if (channels == 0)
    throw StreamError("audio buffer needs at least one channel");
  if (samples.size() % channels != 0)
    throw StreamError("sample count is not a multiple of the channel count");
}

SampleFormat sample_format_from_bits(int bits)
{
  switch (bits) {
  case 16: return SampleFormat::pcm16;
  case 24: return SampleFormat::pcm24;
  case 32: return SampleFormat::float32;
  default: throw std::invalid_argument("bit depth must be 16, 24 or 32");
  }
}

std::int16_t quantize16(double x, bool* clipped) noexcept
{
  return std::int16_t(quantize_scaled(x, 32768.0, -32768.0, 32767.0, clipped));
}

AudioBuffer decode_wav(std::span<const std::uint8_t> b)
{
  if (b.size() < 12 || !tag_is(b, 0, "RIFF"))
    throw FormatError("RIFF", "not a RIFF file (missing 'RIFF' header)");
  if (!tag_is(b, 8, "WAVE"))
    throw FormatError("WAVE", "RIFF form type is not 'WAVE'");

  std::optional<FmtChunk> fmt;
  std::span<const std::uint8_t> data;
  bool have_data = false;
  std::size_t off = 12;
  while (off + 8 <= b.size()) {
    const std::uint32_t size = read_u32(b, off + 4);
    const std::size_t body = off + 8;
    const std::string id(reinterpret_cast<const char*>(b.data() + off), 4);
    if (id == "fmt ") {
      if (body + size > b.size())
        throw FormatError("fmt ", "fmt chunk truncated");
      fmt = parse_fmt(b.subspan(body, size));
    } else if (id == "data") {
      if (!fmt)
        throw FormatError("data", "data chunk precedes fmt chunk");
      if (body + size > b.size())
        throw FormatError("data", "data chunk truncated");
      data = b.subspan(body, size);
      have_data = true;
      break;
    }
    off = body + size + (size & 1u); // chunks are word aligned
  }
  if (!fmt)
    throw FormatError("fmt ", "missing fmt chunk");
  if (!have_data)
    throw FormatError("data", "missing data chunk");
  if (data.size() % fmt->block_align != 0)
    throw FormatError("data", "data chunk size is not a whole number of frames");

  AudioBuffer out;
  out.fs = fmt->rate;
  out.channels = fmt->channels;
  const std::size_t width = fmt->bits / 8;
  out.samples.resize(data.size() / width);
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = decode_sample(data.data() + i * width, *fmt);
  return out;
}

AudioBuffer read_wav(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad())
    throw IoError("read failure on '" + path.string() + "'");
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer,
                                     SampleFormat format,
                                     WavWriteReport* report)
{
  buffer.validate();
  const std::uint16_t bits = format == SampleFormat::pcm16   ? 16
                             : format == SampleFormat::pcm24 ? 24
                                                             : 32;
  const std::uint16_t tag = format == SampleFormat::float32 ? kFormatFloat
                                                            : kFormatPcm;
  const std::uint16_t channels = static_cast<std::uint16_t>(buffer.channels);
  const std::uint16_t align = channels * (bits / 8);
  const auto rate = static_cast<std::uint32_t>(std::lround(buffer.fs));
  const std::size_t data_bytes = buffer.samples.size() * (bits / 8);
  if (data_bytes > 0xFFFFFFFFu - 36)
    throw IoError("audio too long for a RIFF/WAVE file");

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes + 1);
  put_tag(out, "RIFF");
  put_u32(out, std::uint32_t(36 + data_bytes + (data_bytes & 1u)));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, tag);
  put_u16(out, channels);
  put_u32(out, rate);
  put_u32(out, rate * align);
  put_u16(out, align);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, std::uint32_t(data_bytes));

  std::size_t clipped = 0;
  for (double x : buffer.samples) {
    bool clip = false;
    switch (format) {
    case SampleFormat::pcm16:
      put_u16(out, std::uint16_t(quantize16(x, &clip)));
      break;
    case SampleFormat::pcm24: {
      const auto v = std::uint32_t(quantize24(x, &clip));
      out.push_back(std::uint8_t(v));
      out.push_back(std::uint8_t(v >> 8));
      out.push_back(std::uint8_t(v >> 16));
      break;
    }
    case SampleFormat::float32: {
      const float f = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
      break;
    }
    }
    clipped += clip;
  }
  if (data_bytes & 1u)
    out.push_back(0);
  if (report)
    report->clipped = clipped;
  return out;
}

WavWriteReport write_wav(const AudioBuffer& buffer,
                         const std::filesystem::path& path,
                         SampleFormat format)
{
  WavWriteReport report;
  const auto bytes = encode_wav(buffer, format, &report);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("write failure on '" + path.string() + "'");
  return report;
}

AudioBuffer to_mono(const AudioBuffer& buffer)
{
  if (buffer.channels == 1)
    return buffer;
  AudioBuffer mono;
  mono.fs = buffer.fs;
  mono.channels = 1;
  const std::size_t frames = buffer.frames();
  mono.samples.resize(frames);
  const double scale = 1.0 / static_cast<double>(buffer.channels);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < buffer.channels; ++c)
      acc += buffer.at(i, c);
    mono.samples[i] = acc * scale;
  }
  return mono;
}

} // namespace vmic
