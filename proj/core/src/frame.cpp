#include "vmic/frame.hpp"

#include <bit>
#include <cstring>

#include "vmic/errors.hpp"

namespace vmic {

static_assert(std::endian::native == std::endian::little,
              "frame encoding assumes a little-endian host");

namespace {

template <class T>
void put(std::string& out, std::size_t at, T v)
{
  std::memcpy(out.data() + at, &v, sizeof v);
}

template <class T>
T get(std::string_view in, std::size_t at)
{
  T v;
  std::memcpy(&v, in.data() + at, sizeof v);
  return v;
}

std::size_t payload_bytes(std::uint16_t channels, std::uint32_t frames)
{
  return std::size_t(channels) * frames * sizeof(float);
}

FrameHeader decode_header(std::string_view bytes)
{
  if (bytes.size() < kFrameHeaderSize)
    throw FormatError("frame", "frame shorter than its header");
  if (std::memcmp(bytes.data(), kFrameMagic, 4) != 0)
    throw FormatError("frame", "bad frame magic");
  FrameHeader h;
  h.version = get<std::uint16_t>(bytes, 4);
  if (h.version != kFrameVersion)
    throw FormatError("frame", "unsupported frame version " + std::to_string(h.version));
  h.flags = get<std::uint16_t>(bytes, 6);
  h.block_index = get<std::uint64_t>(bytes, 8);
  h.snapshot = get<std::uint64_t>(bytes, 16);
  h.channels = get<std::uint16_t>(bytes, 24);
  h.frames = get<std::uint32_t>(bytes, 28);
  return h;
}

} // namespace

std::string encode_frame(const Frame& frame)
{
  const FrameHeader& h = frame.header;
  if (frame.samples.size() != std::size_t(h.channels) * h.frames)
    throw StreamError("frame payload does not match channels * frames");
  std::string out(kFrameHeaderSize + payload_bytes(h.channels, h.frames), '\0');
  std::memcpy(out.data(), kFrameMagic, 4);
  put(out, 4, h.version);
  put(out, 6, h.flags);
  put(out, 8, h.block_index);
  put(out, 16, h.snapshot);
  put(out, 24, h.channels);
  put(out, 26, std::uint16_t{0});
  put(out, 28, h.frames);
  if (!frame.samples.empty())
    std::memcpy(out.data() + kFrameHeaderSize, frame.samples.data(),
                frame.samples.size() * sizeof(float));
  return out;
}

Frame decode_frame(std::string_view bytes)
{
  Frame f;
  f.header = decode_header(bytes);
  const std::size_t payload = payload_bytes(f.header.channels, f.header.frames);
  if (bytes.size() != kFrameHeaderSize + payload)
    throw FormatError("frame", "frame size does not match its header");
  f.samples.resize(std::size_t(f.header.channels) * f.header.frames);
  if (payload)
    std::memcpy(f.samples.data(), bytes.data() + kFrameHeaderSize, payload);
  return f;
}

std::optional<Frame> FrameReader::next()
{
  if (pending_.size() < kFrameHeaderSize)
    return std::nullopt;
  const FrameHeader h = decode_header(pending_);
  const std::size_t total = kFrameHeaderSize + payload_bytes(h.channels, h.frames);
  if (pending_.size() < total)
    return std::nullopt;
  Frame f = decode_frame(std::string_view(pending_).substr(0, total));
  pending_.erase(0, total);
  return f;
}

} // namespace vmic
