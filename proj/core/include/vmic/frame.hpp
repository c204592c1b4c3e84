#pragma once

// Binary audio frames streamed by the service. All fields little-endian.
//
//   offset  size  field
//        0     4  magic "VMIC"
//        4     2  version (1)
//        6     2  flags, see FrameFlag
//        8     8  block index (block position in the source)
//       16     8  parameter snapshot index in effect for the block
//       24     2  channel count
//       26     2  reserved, 0
//       28     4  frames per channel in the payload
//       32     -  payload: float32, interleaved, channels * frames values
//
// Gap, keepalive and end frames carry no payload (frames = 0). A gap frame
// precedes the first block delivered after blocks were dropped; its block
// index is that block's.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vmic {

inline constexpr char kFrameMagic[4] = {'V', 'M', 'I', 'C'};
inline constexpr std::uint16_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 32;

enum FrameFlag : std::uint16_t {
  frame_gap = 1u << 0,
  frame_crossfade = 1u << 1, // block lies (partly) inside a crossfade
  frame_keepalive = 1u << 2,
  frame_end = 1u << 3        // end of source reached; no more audio
};

struct FrameHeader {
  std::uint16_t version = kFrameVersion;
  std::uint16_t flags = 0;
  std::uint64_t block_index = 0;
  std::uint64_t snapshot = 0;
  std::uint16_t channels = 0;
  std::uint32_t frames = 0;
};

struct Frame {
  FrameHeader header;
  std::vector<float> samples; // channels * frames, interleaved

  bool has(FrameFlag flag) const noexcept { return (header.flags & flag) != 0; }
};

/// Header plus payload. Throws StreamError when the sample count does not
/// match channels * frames.
std::string encode_frame(const Frame& frame);

/// Decodes one complete frame. Throws FormatError ("frame") on bad magic,
/// unknown version or a size mismatch.
Frame decode_frame(std::string_view bytes);

/// Incremental decoder for a byte stream of back-to-back frames.
class FrameReader {
public:
  void feed(std::string_view bytes) { pending_.append(bytes); }
  /// Next complete frame, if buffered.
  std::optional<Frame> next();
  std::size_t buffered() const noexcept { return pending_.size(); }

private:
  std::string pending_;
};

} // namespace vmic
