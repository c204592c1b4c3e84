#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace vmic {

enum class Interpolation {
  linear,   // 2-point, default for real-time rendering
  lagrange3 // 4-point (third-order) Lagrange, analysis-grade
};

std::string_view to_string(Interpolation mode);
/// "linear" or "lagrange" / "lagrange3"; std::invalid_argument otherwise.
Interpolation parse_interpolation(std::string_view text);

/// Single-channel ring buffer read at fractional delays.
///
/// Delay 0 is the most recently pushed sample. Reads at integer delays
/// return stored samples exactly in both interpolation modes. Lagrange reads
/// use the four samples around the delay; below one sample of delay the
/// stencil is pinned to delays 0..3 since future samples do not exist.
class FractionalDelayLine {
public:
  explicit FractionalDelayLine(double max_delay = 0.0);

  void push(double x) noexcept
  {
    write_ = (write_ + 1) & mask_;
    buf_[write_] = x;
  }

  /// Sample `k` pushes ago.
  double at(std::size_t k) const noexcept { return buf_[(write_ - k) & mask_]; }

  /// Throws RangeError unless 0 <= delay <= max_delay().
  double read(double delay, Interpolation mode = Interpolation::linear) const;

  double max_delay() const noexcept { return max_delay_; }
  std::size_t capacity() const noexcept { return buf_.size(); }

  /// Raises the admissible delay, keeping the stored history.
  void reserve(double max_delay);

  void clear() noexcept;

private:
  double read_linear(double delay) const noexcept;
  double read_lagrange(double delay) const noexcept;

  std::vector<double> buf_;
  std::size_t mask_ = 0;
  std::size_t write_ = 0;
  double max_delay_ = 0.0;
};

} // namespace vmic
