#include "vmic/delay_line.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vmic/errors.hpp"

namespace vmic {

std::string_view to_string(Interpolation mode)
{
  return mode == Interpolation::linear ? "linear" : "lagrange3";
}

Interpolation parse_interpolation(std::string_view text)
{
  if (text == "linear")
    return Interpolation::linear;
  if (text == "lagrange" || text == "lagrange3")
    return Interpolation::lagrange3;
  throw std::invalid_argument("interpolation must be 'linear' or 'lagrange3', got '" +
                              std::string(text) + "'");
}

namespace {

// Room for the 4-point stencil beyond the largest delay.
constexpr std::size_t kStencilMargin = 4;

std::size_t capacity_for(double max_delay)
{
  return std::bit_ceil(static_cast<std::size_t>(std::ceil(max_delay)) +
                       kStencilMargin);
}

} // namespace

FractionalDelayLine::FractionalDelayLine(double max_delay)
{
  if (!(max_delay >= 0.0) || !std::isfinite(max_delay))
    throw RangeError("delay line length must be finite and >= 0");
  max_delay_ = max_delay;
  buf_.assign(capacity_for(max_delay), 0.0);
  mask_ = buf_.size() - 1;
}

double FractionalDelayLine::read(double delay, Interpolation mode) const
{
  if (!(delay >= 0.0 && delay <= max_delay_)) {
    std::ostringstream os;
    os << "delay " << delay << " samples outside [0, " << max_delay_ << "]";
    throw RangeError(os.str());
  }
  return mode == Interpolation::linear ? read_linear(delay)
                                       : read_lagrange(delay);
}

double FractionalDelayLine::read_linear(double delay) const noexcept
{
  const double base = std::floor(delay);
  const double frac = delay - base;
  const auto k = static_cast<std::size_t>(base);
  if (frac == 0.0)
    return at(k);
  return (1.0 - frac) * at(k) + frac * at(k + 1);
}

double FractionalDelayLine::read_lagrange(double delay) const noexcept
{
  const double base = std::max(std::floor(delay) - 1.0, 0.0);
  const double x = delay - base;
  const auto k = static_cast<std::size_t>(base);
  const double xm1 = x - 1.0;
  const double xm2 = x - 2.0;
  const double xm3 = x - 3.0;
  const double w0 = -xm1 * xm2 * xm3 / 6.0;
  const double w1 = x * xm2 * xm3 / 2.0;
  const double w2 = -x * xm1 * xm3 / 2.0;
  const double w3 = x * xm1 * xm2 / 6.0;
  return w0 * at(k) + w1 * at(k + 1) + w2 * at(k + 2) + w3 * at(k + 3);
}

void FractionalDelayLine::reserve(double max_delay)
{
  if (!(max_delay >= 0.0) || !std::isfinite(max_delay))
    throw RangeError("delay line length must be finite and >= 0");
  if (max_delay <= max_delay_)
    return;
  const std::size_t cap = capacity_for(max_delay);
  if (cap > buf_.size()) {
    std::vector<double> grown(cap, 0.0);
    // newest sample lands at index 0, older ones wrap to the top
    for (std::size_t k = 0; k < buf_.size(); ++k)
      grown[(cap - k) & (cap - 1)] = at(k);
    buf_ = std::move(grown);
    mask_ = cap - 1;
    write_ = 0;
  }
  max_delay_ = max_delay;
}

void FractionalDelayLine::clear() noexcept
{
  std::fill(buf_.begin(), buf_.end(), 0.0);
  write_ = 0;
}

} // namespace vmic
