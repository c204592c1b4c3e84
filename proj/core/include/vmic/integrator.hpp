#pragma once

namespace vmic {

struct IntegratorState {
  double prev_in = 0.0;
  double prev_out = 0.0;
};

/// One step of the lossy bilinear integrator
///   I[z] = 1/(2 fs) * (1 + z^-1) / (1 - g z^-1),
/// i.e. y[n] = g y[n-1] + (x[n] + x[n-1]) / (2 fs).
inline double integrator_step(IntegratorState& s, double x, double g,
                              double fs) noexcept
{
  const double y = g * s.prev_out + (x + s.prev_in) * (0.5 / fs);
  s.prev_in = x;
  s.prev_out = y;
  return y;
}

/// Stateful form with the coefficients bound once.
class LossyIntegrator {
public:
  LossyIntegrator() = default;
  LossyIntegrator(double g, double fs) noexcept : g_(g), half_period_(0.5 / fs) {}

  double step(double x) noexcept
  {
    const double y = g_ * state_.prev_out + (x + state_.prev_in) * half_period_;
    state_.prev_in = x;
    state_.prev_out = y;
    return y;
  }

  void reset() noexcept { state_ = {}; }
  const IntegratorState& state() const noexcept { return state_; }
  void set_state(const IntegratorState& s) noexcept { state_ = s; }
  double loss() const noexcept { return g_; }

private:
  double g_ = 0.0;
  double half_period_ = 0.0;
  IntegratorState state_;
};

} // namespace vmic
