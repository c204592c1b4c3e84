#include "vmic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vmic/errors.hpp"

namespace vmic {

double normalize_angle(double theta)
{
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0)
    t += kTwoPi;
  // fmod of a tiny negative value can round back up to exactly 2*pi
  return t >= kTwoPi ? 0.0 : t;
}

ScenePose ScenePose::make(double r, double theta)
{
  if (!std::isfinite(r) || r <= 0.0)
    throw ValidityError("r", "source distance must be finite and > 0");
  if (!std::isfinite(theta))
    throw ValidityError("theta", "incidence angle must be finite");
  return ScenePose{r, normalize_angle(theta)};
}

void MicParams::validate() const
{
  if (!(m >= 0.0 && m <= 1.0))
    throw ValidityError("m", "directivity coefficient m must lie in [0, 1]");
  if (!(d > 0.0) || !std::isfinite(d))
    throw ValidityError("d", "capsule spacing d must be > 0");
  if (!(g >= 0.0 && g < 1.0))
    throw ValidityError("g", "integrator loss g must lie in [0, 1)");
  if (!(c0 > 0.0) || !std::isfinite(c0))
    throw ValidityError("c0", "speed of sound c0 must be > 0");
  if (!(fs > 0.0) || !std::isfinite(fs))
    throw ValidityError("fs", "sampling rate fs must be > 0");
}

double TapSet::max_delay() const
{
  return std::max({center.delay, front.delay, rear.delay});
}

void check_validity(const ScenePose& pose, double spacing)
{
  if (!(pose.r >= 0.5 * spacing)) {
    std::ostringstream os;
    os << "source distance r = " << pose.r << " m violates r >= d/2 (d = "
       << spacing << " m)";
    throw ValidityError("r", os.str());
  }
}

CapsuleDistances capsule_distances(const ScenePose& pose, double spacing)
{
  check_validity(pose, spacing);
  // hypot on the Cartesian offsets equals sqrt(r^2 + d^2/4 -+ r d cos(theta))
  // but keeps full relative accuracy when the source nears a capsule point.
  const double x = pose.r * std::cos(pose.theta);
  const double y = pose.r * std::sin(pose.theta);
  const double half = 0.5 * spacing;
  return {std::hypot(x - half, y), std::hypot(x + half, y)};
}

CapsuleDistances checked_capsule_distances(const ScenePose& pose,
                                           double spacing, double gain_ceiling)
{
  const auto dist = capsule_distances(pose, spacing);
  const double min_dist = std::min({pose.r, dist.front, dist.rear});
  if (!(1.0 / min_dist <= gain_ceiling)) {
    std::ostringstream os;
    os << "path length " << min_dist << " m gives a gain above the ceiling "
       << gain_ceiling << " (source too close to a capsule point; r >= d/2)";
    throw ValidityError("r", os.str());
  }
  return dist;
}

TapSet tap_set(const ScenePose& pose, const MicParams& params,
               double gain_ceiling)
{
  params.validate();
  const auto [r1, r2] = checked_capsule_distances(pose, params.d, gain_ceiling);
  const auto delay = [&](double dist) { return params.fs * dist / params.c0; };
  TapSet taps;
  taps.center = {1.0 / pose.r, delay(pose.r)};
  taps.front = {1.0 / r1, delay(r1)};
  taps.rear = {1.0 / r2, delay(r2)};
  return taps;
}

ScenePose local_pose(const MicPlacement& mic, Point2 source)
{
  const double dx = source.x - mic.position.x;
  const double dy = source.y - mic.position.y;
  return ScenePose::make(std::hypot(dx, dy),
                         std::atan2(dy, dx) - mic.orientation);
}

} // namespace vmic
