#pragma once

// Source/capsule geometry of the three-point microphone model.
//
// Local frame: the microphone center O sits at the origin, the front capsule
// point O1 at (+d/2, 0) and the rear capsule point O2 at (-d/2, 0). The
// microphone axis points toward O1, so theta = 0 is on-axis in front. The
// rear field is subtracted from the front field.

#include <numbers>

namespace vmic {

inline constexpr double kDefaultSpeedOfSound = 343.0;
inline constexpr double kDefaultSampleRate = 44100.0;
inline constexpr double kDefaultGain = 0.9;
// Largest admissible 1/distance gain (1/m), i.e. no path shorter than 0.1 mm.
inline constexpr double kDefaultGainCeiling = 1.0e4;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle to [0, 2*pi).
double normalize_angle(double theta);

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Source position relative to one microphone, in its local frame.
struct ScenePose {
  double r = 1.0;     // m, distance source -> microphone center
  double theta = 0.0; // rad in [0, 2*pi), from the microphone axis

  /// Builds a pose with theta normalized. Throws ValidityError when r is not
  /// a finite positive number.
  static ScenePose make(double r, double theta);

  bool operator==(const ScenePose&) const = default;
};

struct MicParams {
  double m = 0.5;                    // directivity coefficient, [0, 1]
  double d = 0.02;                   // capsule spacing, m
  double g = kDefaultGain;           // integrator loss, [0, 1)
  double c0 = kDefaultSpeedOfSound;  // m/s
  double fs = kDefaultSampleRate;    // Hz

  /// Throws ValidityError naming the first field out of bounds.
  void validate() const;

  bool operator==(const MicParams&) const = default;
};

/// One propagation path: amplitude factor 1/distance and delay in samples.
struct Tap {
  double gain = 0.0;
  double delay = 0.0;

  bool operator==(const Tap&) const = default;
};

/// The three paths feeding the model: center (omni), front capsule point O1,
/// rear capsule point O2.
struct TapSet {
  Tap center;
  Tap front;
  Tap rear;

  double max_delay() const;

  bool operator==(const TapSet&) const = default;
};

struct CapsuleDistances {
  double front = 0.0; // r1 = |O1 M|
  double rear = 0.0;  // r2 = |O2 M|
};

/// Throws ValidityError unless r >= d/2.
void check_validity(const ScenePose& pose, double spacing);

/// Distances from the source to both capsule points. Throws ValidityError
/// when r < d/2.
CapsuleDistances capsule_distances(const ScenePose& pose, double spacing);

/// capsule_distances, additionally rejecting any path whose 1/distance gain
/// exceeds `gain_ceiling` (ValidityError on "r").
CapsuleDistances checked_capsule_distances(const ScenePose& pose, double spacing,
                                           double gain_ceiling = kDefaultGainCeiling);

/// Gains and fractional delays of the three paths. Throws ValidityError when
/// r < d/2, when parameters are out of bounds, or when any 1/distance gain
/// exceeds `gain_ceiling` (which includes the source sitting on a capsule
/// point).
TapSet tap_set(const ScenePose& pose, const MicParams& params,
               double gain_ceiling = kDefaultGainCeiling);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

/// Microphone center and axis orientation in scene coordinates.
struct MicPlacement {
  Point2 position;
  double orientation = 0.0; // rad, direction of the axis (toward O1)
};

/// Scene-level Cartesian source position -> polar pose in the microphone's
/// local frame.
ScenePose local_pose(const MicPlacement& mic, Point2 source);

} // namespace vmic
