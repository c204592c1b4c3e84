#pragma once

// Block-based time-domain engine. Every microphone voice reads three
// fractional taps from one shared source history and runs
//
//   out[n] = m (1/r) s[n - D0]
//          + (1 - m) (c0/d) I{ (1/r1) s[n - D1] - (1/r2) s[n - D2] }
//
// with I the lossy bilinear integrator. Pose and parameter changes take
// effect at block boundaries, optionally crossfading between the outgoing
// and incoming configurations.

#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vmic/audio_io.hpp"
#include "vmic/delay_line.hpp"
#include "vmic/geometry.hpp"
#include "vmic/integrator.hpp"

namespace vmic {

inline constexpr std::size_t kDefaultBlockSize = 256;
inline constexpr double kDefaultCrossfadeMs = 20.0;

struct EngineOptions {
  std::size_t block_size = kDefaultBlockSize;
  Interpolation interpolation = Interpolation::linear;
  double crossfade_ms = kDefaultCrossfadeMs; // used for automated moves
  double gain_ceiling = kDefaultGainCeiling;
};

/// How a change is brought in: 0 ms jumps at the block boundary.
struct Smoothing {
  double crossfade_ms = 0.0;

  static Smoothing none() { return {0.0}; }
  static Smoothing crossfade(double ms) { return {ms}; }
};

struct MicSetup {
  std::string label;
  MicPlacement placement;
  MicParams params;
};

/// One microphone: the omni tap plus the integrated dipole pair.
class MicVoice {
public:
  MicVoice(MicSetup setup, ScenePose pose, const EngineOptions& options);

  const MicSetup& setup() const noexcept { return setup_; }
  const MicParams& params() const noexcept { return current_.params; }
  const ScenePose& pose() const noexcept { return current_.pose; }
  const TapSet& taps() const noexcept { return current_.taps; }
  bool fading() const noexcept { return incoming_.has_value(); }

  /// Longest history the voice may read, including integrator warm-up.
  double history_needed() const noexcept;

  /// Next output sample. The matching source sample must already be pushed
  /// into `source`.
  double tick(const FractionalDelayLine& source);

  /// Moves to a new pose and/or parameter set. The incoming integrator is
  /// warmed up on the stored source history so that, once faded in, the
  /// voice matches a static render of the new configuration. An ongoing
  /// fade is completed instantly first. Throws ValidityError (leaving the
  /// voice unchanged) for an invalid pose/parameter combination.
  void retarget(const ScenePose& pose, const MicParams& params,
                std::size_t fade_samples, const FractionalDelayLine& source);

  /// Samples of history replayed into a fresh integrator with loss g.
  static std::size_t warmup_length(double g) noexcept;

  void update_pose(const ScenePose& pose, std::size_t fade_samples,
                   const FractionalDelayLine& source)
  {
    retarget(pose, current_.params, fade_samples, source);
  }

private:
  struct Path {
    ScenePose pose;
    MicParams params;
    TapSet taps;
    double omni_weight = 0.0; // m
    double bidi_weight = 0.0; // (1 - m) c0 / d
    LossyIntegrator integrator;

    double dipole(const FractionalDelayLine& src, Interpolation mode,
                  double extra_delay) const;
    double eval(const FractionalDelayLine& src, Interpolation mode);
  };

  Path make_path(const ScenePose& pose, const MicParams& params) const;

  MicSetup setup_;
  Interpolation interpolation_;
  double gain_ceiling_;
  Path current_;
  std::optional<Path> incoming_;
  std::size_t fade_len_ = 0;
  std::size_t fade_pos_ = 0;
};

struct TrajectoryPoint {
  double time = 0.0; // s
  Point2 position;
};

/// Control messages applied by the render thread at block boundaries.
struct MoveSource {
  Point2 position;
};
struct SetMicParams {
  std::size_t mic = 0;
  MicParams params;
};
using SceneUpdate = std::variant<MoveSource, SetMicParams>;

/// Multi-producer queue feeding updates to the thread that owns a Scene.
class ControlChannel {
public:
  void post(SceneUpdate update);
  /// Moves out everything queued so far.
  std::vector<SceneUpdate> drain();
  bool empty() const;

private:
  mutable std::mutex mu_;
  std::deque<SceneUpdate> queue_;
};

/// One mono source heard by any number of microphones.
class Scene {
public:
  /// Throws ValidityError (message names the microphone) when any
  /// microphone/source pair is invalid.
  Scene(double fs, std::vector<MicSetup> mics, Point2 source,
        EngineOptions options = {},
        std::vector<TrajectoryPoint> trajectory = {});

  double fs() const noexcept { return fs_; }
  std::size_t mic_count() const noexcept { return voices_.size(); }
  const MicVoice& mic(std::size_t k) const { return voices_.at(k); }
  const EngineOptions& options() const noexcept { return options_; }
  Point2 source_position() const noexcept { return source_; }
  std::size_t samples_rendered() const noexcept { return rendered_; }
  bool crossfading() const noexcept;

  /// Renders input.size() samples into `interleaved_out`
  /// (input.size() * mic_count() values, microphone-major within a frame).
  /// Trajectory motion is evaluated at the start of the call.
  void render_block(std::span<const double> input,
                    std::span<double> interleaved_out);
  std::vector<double> render_block(std::span<const double> input);

  /// Validate-then-apply: on ValidityError nothing changes.
  void move_source(Point2 position, Smoothing smoothing = {});
  void set_mic_params(std::size_t mic, const MicParams& params,
                      Smoothing smoothing = {});
  void apply(const SceneUpdate& update, Smoothing smoothing = {});

  /// Samples needed after the input ends for every voice to settle below
  /// -96 dB: longest delay, interpolation stencil and integrator decay.
  std::size_t tail_samples() const;

private:
  std::size_t fade_samples(Smoothing smoothing) const;
  void ensure_history();
  void follow_trajectory(std::size_t block_len);

  double fs_;
  EngineOptions options_;
  Point2 source_;
  std::vector<TrajectoryPoint> trajectory_;
  FractionalDelayLine history_;
  std::vector<MicVoice> voices_;
  std::size_t rendered_ = 0;
};

/// Source position at time t: linear interpolation between trajectory
/// points, held constant outside their time range.
Point2 trajectory_position(std::span<const TrajectoryPoint> trajectory,
                           double t);

/// Offline form: whole source through the scene in block_size chunks, then
/// the tail. Throws StreamError when the source is not mono or its
/// sampling rate differs from the scene's.
AudioBuffer render_file(Scene& scene, const AudioBuffer& source);

/// Per-channel count of samples with |x| > 1.
std::vector<std::size_t> count_overs(const AudioBuffer& buffer);

} // namespace vmic
