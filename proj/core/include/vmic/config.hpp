#pragma once

// Scene description files (YAML, schema 1):
//
//   schema: 1
//   source: take.wav            # relative paths resolve against the file
//   fs: 44100                   # optional; the source must match
//   engine:                     # all optional
//     block_size: 256
//     interpolation: linear     # or lagrange3
//     c0: 343
//     crossfade_ms: 20
//   source_position: {x: 1.0, y: 0.0}
//   trajectory:                 # optional, seconds and meters
//     - {t: 0.0, x: 1.0, y: 0.0}
//     - {t: 2.0, x: 0.0, y: 1.0}
//   mics:
//     - label: front
//       x: 0.0
//       y: 0.0
//       orientation: 0.0        # radians, axis direction in the plan
//       m: 0.5
//       d: 0.02
//       g: 0.9
//
// Unknown keys are rejected so typos do not silently fall back to defaults.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vmic/audio_io.hpp"
#include "vmic/render.hpp"

namespace vmic {

inline constexpr int kConfigSchema = 1;

struct SceneConfig {
  std::filesystem::path source;     // absolute or relative to the cwd
  std::optional<double> fs;         // expected source rate
  EngineOptions engine;
  double c0 = kDefaultSpeedOfSound;
  Point2 source_position;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<MicSetup> mics;       // params.fs is filled in by build_scene
};

/// Throws ConfigError (with line and field) for syntax and schema problems
/// and ValidityError for microphone parameters out of bounds.
SceneConfig parse_scene_config(std::string_view text,
                               const std::filesystem::path& base_dir = {});
/// Throws IoError when the file cannot be read.
SceneConfig load_scene_config(const std::filesystem::path& path);

/// Scene at sampling rate fs. Throws StreamError when the config pins a
/// different rate, ValidityError when a microphone/source pair is invalid.
Scene build_scene(const SceneConfig& config, double fs);

/// Reads the configured source and forces it to mono.
AudioBuffer load_source(const SceneConfig& config);

} // namespace vmic
