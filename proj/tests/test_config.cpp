#include <doctest.h>

#include "support.hpp"
#include "vmic/config.hpp"
#include "vmic/errors.hpp"
#include "vmic/export.hpp"

using namespace vmic;
using namespace vmic::test;

namespace {

const char* const kFull = R"(schema: 1
source: take.wav
fs: 44100
engine:
  block_size: 128
  interpolation: lagrange3
  c0: 340
  crossfade_ms: 5
source_position: {x: 1.0, y: 0.5}
trajectory:
  - {t: 0.0, x: 1.0, y: 0.5}
  - {t: 2.0, x: 0.0, y: 2.0}
mics:
  - label: front
    m: 0.5
    d: 0.02
    g: 0.9
  - x: 0.3
    y: -0.1
    orientation: 1.5707963267948966
    m: 0.0
)";

ConfigError config_error(const std::string& text)
{
  try {
    parse_scene_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a config error");
  return ConfigError("", 0, "");
}

std::string minimal(const std::string& mics_block)
{
  return "schema: 1\nsource: a.wav\nsource_position: {x: 1, y: 0}\nmics:\n" + mics_block;
}

} // namespace

TEST_CASE("full config parses")
{
  const auto cfg = parse_scene_config(kFull, "/data/session");
  CHECK(cfg.source == std::filesystem::path("/data/session/take.wav"));
  REQUIRE(cfg.fs);
  CHECK(*cfg.fs == 44100);
  CHECK(cfg.engine.block_size == 128);
  CHECK(cfg.engine.interpolation == Interpolation::lagrange3);
  CHECK(cfg.engine.crossfade_ms == 5);
  CHECK(cfg.c0 == 340);
  CHECK(cfg.source_position == Point2{1.0, 0.5});
  REQUIRE(cfg.trajectory.size() == 2);
  CHECK(cfg.trajectory[1].time == 2.0);
  REQUIRE(cfg.mics.size() == 2);
  CHECK(cfg.mics[0].label == "front");
  CHECK(cfg.mics[1].label == "mic2");
  CHECK(cfg.mics[1].placement.position == Point2{0.3, -0.1});
  CHECK(cfg.mics[1].params.m == 0.0);
  CHECK(cfg.mics[1].params.d == MicParams{}.d);
  CHECK(cfg.mics[1].params.c0 == 340);
}

TEST_CASE("absolute source paths are kept")
{
  const auto cfg = parse_scene_config(
      "schema: 1\nsource: /abs/x.wav\nsource_position: {x: 1, y: 0}\nmics:\n  - m: 1\n", "/base");
  CHECK(cfg.source == std::filesystem::path("/abs/x.wav"));
}

TEST_CASE("config errors carry field and line")
{
  auto e = config_error(minimal("  - m: 0.5\n    gain: 3\n"));
  CHECK(e.field() == "mics[0].gain");
  CHECK(e.line() == 6);
  CHECK(std::string(e.what()).find("line 6") != std::string::npos);

  e = config_error("schema: 1\nsource: a.wav\nsource_position: {x: 1, y: 0}\nmics: []\n");
  CHECK(e.field() == "mics");

  e = config_error("schema: 2\nsource: a.wav\n");
  CHECK(e.field() == "schema");

  e = config_error("source: a.wav\n");
  CHECK(e.field() == "schema");

  e = config_error(minimal("  - m: 0.5\n    label: a\n  - label: a\n"));
  CHECK(e.field() == "mics[1].label");

  e = config_error(minimal("  - m: lots\n"));
  CHECK(e.field() == "mics[0].m");

  e = config_error("schema: 1\nsource: a.wav\nsource_position: {x: 1}\nmics:\n  - m: 1\n");
  CHECK(e.field() == "source_position.y");

  e = config_error("schema: 1\nsource: a.wav\nengine: {interpolation: sinc}\n"
                   "source_position: {x: 1, y: 0}\nmics:\n  - m: 1\n");
  CHECK(e.field() == "engine.interpolation");

  e = config_error("schema: 1\nsource: a.wav\nengine: {block_size: 0}\n"
                   "source_position: {x: 1, y: 0}\nmics:\n  - m: 1\n");
  CHECK(e.field() == "engine.block_size");

  e = config_error("schema: 1\nsource: a.wav\nsource_position: {x: 1, y: 0}\n"
                   "trajectory:\n  - {t: 1, x: 0, y: 1}\n  - {t: 0, x: 0, y: 1}\n"
                   "mics:\n  - m: 1\n");
  CHECK(e.field() == "trajectory[1].t");

  e = config_error("schema: 1\n  bad: [indent\n");
  CHECK(e.line() > 0);

  e = config_error("sourse: a.wav\nschema: 1\n");
  CHECK(e.field() == "sourse");
}

TEST_CASE("microphone parameters out of bounds name the mic")
{
  try {
    parse_scene_config(minimal("  - label: lav\n    m: 0.5\n  - label: boom\n    g: 1.2\n"));
    FAIL("expected a validity error");
  } catch (const ValidityError& e) {
    CHECK(e.field() == "g");
    const std::string what = e.what();
    CHECK(what.find("boom") != std::string::npos);
    CHECK(what.find("line 7") != std::string::npos);
  }
}

TEST_CASE("building a scene from a config")
{
  const auto cfg = parse_scene_config(kFull);
  const Scene scene = build_scene(cfg, 44100);
  CHECK(scene.mic_count() == 2);
  CHECK(scene.options().block_size == 128);
  CHECK(scene.mic(0).params().c0 == 340);
  CHECK(scene.mic(0).params().fs == 44100);
  CHECK_THROWS_AS(build_scene(cfg, 48000), StreamError);

  auto unpinned = cfg;
  unpinned.fs.reset();
  CHECK(build_scene(unpinned, 48000).fs() == 48000);

  auto too_close = cfg;
  too_close.trajectory.clear();
  too_close.source_position = {0.001, 0.0};
  CHECK_THROWS_AS(build_scene(too_close, 44100), ValidityError);
}

TEST_CASE("loading a config and its source from disk")
{
  TempDir dir;
  AudioBuffer stereo;
  stereo.fs = 44100;
  stereo.channels = 2;
  stereo.samples = {0.5, 0.0, 0.25, 0.25};
  write_wav(stereo, dir / "take.wav");
  write_text(dir / "scene.yaml", kFull);
  const auto cfg = load_scene_config(dir / "scene.yaml");
  CHECK(cfg.source == dir / "take.wav");
  const auto src = load_source(cfg);
  CHECK(src.channels == 1);
  CHECK(src.samples == std::vector<double>{0.25, 0.25});
  CHECK_THROWS_AS(load_scene_config(dir / "nope.yaml"), IoError);
}
