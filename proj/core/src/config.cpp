#include "vmic/config.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "vmic/errors.hpp"
#include "vmic/export.hpp"

namespace vmic {

namespace {

int line_of(const YAML::Node& node)
{
  const auto mark = node.Mark();
  return mark.line < 0 ? 0 : mark.line + 1;
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                       const std::string& what)
{
  const int line = line_of(node);
  throw ConfigError(field, line,
                    "line " + std::to_string(line) + ": " + field + ": " + what);
}

void expect_map(const YAML::Node& node, const std::string& field)
{
  if (!node.IsMap())
    fail(node, field, "expected a mapping");
}

void only_keys(const YAML::Node& node, const std::string& field,
               std::initializer_list<std::string_view> allowed)
{
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool known = false;
    for (auto a : allowed)
      known = known || key == a;
    if (!known)
      fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
  }
}

double number(const YAML::Node& node, const std::string& field)
{
  if (!node.IsScalar())
    fail(node, field, "expected a number");
  double v = 0.0;
  if (!YAML::convert<double>::decode(node, v) || !std::isfinite(v))
    fail(node, field, "expected a finite number, got '" + node.Scalar() + "'");
  return v;
}

double number_or(const YAML::Node& parent, const char* key,
                 const std::string& field, double fallback)
{
  const auto node = parent[key];
  return node ? number(node, field) : fallback;
}

double required_number(const YAML::Node& parent, const char* key,
                       const std::string& field)
{
  const auto node = parent[key];
  if (!node)
    fail(parent, field, "missing");
  return number(node, field);
}

std::string text(const YAML::Node& node, const std::string& field)
{
  if (!node.IsScalar())
    fail(node, field, "expected a string");
  return node.Scalar();
}

Point2 point(const YAML::Node& node, const std::string& field)
{
  expect_map(node, field);
  only_keys(node, field, {"x", "y"});
  return {required_number(node, "x", field + ".x"),
          required_number(node, "y", field + ".y")};
}

} // namespace

SceneConfig parse_scene_config(std::string_view source_text,
                               const std::filesystem::path& base_dir)
{
  YAML::Node root;
  try {
    root = YAML::Load(std::string(source_text));
  } catch (const YAML::ParserException& e) {
    const int line = e.mark.line < 0 ? 0 : e.mark.line + 1;
    throw ConfigError("", line, "line " + std::to_string(line) + ": " + e.msg);
  }
  if (!root || !root.IsMap())
    throw ConfigError("", 0, "config must be a YAML mapping");
  only_keys(root, "", {"schema", "source", "fs", "engine", "source_position",
                       "trajectory", "mics"});

  SceneConfig cfg;
  const auto schema = root["schema"];
  if (!schema)
    fail(root, "schema", "missing (expected 1)");
  if (number(schema, "schema") != kConfigSchema)
    fail(schema, "schema", "unsupported version " + schema.Scalar());

  const auto src = root["source"];
  if (!src)
    fail(root, "source", "missing");
  cfg.source = text(src, "source");
  if (cfg.source.is_relative() && !base_dir.empty())
    cfg.source = base_dir / cfg.source;

  if (const auto fs = root["fs"]) {
    cfg.fs = number(fs, "fs");
    if (!(*cfg.fs > 0.0))
      fail(fs, "fs", "must be > 0");
  }

  if (const auto engine = root["engine"]) {
    expect_map(engine, "engine");
    only_keys(engine, "engine", {"block_size", "interpolation", "c0", "crossfade_ms"});
    if (const auto bs = engine["block_size"]) {
      const double v = number(bs, "engine.block_size");
      if (!(v >= 1.0 && v <= 65536.0 && v == std::floor(v)))
        fail(bs, "engine.block_size", "must be an integer in [1, 65536]");
      cfg.engine.block_size = static_cast<std::size_t>(v);
    }
    if (const auto interp = engine["interpolation"]) {
      try {
        cfg.engine.interpolation =
            parse_interpolation(text(interp, "engine.interpolation"));
      } catch (const std::invalid_argument& e) {
        fail(interp, "engine.interpolation", e.what());
      }
    }
    cfg.c0 = number_or(engine, "c0", "engine.c0", cfg.c0);
    if (!(cfg.c0 > 0.0))
      fail(engine["c0"], "engine.c0", "must be > 0");
    cfg.engine.crossfade_ms =
        number_or(engine, "crossfade_ms", "engine.crossfade_ms", cfg.engine.crossfade_ms);
    if (!(cfg.engine.crossfade_ms >= 0.0))
      fail(engine["crossfade_ms"], "engine.crossfade_ms", "must be >= 0");
  }

  const auto pos = root["source_position"];
  if (!pos)
    fail(root, "source_position", "missing");
  cfg.source_position = point(pos, "source_position");

  if (const auto traj = root["trajectory"]) {
    if (!traj.IsSequence())
      fail(traj, "trajectory", "expected a list");
    double last = -INFINITY;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const auto item = traj[i];
      const std::string field = "trajectory[" + std::to_string(i) + "]";
      expect_map(item, field);
      only_keys(item, field, {"t", "x", "y"});
      TrajectoryPoint p;
      p.time = required_number(item, "t", field + ".t");
      if (p.time < last)
        fail(item, field + ".t", "times must be non-decreasing");
      last = p.time;
      p.position = {required_number(item, "x", field + ".x"),
                    required_number(item, "y", field + ".y")};
      cfg.trajectory.push_back(p);
    }
  }

  const auto mics = root["mics"];
  if (!mics)
    fail(root, "mics", "missing");
  if (!mics.IsSequence() || mics.size() == 0)
    fail(mics, "mics", "expected a non-empty list");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < mics.size(); ++i) {
    const auto item = mics[i];
    const std::string field = "mics[" + std::to_string(i) + "]";
    expect_map(item, field);
    only_keys(item, field, {"label", "x", "y", "orientation", "m", "d", "g"});
    MicSetup mic;
    mic.label = item["label"] ? text(item["label"], field + ".label")
                              : "mic" + std::to_string(i + 1);
    if (!labels.insert(mic.label).second)
      fail(item, field + ".label", "duplicate label '" + mic.label + "'");
    mic.placement.position = {number_or(item, "x", field + ".x", 0.0),
                              number_or(item, "y", field + ".y", 0.0)};
    mic.placement.orientation =
        number_or(item, "orientation", field + ".orientation", 0.0);
    mic.params.m = number_or(item, "m", field + ".m", mic.params.m);
    mic.params.d = number_or(item, "d", field + ".d", mic.params.d);
    mic.params.g = number_or(item, "g", field + ".g", mic.params.g);
    mic.params.c0 = cfg.c0;
    mic.params.fs = cfg.fs.value_or(kDefaultSampleRate);
    try {
      mic.params.validate();
    } catch (const ValidityError& e) {
      throw ValidityError(e.field(), "mic '" + mic.label + "' (line " +
                                         std::to_string(line_of(item)) +
                                         "): " + e.what());
    }
    cfg.mics.push_back(std::move(mic));
  }
  return cfg;
}

SceneConfig load_scene_config(const std::filesystem::path& path)
{
  const std::string content = read_text(path);
  return parse_scene_config(content, path.parent_path());
}

Scene build_scene(const SceneConfig& config, double fs)
{
  if (config.fs && *config.fs != fs)
    throw StreamError("source is sampled at " + std::to_string(fs) +
                      " Hz but the config expects " + std::to_string(*config.fs) +
                      " Hz; resample it externally");
  std::vector<MicSetup> mics = config.mics;
  for (auto& mic : mics) {
    mic.params.fs = fs;
    mic.params.c0 = config.c0;
  }
  return Scene(fs, std::move(mics), config.source_position, config.engine,
               config.trajectory);
}

AudioBuffer load_source(const SceneConfig& config)
{
  return to_mono(read_wav(config.source));
}

} // namespace vmic
