#include "vmic/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "vmic/analysis.hpp"
#include "vmic/config.hpp"
#include "vmic/errors.hpp"
#include "vmic/export.hpp"
#include "vmic/service.hpp"
#include "vmic/version.hpp"

namespace vmic {

namespace {

// Microphone parameters from flags, optionally seeded from a config file.
struct ParamFlags {
  std::string config;
  std::size_t mic = 0;
  std::optional<double> m, d, g, c0, fs;
  std::string integrator = "lossy";

  void add(CLI::App& app, bool with_integrator = true)
  {
    app.add_option("--config", config, "Scene config to take defaults from");
    app.add_option("--mic", mic, "Microphone index in the config")->default_val(0);
    app.add_option("--m", m, "Directivity coefficient in [0, 1]");
    app.add_option("--d", d, "Capsule spacing (m)");
    app.add_option("--g", g, "Integrator loss in [0, 1)");
    app.add_option("--c0", c0, "Speed of sound (m/s)");
    app.add_option("--fs", fs, "Sampling rate (Hz)");
    if (with_integrator)
      app.add_option("--integrator", integrator, "ideal or lossy")
          ->check(CLI::IsMember({"ideal", "lossy"}))
          ->default_val("lossy");
  }

  // Params plus the configured source distance, when a config is given.
  std::pair<MicParams, std::optional<double>> resolve() const
  {
    MicParams p;
    std::optional<double> r;
    if (!config.empty()) {
      const SceneConfig cfg = load_scene_config(config);
      if (mic >= cfg.mics.size())
        throw ConfigError("mic", 0, "config has no microphone " + std::to_string(mic));
      p = cfg.mics[mic].params;
      p.c0 = cfg.c0;
      p.fs = cfg.fs.value_or(kDefaultSampleRate);
      r = local_pose(cfg.mics[mic].placement, cfg.source_position).r;
    }
    if (m) p.m = *m;
    if (d) p.d = *d;
    if (g) p.g = *g;
    if (c0) p.c0 = *c0;
    if (fs) p.fs = *fs;
    p.validate();
    return {p, r};
  }

  IntegratorMode mode() const { return parse_integrator_mode(integrator); }
};

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
  if (path.empty() || path == "-")
    out << text;
  else
    write_text(path, text);
}

std::vector<double> angles_from(std::size_t count)
{
  if (count == 0)
    throw RangeError("angle grid must hold at least one angle");
  return angle_grid(count);
}

// --- render ---------------------------------------------------------------

struct RenderArgs {
  std::string config;
  std::string output;
  int bits = 16;
};

int cmd_render(const RenderArgs& a, std::ostream& out)
{
  const SceneConfig cfg = load_scene_config(a.config);
  const AudioBuffer source = load_source(cfg);
  Scene scene = build_scene(cfg, source.fs);

  // Initial taps, reported before rendering moves anything.
  std::vector<std::string> tap_lines;
  for (std::size_t k = 0; k < scene.mic_count(); ++k) {
    const auto& v = scene.mic(k);
    std::ostringstream os;
    os.precision(6);
    os << "mic " << k << " '" << v.setup().label << "': r=" << v.pose().r
       << " m theta=" << rad_to_deg(v.pose().theta) << " deg m=" << v.params().m
       << " d=" << v.params().d << " g=" << v.params().g << "\n  taps gain ("
       << v.taps().center.gain << ", " << v.taps().front.gain << ", "
       << v.taps().rear.gain << ") delay (" << v.taps().center.delay << ", "
       << v.taps().front.delay << ", " << v.taps().rear.delay << ") samples";
    tap_lines.push_back(os.str());
  }

  const auto t0 = std::chrono::steady_clock::now();
  const AudioBuffer rendered = render_file(scene, source);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const WavWriteReport report =
      write_wav(rendered, a.output, sample_format_from_bits(a.bits));
  const auto overs = count_overs(rendered);

  const double seconds = double(rendered.frames()) / rendered.fs;
  out << "rendered " << rendered.channels << " channel(s), " << rendered.frames()
      << " frames (" << seconds << " s) at " << rendered.fs << " Hz in "
      << elapsed << " s";
  if (elapsed > 0.0)
    out << " (" << seconds / elapsed << "x real time)";
  out << "\n";
  for (std::size_t k = 0; k < tap_lines.size(); ++k)
    out << tap_lines[k] << "\n  samples beyond +-1.0: " << overs[k] << "\n";
  out << "clipped samples in " << a.output << ": " << report.clipped << "\n";
  return exit_ok;
}

// --- pattern --------------------------------------------------------------

struct PatternArgs {
  ParamFlags params;
  std::vector<double> freqs{1000.0};
  std::vector<double> distances;
  std::size_t angles = kDefaultAngleCount;
  std::string output;
  std::string svg;
};

int cmd_pattern(const PatternArgs& a, std::ostream& out)
{
  const auto [p, config_r] = a.params.resolve();
  std::vector<double> distances = a.distances;
  if (distances.empty())
    distances.push_back(config_r.value_or(1.0));
  const auto grid = angles_from(a.angles);
  const IntegratorMode mode = a.params.mode();

  PatternTable t;
  t.kind = PatternKind::monochromatic;
  t.angles = grid;
  t.frequencies = a.freqs;
  t.distances = distances;
  t.mode = mode;
  t.params = p;
  for (double r : distances)
    for (double f : a.freqs) {
      const auto slice = monochromatic_pattern(p, f, r, grid, mode);
      t.magnitude.insert(t.magnitude.end(), slice.magnitude.begin(),
                         slice.magnitude.end());
    }
  const std::string csv = pattern_csv(t);
  std::string svg;
  if (!a.svg.empty())
    svg = pattern_svg(t);
  emit(csv, a.output, out);
  if (!a.svg.empty())
    write_text(a.svg, svg);
  return exit_ok;
}

// --- deviation ------------------------------------------------------------

struct DeviationArgs {
  ParamFlags params;
  std::vector<double> freqs{50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0};
  std::vector<double> distances{0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};
  std::size_t angles = kDefaultAngleCount;
  std::string output;
};

int cmd_deviation(DeviationArgs a, std::ostream& out)
{
  if (a.params.integrator.empty())
    a.params.integrator = "ideal";
  const auto [p, config_r] = a.params.resolve();
  const auto grid = angles_from(a.angles);
  const auto map = limit_case_deviation(p, a.freqs, a.distances, grid, a.params.mode());
  emit(deviation_csv(map), a.output, out);
  return exit_ok;
}

// --- proximity ------------------------------------------------------------

struct ProximityArgs {
  ParamFlags params;
  double theta_deg = 0.0;
  double f_low = 50.0;
  double f_ref = 1000.0;
  std::vector<double> distances{0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
  std::string output;
  std::string svg;
};

int cmd_proximity(const ProximityArgs& a, std::ostream& out)
{
  const auto [p, config_r] = a.params.resolve();
  const auto curve = proximity_curve(p, deg_to_rad(a.theta_deg), a.f_low, a.f_ref,
                                     a.distances, a.params.mode());
  emit(proximity_csv(curve), a.output, out);
  if (!a.svg.empty())
    write_text(a.svg, proximity_svg(curve));
  return exit_ok;
}

// --- subband --------------------------------------------------------------

struct SubbandArgs {
  ParamFlags params;
  std::string stimulus;
  double seconds = 2.0;
  std::uint64_t seed = 1;
  double r = 1.0;
  bool r_given = false;
  std::size_t angles = 36;
  double band_lo = 31.5;
  double band_hi = 16000.0;
  std::string interpolation = "linear";
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::string output;
  std::string svg;
};

int cmd_subband(const SubbandArgs& a, std::ostream& out)
{
  auto [p, config_r] = a.params.resolve();
  std::vector<double> stimulus;
  if (!a.stimulus.empty()) {
    AudioBuffer in = to_mono(read_wav(a.stimulus));
    if (a.params.fs && *a.params.fs != in.fs)
      throw StreamError("stimulus is sampled at " + std::to_string(in.fs) +
                        " Hz, not the requested " + std::to_string(*a.params.fs) +
                        " Hz; resample it externally");
    p.fs = in.fs;
    stimulus = std::move(in.samples);
  } else {
    stimulus = pink_noise(std::size_t(std::llround(a.seconds * p.fs)), 0.1, a.seed);
  }
  const double r = a.r_given ? a.r : config_r.value_or(a.r);
  SubbandOptions opt;
  opt.engine.interpolation = parse_interpolation(a.interpolation);
  opt.workers = a.workers;
  const auto bands = BandSet::third_octave(p.fs, a.band_lo, a.band_hi);
  const auto t = subband_pattern(stimulus, p, angles_from(a.angles), r, bands, opt);
  const std::string csv = pattern_csv(t);
  std::string svg;
  if (!a.svg.empty())
    svg = pattern_svg(t);
  emit(csv, a.output, out);
  if (!a.svg.empty())
    write_text(a.svg, svg);
  return exit_ok;
}

// --- energy ---------------------------------------------------------------

struct EnergyArgs {
  std::string input;
  std::size_t channel = 0;
  bool mix = false;
  double frame_ms = 100.0;
  double band_lo = 31.5;
  double band_hi = 16000.0;
  std::string output;
};

int cmd_energy(const EnergyArgs& a, std::ostream& out)
{
  const AudioBuffer in = read_wav(a.input);
  std::vector<double> signal;
  if (a.mix) {
    signal = to_mono(in).samples;
  } else {
    if (a.channel >= in.channels)
      throw RangeError("file has no channel " + std::to_string(a.channel));
    for (std::size_t i = 0; i < in.frames(); ++i)
      signal.push_back(in.at(i, a.channel));
  }
  const auto bands = BandSet::third_octave(in.fs, a.band_lo, a.band_hi);
  emit(energy_csv(energy_balance(signal, in.fs, bands, a.frame_ms)), a.output, out);
  return exit_ok;
}

// --- serve ----------------------------------------------------------------

struct ServeArgs {
  std::string config;
  std::string host = "127.0.0.1";
  int port = 8080;
  double speed = 1.0;
  std::size_t queue = 64;
  double keepalive_ms = 500.0;
  std::size_t max_upload_mb = 64;
};

int cmd_serve(const ServeArgs& a, std::ostream& out)
{
  // Everything that can be wrong with the config surfaces before binding.
  const SceneConfig cfg = load_scene_config(a.config);
  {
    const AudioBuffer source = load_source(cfg);
    build_scene(cfg, source.fs);
  }

  ServiceOptions opt;
  opt.host = a.host;
  opt.port = a.port;
  opt.speed = a.speed;
  opt.queue_capacity = a.queue;
  opt.keepalive_ms = a.keepalive_ms;
  opt.max_upload = a.max_upload_mb << 20;
  opt.defaults = cfg;

  // Signals are taken synchronously by a dedicated thread; every thread
  // started from here on inherits the blocked mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGUSR1);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &set, &previous);

  Service service(opt);
  try {
    service.bind();
  } catch (...) {
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    throw;
  }
  out << "vmic " << kVersion << " listening on " << service.address() << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    if (sig != SIGUSR1)
      service.stop();
  });
  service.run();
  pthread_kill(waiter.native_handle(), SIGUSR1);
  waiter.join();
  service.stop();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  out << "stopped" << std::endl;
  return exit_ok;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Broadband microphone-field simulator", "vmic"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Render a scene config to a WAV file");
  render_cmd->add_option("config", render.config, "Scene config (YAML)")->required();
  render_cmd->add_option("-o,--output", render.output, "Output WAV")->required();
  render_cmd->add_option("--bits", render.bits, "16, 24 or 32 (float)")
      ->check(CLI::IsMember({16, 24, 32}))
      ->default_val(16);

  PatternArgs pattern;
  auto* pattern_cmd =
      app.add_subcommand("pattern", "Monochromatic directivity pattern (CSV/SVG)");
  pattern.params.add(*pattern_cmd);
  pattern_cmd->add_option("--f", pattern.freqs, "Frequencies (Hz), comma separated")
      ->delimiter(',');
  pattern_cmd->add_option("--r", pattern.distances, "Distances (m), comma separated")
      ->delimiter(',');
  pattern_cmd->add_option("--angles", pattern.angles, "Number of angles over 360 deg");
  pattern_cmd->add_option("-o,--output", pattern.output, "CSV path (default stdout)");
  pattern_cmd->add_option("--svg", pattern.svg, "Polar plot path");

  DeviationArgs deviation;
  auto* deviation_cmd = app.add_subcommand(
      "deviation", "Max deviation from the classical pattern per (f, r)");
  deviation.params.add(*deviation_cmd);
  deviation_cmd->get_option("--integrator")->default_val("ideal");
  deviation_cmd->add_option("--f", deviation.freqs, "Frequencies (Hz)")->delimiter(',');
  deviation_cmd->add_option("--r", deviation.distances, "Distances (m)")->delimiter(',');
  deviation_cmd->add_option("--angles", deviation.angles, "Number of angles");
  deviation_cmd->add_option("-o,--output", deviation.output, "CSV path (default stdout)");

  ProximityArgs proximity;
  auto* proximity_cmd =
      app.add_subcommand("proximity", "Low-frequency boost against distance");
  proximity.params.add(*proximity_cmd);
  proximity_cmd->add_option("--theta", proximity.theta_deg, "Incidence (degrees)");
  proximity_cmd->add_option("--f-low", proximity.f_low, "Boosted frequency (Hz)");
  proximity_cmd->add_option("--f-ref", proximity.f_ref, "Reference frequency (Hz)");
  proximity_cmd->add_option("--r", proximity.distances, "Distances (m)")->delimiter(',');
  proximity_cmd->add_option("-o,--output", proximity.output, "CSV path (default stdout)");
  proximity_cmd->add_option("--svg", proximity.svg, "Line plot path");

  SubbandArgs subband;
  auto* subband_cmd = app.add_subcommand(
      "subband", "Third-octave directivity pattern from an engine render");
  subband.params.add(*subband_cmd, false);
  subband_cmd->add_option("--stimulus", subband.stimulus,
                          "Broadband WAV (default: generated pink noise)");
  subband_cmd->add_option("--seconds", subband.seconds, "Pink noise length (s)");
  subband_cmd->add_option("--seed", subband.seed, "Pink noise seed");
  auto* r_opt = subband_cmd->add_option("--r", subband.r, "Distance (m)");
  subband_cmd->add_option("--angles", subband.angles, "Number of angles");
  subband_cmd->add_option("--band-lo", subband.band_lo, "Lowest band center (Hz)");
  subband_cmd->add_option("--band-hi", subband.band_hi, "Highest band center (Hz)");
  subband_cmd->add_option("--interpolation", subband.interpolation, "linear or lagrange3");
  subband_cmd->add_option("--workers", subband.workers, "Parallel renders");
  subband_cmd->add_option("-o,--output", subband.output, "CSV path (default stdout)");
  subband_cmd->add_option("--svg", subband.svg, "Polar plot path");

  EnergyArgs energy;
  auto* energy_cmd =
      app.add_subcommand("energy", "Third-octave energy balance over time");
  energy_cmd->add_option("input", energy.input, "WAV file")->required();
  energy_cmd->add_option("--channel", energy.channel, "Channel to analyse");
  energy_cmd->add_flag("--mix", energy.mix, "Average all channels instead");
  energy_cmd->add_option("--frame-ms", energy.frame_ms, "Frame length (ms, >= 10)");
  energy_cmd->add_option("--band-lo", energy.band_lo, "Lowest band center (Hz)");
  energy_cmd->add_option("--band-hi", energy.band_hi, "Highest band center (Hz)");
  energy_cmd->add_option("-o,--output", energy.output, "CSV path (default stdout)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the interactive HTTP service");
  serve_cmd->add_option("config", serve.config, "Default scene config")->required();
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--speed", serve.speed, "Playback speed factor (<= 0 unpaced)");
  serve_cmd->add_option("--queue", serve.queue, "Frames buffered per stream client");
  serve_cmd->add_option("--keepalive-ms", serve.keepalive_ms, "Keepalive period while paused");
  serve_cmd->add_option("--max-upload-mb", serve.max_upload_mb, "WAV upload limit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }
  subband.r_given = r_opt->count() > 0;

  try {
    if (*render_cmd)
      return cmd_render(render, out);
    if (*pattern_cmd)
      return cmd_pattern(pattern, out);
    if (*deviation_cmd)
      return cmd_deviation(deviation, out);
    if (*proximity_cmd)
      return cmd_proximity(proximity, out);
    if (*subband_cmd)
      return cmd_subband(subband, out);
    if (*energy_cmd)
      return cmd_energy(energy, out);
    if (*serve_cmd)
      return cmd_serve(serve, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const ValidityError& e) {
    err << "validity error: " << e.what() << '\n';
    return exit_validity;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_io;
  } catch (const FormatError& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_io;
  } catch (const StreamError& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_io;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "unexpected failure: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_failure;
}

} // namespace vmic
