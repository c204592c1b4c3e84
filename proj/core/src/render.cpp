#include "vmic/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vmic/errors.hpp"

namespace vmic {

namespace {

// Integrator warm-up is truncated once the discarded memory falls below
// this fraction of the state (or at kMaxWarmup samples for g close to 1).
constexpr double kWarmupResidual = 1e-12;
constexpr std::size_t kMaxWarmup = 1 << 16;
// Room for the interpolation stencil past the longest tap.
constexpr double kStencil = 4.0;
// -96 dB, the decay target for render tails.
constexpr double kTailFloor = 1.5848931924611134e-05;

ValidityError tag_mic(const ValidityError& e, const std::string& label)
{
  return ValidityError(e.field(), "mic '" + label + "': " + e.what());
}

} // namespace

// ---------------------------------------------------------------------------
// MicVoice

MicVoice::MicVoice(MicSetup setup, ScenePose pose, const EngineOptions& options)
  : setup_(std::move(setup)),
    interpolation_(options.interpolation),
    gain_ceiling_(options.gain_ceiling)
{
  current_ = make_path(pose, setup_.params);
}

std::size_t MicVoice::warmup_length(double g) noexcept
{
  if (g <= 0.0)
    return 1;
  const double n = std::ceil(std::log(kWarmupResidual) / std::log(g)) + 1.0;
  return n >= double(kMaxWarmup) ? kMaxWarmup : static_cast<std::size_t>(n);
}

double MicVoice::history_needed() const noexcept
{
  double need = current_.taps.max_delay() + warmup_length(current_.params.g);
  if (incoming_)
    need = std::max(need, incoming_->taps.max_delay() +
                              warmup_length(incoming_->params.g));
  return need + kStencil;
}

MicVoice::Path MicVoice::make_path(const ScenePose& pose,
                                   const MicParams& params) const
{
  Path p;
  p.pose = pose;
  p.params = params;
  p.taps = tap_set(pose, params, gain_ceiling_);
  p.omni_weight = params.m;
  p.bidi_weight = (1.0 - params.m) * params.c0 / params.d;
  p.integrator = LossyIntegrator(params.g, params.fs);
  return p;
}

double MicVoice::Path::dipole(const FractionalDelayLine& src,
                              Interpolation mode, double extra_delay) const
{
  return taps.front.gain * src.read(taps.front.delay + extra_delay, mode) -
         taps.rear.gain * src.read(taps.rear.delay + extra_delay, mode);
}

double MicVoice::Path::eval(const FractionalDelayLine& src, Interpolation mode)
{
  const double omni = taps.center.gain * src.read(taps.center.delay, mode);
  const double bidi = integrator.step(dipole(src, mode, 0.0));
  return omni_weight * omni + bidi_weight * bidi;
}

double MicVoice::tick(const FractionalDelayLine& source)
{
  const double y = current_.eval(source, interpolation_);
  if (!incoming_)
    return y;
  const double yi = incoming_->eval(source, interpolation_);
  ++fade_pos_;
  const double w = double(fade_pos_) / double(fade_len_);
  const double out = (1.0 - w) * y + w * yi;
  if (fade_pos_ == fade_len_) {
    current_ = std::move(*incoming_);
    incoming_.reset();
  }
  return out;
}

void MicVoice::retarget(const ScenePose& pose, const MicParams& params,
                        std::size_t fade_samples,
                        const FractionalDelayLine& source)
{
  if (!incoming_ && pose == current_.pose && params == current_.params)
    return;
  Path next = make_path(pose, params);
  if (incoming_) {
    current_ = std::move(*incoming_);
    incoming_.reset();
  }
  if (next.bidi_weight != 0.0) {
    // Replay the recent past through the new dipole so its integrator holds
    // the state it would have after running with this configuration all
    // along. Sample n-k sits at extra delay k-1 relative to the next tick.
    const std::size_t warm = warmup_length(params.g);
    for (std::size_t k = warm; k >= 1; --k)
      next.integrator.step(next.dipole(source, interpolation_, double(k - 1)));
  }
  if (fade_samples == 0) {
    current_ = std::move(next);
  } else {
    incoming_ = std::move(next);
    fade_len_ = fade_samples;
    fade_pos_ = 0;
  }
}

// ---------------------------------------------------------------------------
// ControlChannel

void ControlChannel::post(SceneUpdate update)
{
  std::lock_guard lock(mu_);
  queue_.push_back(std::move(update));
}

std::vector<SceneUpdate> ControlChannel::drain()
{
  std::lock_guard lock(mu_);
  std::vector<SceneUpdate> out(std::make_move_iterator(queue_.begin()),
                               std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

bool ControlChannel::empty() const
{
  std::lock_guard lock(mu_);
  return queue_.empty();
}

// ---------------------------------------------------------------------------
// Scene

Point2 trajectory_position(std::span<const TrajectoryPoint> trajectory, double t)
{
  if (trajectory.empty())
    throw std::invalid_argument("empty trajectory");
  if (t <= trajectory.front().time)
    return trajectory.front().position;
  if (t >= trajectory.back().time)
    return trajectory.back().position;
  const auto hi = std::upper_bound(
      trajectory.begin(), trajectory.end(), t,
      [](double v, const TrajectoryPoint& p) { return v < p.time; });
  const auto lo = hi - 1;
  const double span = hi->time - lo->time;
  const double a = span > 0.0 ? (t - lo->time) / span : 1.0;
  return {lo->position.x + a * (hi->position.x - lo->position.x),
          lo->position.y + a * (hi->position.y - lo->position.y)};
}

Scene::Scene(double fs, std::vector<MicSetup> mics, Point2 source,
             EngineOptions options, std::vector<TrajectoryPoint> trajectory)
  : fs_(fs),
    options_(options),
    source_(source),
    trajectory_(std::move(trajectory))
{
  if (!(fs > 0.0))
    throw StreamError("scene sampling rate must be > 0");
  if (mics.empty())
    throw std::invalid_argument("scene needs at least one microphone");
  if (options_.block_size == 0)
    throw std::invalid_argument("block size must be > 0");
  for (std::size_t i = 1; i < trajectory_.size(); ++i)
    if (trajectory_[i].time < trajectory_[i - 1].time)
      throw std::invalid_argument("trajectory times must be non-decreasing");
  if (!trajectory_.empty())
    source_ = trajectory_position(trajectory_, 0.0);

  voices_.reserve(mics.size());
  for (auto& setup : mics) {
    if (setup.params.fs != fs_) {
      std::ostringstream os;
      os << "mic '" << setup.label << "' runs at " << setup.params.fs
         << " Hz but the scene runs at " << fs_ << " Hz";
      throw StreamError(os.str());
    }
    const std::string label = setup.label;
    try {
      const ScenePose pose = local_pose(setup.placement, source_);
      voices_.emplace_back(std::move(setup), pose, options_);
    } catch (const ValidityError& e) {
      throw tag_mic(e, label);
    }
  }
  history_ = FractionalDelayLine(0.0);
  ensure_history();
}

bool Scene::crossfading() const noexcept
{
  return std::any_of(voices_.begin(), voices_.end(),
                     [](const MicVoice& v) { return v.fading(); });
}

void Scene::ensure_history()
{
  double need = 0.0;
  for (const auto& v : voices_)
    need = std::max(need, v.history_needed());
  history_.reserve(need);
}

std::size_t Scene::fade_samples(Smoothing smoothing) const
{
  if (!(smoothing.crossfade_ms > 0.0))
    return 0;
  return static_cast<std::size_t>(std::llround(smoothing.crossfade_ms * 1e-3 * fs_));
}

void Scene::move_source(Point2 position, Smoothing smoothing)
{
  std::vector<ScenePose> poses;
  poses.reserve(voices_.size());
  double need = 0.0;
  for (const auto& v : voices_) {
    try {
      const ScenePose pose = local_pose(v.setup().placement, position);
      const TapSet taps = tap_set(pose, v.params(), options_.gain_ceiling);
      need = std::max(need, taps.max_delay() +
                                double(MicVoice::warmup_length(v.params().g)));
      poses.push_back(pose);
    } catch (const ValidityError& e) {
      throw tag_mic(e, v.setup().label);
    }
  }
  // warm-up reads reach past the new taps
  history_.reserve(need + kStencil);
  const std::size_t fade = fade_samples(smoothing);
  for (std::size_t k = 0; k < voices_.size(); ++k)
    voices_[k].retarget(poses[k], voices_[k].params(), fade, history_);
  source_ = position;
  ensure_history();
}

void Scene::set_mic_params(std::size_t mic, const MicParams& params,
                           Smoothing smoothing)
{
  MicVoice& v = voices_.at(mic);
  if (params.fs != fs_)
    throw StreamError("microphone sampling rate must match the scene's");
  try {
    const TapSet taps = tap_set(v.pose(), params, options_.gain_ceiling);
    history_.reserve(taps.max_delay() + double(MicVoice::warmup_length(params.g)) +
                     kStencil);
  } catch (const ValidityError& e) {
    throw tag_mic(e, v.setup().label);
  }
  v.retarget(v.pose(), params, fade_samples(smoothing), history_);
  ensure_history();
}

void Scene::apply(const SceneUpdate& update, Smoothing smoothing)
{
  std::visit(
      [&](const auto& u) {
        using T = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<T, MoveSource>)
          move_source(u.position, smoothing);
        else
          set_mic_params(u.mic, u.params, smoothing);
      },
      update);
}

void Scene::follow_trajectory(std::size_t block_len)
{
  if (trajectory_.empty() || block_len == 0)
    return;
  const Point2 pos = trajectory_position(trajectory_, double(rendered_) / fs_);
  if (pos == source_)
    return;
  // one fade per block keeps consecutive moves from interrupting each other
  move_source(pos, Smoothing::crossfade(1e3 * double(block_len) / fs_));
}

void Scene::render_block(std::span<const double> input,
                         std::span<double> interleaved_out)
{
  const std::size_t channels = voices_.size();
  if (interleaved_out.size() != input.size() * channels)
    throw std::invalid_argument("output block size must be input size x mic count");
  follow_trajectory(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    history_.push(input[i]);
    double* frame = interleaved_out.data() + i * channels;
    for (std::size_t k = 0; k < channels; ++k)
      frame[k] = voices_[k].tick(history_);
  }
  rendered_ += input.size();
}

std::vector<double> Scene::render_block(std::span<const double> input)
{
  std::vector<double> out(input.size() * voices_.size());
  render_block(input, out);
  return out;
}

std::size_t Scene::tail_samples() const
{
  std::size_t tail = 0;
  for (const auto& v : voices_) {
    std::size_t n = static_cast<std::size_t>(std::ceil(v.taps().max_delay())) +
                    static_cast<std::size_t>(kStencil);
    const MicParams& p = v.params();
    if (p.m < 1.0 && p.g > 0.0)
      n += static_cast<std::size_t>(std::ceil(std::log(kTailFloor) / std::log(p.g)));
    else
      n += 1;
    tail = std::max(tail, n);
  }
  return tail;
}

AudioBuffer render_file(Scene& scene, const AudioBuffer& source)
{
  source.validate();
  if (source.channels != 1)
    throw StreamError("source must be mono (mix down with to_mono first)");
  if (source.fs != scene.fs()) {
    std::ostringstream os;
    os << "source sampling rate " << source.fs << " Hz differs from the engine's "
       << scene.fs() << " Hz; resample the file externally";
    throw StreamError(os.str());
  }
  const std::size_t len = source.samples.size();
  const std::size_t total = len + scene.tail_samples();
  const std::size_t block = scene.options().block_size;
  const std::size_t channels = scene.mic_count();

  AudioBuffer out;
  out.fs = scene.fs();
  out.channels = channels;
  out.samples.assign(total * channels, 0.0);
  std::vector<double> in(block);
  for (std::size_t start = 0; start < total; start += block) {
    const std::size_t n = std::min(block, total - start);
    for (std::size_t i = 0; i < n; ++i)
      in[i] = start + i < len ? source.samples[start + i] : 0.0;
    scene.render_block(std::span(in).first(n),
                       std::span(out.samples).subspan(start * channels, n * channels));
  }
  return out;
}

std::vector<std::size_t> count_overs(const AudioBuffer& buffer)
{
  std::vector<std::size_t> overs(buffer.channels, 0);
  for (std::size_t i = 0; i < buffer.samples.size(); ++i)
    if (std::abs(buffer.samples[i]) > 1.0)
      ++overs[i % buffer.channels];
  return overs;
}

} // namespace vmic
