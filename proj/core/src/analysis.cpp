#include "vmic/analysis.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include "fft.hpp"
#include "vmic/errors.hpp"

namespace vmic {

namespace {

// Nominal third-octave names for k = -15 .. 13 (center 1000 * 2^(k/3)).
constexpr int kFirstNominal = -15;
constexpr std::array<const char*, 29> kNominal = {
    "31.5", "40",   "50",   "63",    "80",   "100",   "125", "160",
    "200",  "250",  "315",  "400",   "500",  "630",   "800", "1k",
    "1.25k", "1.6k", "2k",  "2.5k",  "3.15k", "4k",   "5k",  "6.3k",
    "8k",   "10k",  "12.5k", "16k",  "20k"};

std::string nominal_label(int k)
{
  const int i = k - kFirstNominal;
  if (i >= 0 && i < int(kNominal.size()))
    return kNominal[std::size_t(i)];
  std::ostringstream os;
  os << std::pow(2.0, k / 3.0) * 1000.0;
  return os.str();
}

void check_frequency(double f, const MicParams& p)
{
  if (!(f > 0.0 && f <= 0.5 * p.fs)) {
    std::ostringstream os;
    os << "frequency " << f << " Hz outside (0, fs/2]";
    throw RangeError(os.str());
  }
}

// Runs body(i) for i in [0, n) on up to `workers` threads. Results must be
// written to per-index slots; the first exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body)
{
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers)
            body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

std::vector<double> render_to_length(Scene& scene, std::span<const double> input,
                                     std::size_t total)
{
  const std::size_t block = scene.options().block_size;
  std::vector<double> out(total, 0.0);
  std::vector<double> in(block);
  for (std::size_t start = 0; start < total; start += block) {
    const std::size_t n = std::min(block, total - start);
    for (std::size_t i = 0; i < n; ++i)
      in[i] = start + i < input.size() ? input[start + i] : 0.0;
    scene.render_block(std::span(in).first(n), std::span(out).subspan(start, n));
  }
  return out;
}

} // namespace

std::vector<double> angle_grid(std::size_t count)
{
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = kTwoPi * double(i) / double(count);
  return grid;
}

// ---------------------------------------------------------------------------
// BandSet

BandSet::BandSet(std::vector<double> edges, std::vector<std::string> labels,
                 double fs)
  : edges_(std::move(edges)), labels_(std::move(labels))
{
  if (labels_.empty() || edges_.size() != labels_.size() + 1)
    throw RangeError("band set needs n labels and n + 1 edges, n >= 1");
  if (!(edges_.front() > 0.0))
    throw RangeError("band edges must be > 0 Hz");
  for (std::size_t i = 1; i < edges_.size(); ++i)
    if (!(edges_[i] > edges_[i - 1]))
      throw RangeError("band edges must be strictly increasing");
  if (edges_.back() > 0.5 * fs) {
    std::ostringstream os;
    os << "top band edge " << edges_.back() << " Hz exceeds fs/2";
    throw RangeError(os.str());
  }
}

BandSet BandSet::third_octave(double fs, double lo_center, double hi_center)
{
  const int k_lo = int(std::lround(3.0 * std::log2(lo_center / 1000.0)));
  const int k_hi = int(std::lround(3.0 * std::log2(hi_center / 1000.0)));
  std::vector<double> edges;
  std::vector<std::string> labels;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double lo = 1000.0 * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = 1000.0 * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    if (hi > 0.5 * fs)
      break;
    if (edges.empty())
      edges.push_back(lo);
    edges.push_back(hi);
    labels.push_back(nominal_label(k));
  }
  return BandSet(std::move(edges), std::move(labels), fs);
}

double BandSet::center(std::size_t band) const
{
  return std::sqrt(lower(band) * upper(band));
}

std::size_t BandSet::find(double f) const
{
  if (f < edges_.front() || f >= edges_.back())
    return size();
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), f);
  return std::size_t(it - edges_.begin()) - 1;
}

std::vector<double> band_energies(std::span<const double> power,
                                  std::size_t fft_size, std::size_t samples,
                                  double fs, const BandSet& bands)
{
  if (power.size() != fft_size / 2 + 1)
    throw RangeError("power spectrum must hold fft_size/2 + 1 bins");
  std::vector<double> energy(bands.size(), 0.0);
  const double norm = 1.0 / (double(fft_size) * double(samples));
  for (std::size_t k = 0; k < power.size(); ++k) {
    const std::size_t b = bands.find(double(k) * fs / double(fft_size));
    if (b == bands.size())
      continue;
    const bool unpaired = k == 0 || (fft_size % 2 == 0 && k == fft_size / 2);
    energy[b] += (unpaired ? 1.0 : 2.0) * power[k] * norm;
  }
  return energy;
}

// ---------------------------------------------------------------------------
// Monochromatic analysis

PatternTable monochromatic_pattern(const MicParams& params, double f, double r,
                                   std::span<const double> angles,
                                   IntegratorMode mode)
{
  params.validate();
  check_frequency(f, params);
  check_validity(ScenePose::make(r, 0.0), params.d);
  PatternTable t;
  t.kind = PatternKind::monochromatic;
  t.angles.assign(angles.begin(), angles.end());
  t.frequencies = {f};
  t.distances = {r};
  t.mode = mode;
  t.params = params;
  t.magnitude.reserve(angles.size());
  for (double theta : angles)
    t.magnitude.push_back(
        std::abs(directivity_gain(ScenePose::make(r, theta), params, f, mode)));
  return t;
}

DeviationMap limit_case_deviation(const MicParams& params,
                                  std::span<const double> frequencies,
                                  std::span<const double> distances,
                                  std::span<const double> angles,
                                  IntegratorMode mode)
{
  params.validate();
  DeviationMap map;
  map.frequencies.assign(frequencies.begin(), frequencies.end());
  map.distances.assign(distances.begin(), distances.end());
  map.mode = mode;
  map.params = params;
  map.deviation.reserve(frequencies.size() * distances.size());
  for (double f : frequencies) {
    check_frequency(f, params);
    for (double r : distances) {
      double worst = 0.0;
      for (double theta : angles) {
        const double model =
            std::abs(directivity_gain(ScenePose::make(r, theta), params, f, mode));
        const double classic = std::abs(classical_directivity(params.m, theta));
        worst = std::max(worst, std::abs(model - classic));
      }
      map.deviation.push_back(worst);
    }
  }
  return map;
}

ProximityCurve proximity_curve(const MicParams& params, double theta,
                               double f_low, double f_ref,
                               std::span<const double> distances,
                               IntegratorMode mode)
{
  params.validate();
  if (!(f_low < f_ref))
    throw RangeError("proximity curve needs f_low < f_ref");
  check_frequency(f_low, params);
  check_frequency(f_ref, params);
  if (distances.empty())
    throw RangeError("proximity curve needs at least one distance");

  ProximityCurve c;
  c.distances.assign(distances.begin(), distances.end());
  c.theta = normalize_angle(theta);
  c.f_low = f_low;
  c.f_ref = f_ref;
  c.mode = mode;
  c.params = params;
  c.boost_db.reserve(distances.size());
  for (double r : distances) {
    const ScenePose pose = ScenePose::make(r, theta);
    const double low = std::abs(directivity_gain(pose, params, f_low, mode));
    const double ref = std::abs(directivity_gain(pose, params, f_ref, mode));
    c.boost_db.push_back(20.0 * std::log10(low / ref));
  }
  const auto far = std::max_element(c.distances.begin(), c.distances.end());
  const double offset = c.boost_db[std::size_t(far - c.distances.begin())];
  for (double& b : c.boost_db)
    b -= offset;
  return c;
}

// ---------------------------------------------------------------------------
// Engine-based analysis

PatternTable subband_pattern(std::span<const double> stimulus,
                             const MicParams& params,
                             std::span<const double> angles, double r,
                             const BandSet& bands, const SubbandOptions& options)
{
  params.validate();
  if (stimulus.empty())
    throw StreamError("subband analysis needs a non-empty stimulus");
  if (bands.size() == 0)
    throw RangeError("subband analysis needs at least one band");

  const auto make_scene = [&](const MicParams& p, double theta) {
    MicSetup mic{"analysis", MicPlacement{}, p};
    return Scene(p.fs, {mic}, {r * std::cos(theta), r * std::sin(theta)},
                 options.engine);
  };

  MicParams omni = params;
  omni.m = 1.0;
  std::vector<Scene> scenes;
  scenes.reserve(angles.size());
  Scene reference = make_scene(omni, 0.0);
  std::size_t tail = reference.tail_samples();
  for (double theta : angles) {
    scenes.push_back(make_scene(params, theta));
    tail = std::max(tail, scenes.back().tail_samples());
  }
  const std::size_t total = stimulus.size() + tail;
  const std::size_t fft_size = std::bit_ceil(total);
  const detail::RealFft fft(fft_size);

  const auto ref_out = render_to_length(reference, stimulus, total);
  const auto ref_energy =
      band_energies(fft.power(ref_out), fft_size, total, params.fs, bands);
  double ref_total = 0.0;
  for (double x : ref_out)
    ref_total += x * x;
  ref_total /= double(total);
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (!(ref_energy[b] > options.silence_floor * ref_total)) {
      throw BandSilenceError("stimulus carries no energy in band " +
                             bands.labels()[b] + " Hz");
    }
  }

  PatternTable t;
  t.kind = PatternKind::subband;
  t.angles.assign(angles.begin(), angles.end());
  for (std::size_t b = 0; b < bands.size(); ++b)
    t.frequencies.push_back(bands.center(b));
  t.band_labels = bands.labels();
  t.distances = {r};
  t.mode = IntegratorMode::lossy;
  t.params = params;
  t.magnitude.assign(angles.size() * bands.size(), 0.0);

  parallel_for(angles.size(), options.workers, [&](std::size_t a) {
    const auto out = render_to_length(scenes[a], stimulus, total);
    const auto energy =
        band_energies(fft.power(out), fft_size, total, params.fs, bands);
    for (std::size_t b = 0; b < bands.size(); ++b)
      t.magnitude[t.index(a, b, 0)] = std::sqrt(energy[b] / ref_energy[b]);
  });
  return t;
}

EnergyBalance energy_balance(std::span<const double> signal, double fs,
                             const BandSet& bands, double frame_ms)
{
  if (!(frame_ms >= 10.0))
    throw RangeError("energy balance frames must be at least 10 ms");
  if (signal.empty())
    throw StreamError("energy balance of an empty signal");
  const auto frame = static_cast<std::size_t>(std::llround(frame_ms * 1e-3 * fs));
  const detail::RealFft fft(frame);

  EnergyBalance eb;
  eb.fs = fs;
  eb.frame_seconds = double(frame) / fs;
  eb.bands = bands;
  for (std::size_t start = 0; start < signal.size(); start += frame) {
    const auto chunk = signal.subspan(start, std::min(frame, signal.size() - start));
    double total = 0.0;
    for (double x : chunk)
      total += x * x;
    eb.total.push_back(total / double(chunk.size()));
    eb.energy.push_back(band_energies(fft.power(chunk), frame, chunk.size(), fs, bands));
  }
  return eb;
}

// ---------------------------------------------------------------------------
// Stimuli

namespace {

void scale_to_rms(std::vector<double>& x, double rms)
{
  double acc = 0.0;
  for (double v : x)
    acc += v * v;
  const double current = std::sqrt(acc / double(x.size()));
  if (current > 0.0)
    for (double& v : x)
      v *= rms / current;
}

} // namespace

std::vector<double> white_noise(std::size_t samples, double rms,
                                std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(samples);
  for (double& v : x)
    v = normal(rng);
  if (!x.empty())
    scale_to_rms(x, rms);
  return x;
}

std::vector<double> pink_noise(std::size_t samples, double rms,
                               std::uint64_t seed)
{
  if (samples < 2)
    return std::vector<double>(samples, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const detail::RealFft fft(samples);
  std::vector<Complex> half(fft.bins());
  for (std::size_t k = 1; k < half.size(); ++k)
    half[k] = Complex(normal(rng), normal(rng)) / std::sqrt(double(k));
  if (samples % 2 == 0)
    half.back() = Complex(half.back().real() * std::sqrt(2.0), 0.0);
  auto x = fft.inverse(half);
  scale_to_rms(x, rms);
  return x;
}

std::vector<double> sine_tone(std::size_t samples, double f, double fs,
                              double amplitude)
{
  std::vector<double> x(samples);
  for (std::size_t n = 0; n < samples; ++n)
    x[n] = amplitude * std::sin(kTwoPi * f * double(n) / fs);
  return x;
}

} // namespace vmic
