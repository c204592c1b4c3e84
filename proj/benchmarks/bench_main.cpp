#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "vmic/analysis.hpp"
#include "vmic/render.hpp"
#include "vmic/response.hpp"

using namespace vmic;

namespace {

std::vector<MicSetup> ring(std::size_t count)
{
  std::vector<MicSetup> mics;
  for (std::size_t k = 0; k < count; ++k) {
    const double a = 6.283185307179586 * double(k) / double(count);
    MicParams p;
    p.m = double(k % 5) / 4.0;
    mics.push_back({"m" + std::to_string(k), {{0.5 * std::cos(a), 0.5 * std::sin(a)}, a}, p});
  }
  return mics;
}

} // namespace

// Samples per second through a scene; arg 0 is the mic count, arg 1 selects
// Lagrange interpolation.
static void BM_RenderBlock(benchmark::State& state)
{
  EngineOptions o;
  o.interpolation = state.range(1) ? Interpolation::lagrange3 : Interpolation::linear;
  Scene scene(44100, ring(static_cast<std::size_t>(state.range(0))), {2.0, 1.0}, o);
  const auto input = white_noise(o.block_size, 0.1, 1);
  std::vector<double> out(o.block_size * scene.mic_count());
  for (auto _ : state) {
    scene.render_block(input, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(o.block_size));
  state.counters["audio_seconds"] = benchmark::Counter(
      double(o.block_size) / 44100.0 * double(state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RenderBlock)->ArgsProduct({{1, 8, 32}, {0, 1}});

// Render while the source keeps moving, so every block crossfades.
static void BM_RenderMoving(benchmark::State& state)
{
  Scene scene(44100, ring(8), {2.0, 1.0});
  const auto input = white_noise(256, 0.1, 2);
  std::vector<double> out(256 * scene.mic_count());
  double t = 0.0;
  for (auto _ : state) {
    t += 0.01;
    scene.move_source({2.0 * std::cos(t), 2.0 * std::sin(t)});
    scene.render_block(input, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_RenderMoving);

static void BM_GlobalResponse(benchmark::State& state)
{
  MicParams p;
  const auto grid = default_frequency_grid(p.fs);
  const auto pose = ScenePose::make(0.3, 0.7);
  for (auto _ : state)
    benchmark::DoNotOptimize(global_response(pose, p, grid, IntegratorMode::lossy));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.size()));
}
BENCHMARK(BM_GlobalResponse);

static void BM_MonochromaticPattern(benchmark::State& state)
{
  MicParams p;
  const auto angles = angle_grid(360);
  for (auto _ : state)
    benchmark::DoNotOptimize(monochromatic_pattern(p, 1000.0, 0.5, angles, IntegratorMode::lossy));
}
BENCHMARK(BM_MonochromaticPattern);

static void BM_SubbandPattern(benchmark::State& state)
{
  MicParams p;
  const auto stimulus = pink_noise(44100, 0.1, 3);
  const auto angles = angle_grid(12);
  const auto bands = BandSet::third_octave(44100);
  for (auto _ : state)
    benchmark::DoNotOptimize(subband_pattern(stimulus, p, angles, 1.0, bands));
}
BENCHMARK(BM_SubbandPattern)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
