// Serial reference vs OpenMP backend for the three data-parallel kernels.

#include <benchmark/benchmark.h>

#include "heraldx/config.hpp"
#include "heraldx/montecarlo.hpp"
#include "heraldx/pipeline.hpp"
#include "heraldx/spdc.hpp"

using namespace heraldx;

namespace {

spdc::Backend backend_of(const benchmark::State& state) {
  return state.range(0) ? spdc::Backend::Parallel : spdc::Backend::Serial;
}

const pipeline::Setup& setup() {
  static const pipeline::Setup s([] {
    config::RunConfig c;
    c.seed = 1;
    c.source.pair_rate = 2000.0;
    c.source.stray_rate = {3000.0, 2500.0, 3750.0};
    c.source.slice_s = 1.0;
    c.calibrate_ref_rate = 0.0;
    return c;
  }());
  return s;
}

void BM_BiphotonAmplitude(benchmark::State& state) {
  const auto& cfg = setup().config();
  for (auto _ : state) {
    auto amp = spdc::biphoton_amplitude(cfg.spdc, cfg.model.grid, backend_of(state));
    benchmark::DoNotOptimize(amp.values().data());
  }
}

void BM_CoincidenceRate(benchmark::State& state) {
  const auto& s = setup();
  const auto filter = spdc::transmit_filter(s.config().splitter, s.splitter_material());
  const auto loss = s.pair_loss();
  for (auto _ : state) benchmark::DoNotOptimize(spdc::coincidence_rate(s.amplitude(), filter, loss, backend_of(state)));
}

void BM_SliceBatch(benchmark::State& state) {
  const auto& s = setup();
  const auto& cfg = s.config();
  const mc::PairSampler sampler(s.amplitude());
  mc::PairOptics optics{cfg.splitter, s.splitter_material(), s.air(), cfg.spdc.pump_energy_kev};
  auto source = cfg.source;
  source.seed = *cfg.seed;
  source.duration_s = 16.0;
  const mc::SliceSource src(source, cfg.detectors, &sampler, &optics);
  for (auto _ : state) {
    auto slices = src.batch(0, src.slice_count(), backend_of(state));
    benchmark::DoNotOptimize(slices.data());
  }
}

}  // namespace

BENCHMARK(BM_BiphotonAmplitude)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoincidenceRate)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SliceBatch)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
