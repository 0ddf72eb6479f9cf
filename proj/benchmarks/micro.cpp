#include <benchmark/benchmark.h>

#include "rinst/autodiff.hpp"
#include "rinst/baselines.hpp"
#include "rinst/data_io.hpp"
#include "rinst/prior_net.hpp"
#include "rinst/rng.hpp"

using namespace rinst;

namespace {

TensorBuf random_buf(std::size_t c, std::size_t l, std::uint64_t seed) {
  Rng rng(seed);
  TensorBuf t(c, l);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

void BM_Conv1dForwardBackward(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto x = random_buf(64, len, 1);
  const auto w = random_buf(64, 64 * 3, 2);
  const TensorBuf b(1, 64, 0.0);
  for (auto _ : state) {
    Tape tape;
    auto xv = tape.leaf(x, true);
    auto wv = tape.leaf(w, true);
    auto bv = tape.leaf(b, true);
    auto y = tape.conv1d(xv, wv, bv, ConvOptions{3, 1, PadMode::Reflect});
    tape.backward(tape.half_squared_norm(y));
    benchmark::DoNotOptimize(tape.grad(wv).data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Conv1dForwardBackward)->Arg(256)->Arg(1024);

void BM_NetStep(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const PriorNet net(NetConfig{});
  const auto z = random_buf(1, len, 3);
  const auto target = synth(SynthKind::Sines, len, 1).values;
  for (auto _ : state) {
    Tape tape;
    const auto b = net.forward(tape, z);
    tape.backward(tape.huber_fit(b.output, target, 0.001));
    benchmark::DoNotOptimize(tape.grad(b.params[0]).data());
  }
}
BENCHMARK(BM_NetStep)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_TvDenoise(benchmark::State& state) {
  const auto y = random_buf(1, static_cast<std::size_t>(state.range(0)), 4).values();
  for (auto _ : state) benchmark::DoNotOptimize(tv_denoise(y, 0.1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TvDenoise)->Arg(1024)->Arg(16384);

void BM_WaveletDenoise(benchmark::State& state) {
  const auto y = random_buf(1, static_cast<std::size_t>(state.range(0)), 5).values();
  WaveletSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(wavelet_denoise(y, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WaveletDenoise)->Arg(1024)->Arg(16384);

void BM_GaussianFilter(benchmark::State& state) {
  const auto y = random_buf(1, static_cast<std::size_t>(state.range(0)), 6).values();
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_filter(y, 5.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GaussianFilter)->Arg(1024)->Arg(16384);

}  // namespace

BENCHMARK_MAIN();
