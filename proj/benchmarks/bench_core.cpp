#include <benchmark/benchmark.h>

#include "coseg/data.hpp"
#include "coseg/model.hpp"
#include "coseg/morphology.hpp"
#include "coseg/objectives.hpp"

using namespace coseg;

namespace {

void BM_Forward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const ModelParams params = init_model(tiny_spec(size, size, 2), 1);
    const Sample s = generate_scene(3, size);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(params, s.image));
    }
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_LossAndGrad(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const ModelParams params = init_model(tiny_spec(size, size, 2), 1);
    const Sample s = generate_scene(3, size);
    const LossConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss_and_grad(params, s.image, s.mask, cfg));
    }
}
BENCHMARK(BM_LossAndGrad)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_Dilate(benchmark::State& state) {
    const Sample s = generate_scene(3, 32);
    const int r = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(dilate(s.mask, r));
    }
}
BENCHMARK(BM_Dilate)->Arg(1)->Arg(3)->Arg(5);

} // namespace

BENCHMARK_MAIN();
