#include "caa/model.hpp"
#include "caa/rng.hpp"

#include <benchmark/benchmark.h>

using namespace caa;

namespace {

auto input(std::size_t side, std::uint64_t seed) -> Tensor
{
    Rng rng(seed);
    std::vector<float> v(side * side);
    for (auto& x : v) {
        x = static_cast<float>(rng.uniform(0.0, 1.0));
    }
    return Tensor({ side, side, 1 }, std::move(v));
}

auto arch_for(int kind) -> Architecture
{
    switch (kind) {
    case 0:
        return Architecture::linear();
    case 1:
        return Architecture::mlp({ 128 });
    default:
        return Architecture::convnet({ 8 });
    }
}

} // namespace

static void BM_Forward(benchmark::State& state)
{
    auto const side = static_cast<std::uint32_t>(state.range(1));
    auto const m = Classifier::initialize(arch_for(static_cast<int>(state.range(0))), { side, side, 1 }, 10, 1);
    auto const x = input(side, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(m.forward(x));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Forward)->ArgsProduct({ { 0, 1, 2 }, { 10, 28 } });

static void BM_InputGradient(benchmark::State& state)
{
    auto const side = static_cast<std::uint32_t>(state.range(1));
    auto const m = Classifier::initialize(arch_for(static_cast<int>(state.range(0))), { side, side, 1 }, 10, 1);
    auto const x = input(side, 2);
    auto const loss = LossKind::cross_entropy();
    for (auto _ : state) {
        benchmark::DoNotOptimize(m.loss_and_input_grad(x, 3, loss));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_InputGradient)->ArgsProduct({ { 0, 1, 2 }, { 10, 28 } });

BENCHMARK_MAIN();
