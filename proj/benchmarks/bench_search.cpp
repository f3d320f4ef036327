#include "caa/rng.hpp"
#include "caa/search.hpp"

#include <benchmark/benchmark.h>

using namespace caa;

static void BM_NondominatedSort(benchmark::State& state)
{
    Rng rng(3);
    std::vector<Objectives> pop(static_cast<std::size_t>(state.range(0)));
    for (auto& o : pop) {
        o = { rng.uniform(0.0, 1.0), rng.uniform_int(5000) };
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(fast_nondominated_sort(pop));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NondominatedSort)->RangeMultiplier(2)->Range(16, 1024)->Complexity(benchmark::oNSquared);

static void BM_CrowdingDistance(benchmark::State& state)
{
    Rng rng(4);
    std::vector<Objectives> front(static_cast<std::size_t>(state.range(0)));
    for (auto& o : front) {
        o = { rng.uniform(0.0, 1.0), rng.uniform_int(5000) };
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(crowding_distance(front));
    }
}
BENCHMARK(BM_CrowdingDistance)->Range(16, 1024);

// Search loop overhead with a constant-time scorer in place of attacks.
static void BM_SearchMachinery(benchmark::State& state)
{
    SearchConfig cfg;
    cfg.generations = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        PolicyEvaluator ev(cfg, [](Policy const& p) {
            std::uint64_t h = 17;
            for (auto const& e : p.elements) {
                h = derive_seed(h, static_cast<std::uint64_t>(e.kind) * 4096 + e.steps);
            }
            return Objectives { static_cast<double>(h % 1000) / 1000.0, h % 3000 };
        });
        benchmark::DoNotOptimize(nsga2_search(cfg, ev));
    }
}
BENCHMARK(BM_SearchMachinery)->Arg(15)->Arg(40)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
