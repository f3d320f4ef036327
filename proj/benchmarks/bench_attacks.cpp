#include "caa/attacks.hpp"
#include "caa/policy.hpp"
#include "caa/rng.hpp"

#include <benchmark/benchmark.h>

using namespace caa;

namespace {

struct Fixture {
    Classifier model = Classifier::initialize(Architecture::mlp({ 64 }), { 10, 10, 1 }, 10, 5);
    Tensor x;

    Fixture()
    {
        Rng rng(6);
        std::vector<float> v(100);
        for (auto& p : v) {
            p = static_cast<float>(rng.uniform(0.0, 1.0));
        }
        x = Tensor({ 10, 10, 1 }, std::move(v));
    }
};

auto fixture() -> Fixture const&
{
    static Fixture const f;
    return f;
}

} // namespace

static void BM_Attack(benchmark::State& state)
{
    auto const kind = static_cast<AttackKind>(state.range(0));
    auto const steps = static_cast<std::uint32_t>(state.range(1));
    Norm const norm = supports_norm(kind, Norm::linf) ? Norm::linf : Norm::l2;
    AttackSpec const spec { kind, norm == Norm::linf ? 0.1 : 1.0, steps, norm, false, 9 };
    auto const& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_attack(spec, f.x, 0, f.model));
    }
    state.SetLabel(std::string(attack_name(kind)));
}
BENCHMARK(BM_Attack)
    ->Args({ static_cast<int>(AttackKind::fgsm), 1 })
    ->Args({ static_cast<int>(AttackKind::pgd_linf), 50 })
    ->Args({ static_cast<int>(AttackKind::mt_linf), 20 })
    ->Args({ static_cast<int>(AttackKind::cw_linf), 50 })
    ->Args({ static_cast<int>(AttackKind::spsa), 20 })
    ->Args({ static_cast<int>(AttackKind::ddn), 50 })
    ->Args({ static_cast<int>(AttackKind::square), 200 })
    ->Unit(benchmark::kMicrosecond);

static void BM_PolicyRun(benchmark::State& state)
{
    auto const& f = fixture();
    std::vector<Tensor> const images(static_cast<std::size_t>(state.range(0)), f.x);
    std::vector<int> const labels(images.size(), 0);
    Policy const p { { { AttackKind::mi_linf, 0.05, 20 }, { AttackKind::pgd_linf, 0.1, 20 } }, Norm::linf, 0.1, 1 };
    RunOptions opts;
    opts.workers = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_policy(p, images, labels, f.model, opts));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyRun)->Arg(1)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
