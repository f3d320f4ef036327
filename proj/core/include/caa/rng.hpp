#pragma once

#include <cstdint>
#include <random>

namespace caa {

// Portable random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the distributions below are written out
// so that draws are identical on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    auto next_u64() -> std::uint64_t { return engine_(); }
    // Uniform in [0, 1).
    auto uniform() -> double;
    auto uniform(double lo, double hi) -> double { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n); n must be positive.
    auto uniform_int(std::uint64_t n) -> std::uint64_t;
    auto normal() -> double;
    auto normal(double mean, double stddev) -> double { return mean + stddev * normal(); }
    // +1 or -1 with equal probability.
    auto rademacher() -> double { return (next_u64() >> 63U) != 0U ? 1.0 : -1.0; }
    auto bernoulli(double p) -> bool { return uniform() < p; }
    auto poisson(double lambda) -> std::uint64_t;

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 finalizer; used to derive independent sub-seeds.
auto mix_seed(std::uint64_t value) -> std::uint64_t;

template <typename... Parts>
auto derive_seed(std::uint64_t base, Parts... parts) -> std::uint64_t
{
    std::uint64_t h = mix_seed(base);
    ((h = mix_seed(h ^ (static_cast<std::uint64_t>(parts) + 0x9e3779b97f4a7c15ULL))), ...);
    return h;
}

} // namespace caa
