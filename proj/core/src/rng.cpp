#include "caa/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace caa {

auto Rng::uniform() -> double
{
    return static_cast<double>(engine_() >> 11U) * 0x1.0p-53;
}

auto Rng::uniform_int(std::uint64_t n) -> std::uint64_t
{
    // rejection sampling keeps the draw unbiased
    std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = engine_();
    while (v >= limit) {
        v = engine_();
    }
    return v % n;
}

auto Rng::normal() -> double
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    double const u2 = uniform();
    double const r = std::sqrt(-2.0 * std::log(u1));
    double const theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

auto Rng::poisson(double lambda) -> std::uint64_t
{
    if (lambda <= 0.0) {
        return 0;
    }
    if (lambda < 30.0) {
        // Knuth
        double const l = std::exp(-lambda);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return k - 1;
    }
    // normal approximation, adequate for the corruption noise model
    double const v = std::round(normal(lambda, std::sqrt(lambda)));
    return v < 0.0 ? 0 : static_cast<std::uint64_t>(v);
}

auto mix_seed(std::uint64_t value) -> std::uint64_t
{
    value += 0x9e3779b97f4a7c15ULL;
    value = (value ^ (value >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    value = (value ^ (value >> 27U)) * 0x94d049bb133111ebULL;
    return value ^ (value >> 31U);
}

} // namespace caa
