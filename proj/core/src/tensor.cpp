#include "caa/tensor.hpp"

#include "caa/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace caa {

Tensor::Tensor(std::vector<std::size_t> s)
    : shape(std::move(s))
    , data(shape_product(shape), 0.0F)
{
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<float> d)
    : shape(std::move(s))
    , data(std::move(d))
{
    if (shape_product(shape) != data.size()) {
        throw RejectedInput("tensor shape does not match data length");
    }
}

auto Tensor::from_doubles(std::vector<std::size_t> shape, std::span<const double> values) -> Tensor
{
    std::vector<float> d(values.size());
    std::transform(values.begin(), values.end(), d.begin(), [](double v) { return static_cast<float>(v); });
    return Tensor(std::move(shape), std::move(d));
}

auto Tensor::to_doubles() const -> std::vector<double>
{
    return { data.begin(), data.end() };
}

auto Tensor::in_unit_box() const noexcept -> bool
{
    return std::all_of(data.begin(), data.end(), [](float v) { return v >= 0.0F && v <= 1.0F; });
}

auto shape_product(std::span<const std::size_t> shape) noexcept -> std::size_t
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t { 1 }, std::multiplies<> {});
}

auto linf_distance(std::span<const float> a, std::span<const float> b) -> double
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
    return m;
}

auto l2_distance(std::span<const float> a, std::span<const float> b) -> double
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double const d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

auto l1_norm(std::span<const double> v) noexcept -> double
{
    double s = 0.0;
    for (double x : v) {
        s += std::abs(x);
    }
    return s;
}

auto l2_norm(std::span<const double> v) noexcept -> double
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

auto linf_norm(std::span<const double> v) noexcept -> double
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

void clip_unit(std::span<double> v) noexcept
{
    for (double& x : v) {
        x = std::clamp(x, 0.0, 1.0);
    }
}

} // namespace caa
