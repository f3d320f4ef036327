#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace caa {

// Dense row-major float tensor. Image tensors use HWC layout.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<float> data);

    static auto from_doubles(std::vector<std::size_t> shape, std::span<const double> values) -> Tensor;

    [[nodiscard]] auto size() const noexcept -> std::size_t { return data.size(); }
    [[nodiscard]] auto to_doubles() const -> std::vector<double>;
    [[nodiscard]] auto in_unit_box() const noexcept -> bool;

    friend auto operator==(Tensor const&, Tensor const&) -> bool = default;
};

[[nodiscard]] auto shape_product(std::span<const std::size_t> shape) noexcept -> std::size_t;

// Norms of the difference a - b, accumulated in double precision.
[[nodiscard]] auto linf_distance(std::span<const float> a, std::span<const float> b) -> double;
[[nodiscard]] auto l2_distance(std::span<const float> a, std::span<const float> b) -> double;

[[nodiscard]] auto l1_norm(std::span<const double> v) noexcept -> double;
[[nodiscard]] auto l2_norm(std::span<const double> v) noexcept -> double;
[[nodiscard]] auto linf_norm(std::span<const double> v) noexcept -> double;

// sign(0) == 0
[[nodiscard]] constexpr auto sign(double v) noexcept -> double
{
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
}

void clip_unit(std::span<double> v) noexcept;

} // namespace caa
