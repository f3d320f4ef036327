#pragma once

#include "caa/model.hpp"
#include "caa/tensor.hpp"

#include <span>

namespace caa {

// Central differences (L(x + h e_i) - L(x - h e_i)) / 2h per coordinate,
// evaluated in double precision. Uses only forward passes.
[[nodiscard]] auto finite_difference_grad(Classifier const& model, Tensor const& x, int y, LossKind const& loss, double h) -> Tensor;

// max_i |a_i - b_i| / max(||a||_inf, ||b||_inf); 0 when both vanish.
[[nodiscard]] auto max_relative_error(std::span<const float> a, std::span<const float> b) -> double;
[[nodiscard]] auto max_relative_error(std::span<const double> a, std::span<const double> b) -> double;

// True when no ReLU unit and no branch of the loss (runner-up index, margin
// clamp) changes within the central-difference stencil of radius h, i.e. the
// finite-difference estimate is not straddling a kink.
[[nodiscard]] auto stencil_is_smooth(Classifier const& model, Tensor const& x, int y, LossKind const& loss, double h) -> bool;

} // namespace caa
