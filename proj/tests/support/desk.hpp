#pragma once

#include "caa/data.hpp"
#include "caa/model.hpp"

#include <cstdint>

namespace caa::testing {

// Desk-scale defense: an adversarially trained MLP (eps = 0.2) on
// seven-segment digits, plus a held-out pool split into search and
// evaluation partitions.
struct Desk {
    Dataset train;
    Dataset pool;
    Split split;
    Classifier model;
};

inline constexpr double kDeskEps = 0.2;
inline constexpr std::size_t kDeskSearchSize = 50;
inline constexpr std::size_t kDeskEvalSize = 100;

// Built once per process.
[[nodiscard]] auto desk() -> Desk const&;

// Random MLP with the given input size and class count.
[[nodiscard]] auto random_mlp(std::size_t inputs, std::uint32_t classes, std::vector<std::uint32_t> hidden, std::uint64_t seed)
    -> Classifier;

// Linear model z = W x with W = diag(2, 2) and zero bias on 2 inputs.
[[nodiscard]] auto diag_linear() -> Classifier;

} // namespace caa::testing
