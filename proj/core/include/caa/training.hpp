#pragma once

#include "caa/data.hpp"
#include "caa/model.hpp"

#include <cstdint>

namespace caa {

struct TrainConfig {
    Architecture arch = Architecture::mlp({ 32 });
    double eps = 0.0;              // l-inf radius of the inner PGD; 0 trains on clean inputs
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    double learning_rate = 0.05;   // plain SGD, fixed rate
    std::size_t batch_size = 32;
    std::size_t pgd_steps = 7;     // step length 2.5 * eps / pgd_steps, one random start
};

// Minibatch SGD on cross-entropy where every example is replaced by a 7-step
// l-inf PGD adversary crafted against the current weights. Deterministic in
// config.seed; the returned model records config.eps as its training eps.
// Throws TrainingError when the loss stops being finite.
[[nodiscard]] auto train_adversarial(TrainConfig const& config, Dataset const& data) -> Classifier;

// Empirical-risk minimization with the same initialization, shuffling and
// update rule as train_adversarial.
[[nodiscard]] auto train_standard(TrainConfig const& config, Dataset const& data) -> Classifier;

} // namespace caa
