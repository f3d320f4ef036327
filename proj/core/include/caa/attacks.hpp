#pragma once

#include "caa/catalog.hpp"
#include "caa/model.hpp"
#include "caa/tensor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace caa {

struct AttackSpec {
    AttackKind kind = AttackKind::identity;
    double epsilon = 0.0;
    std::uint32_t steps = 0;
    Norm norm = Norm::linf;
    bool targeted = false;
    std::uint64_t seed = 0;

    friend auto operator==(AttackSpec const&, AttackSpec const&) -> bool = default;
};

// Per-attack constants. Defaults are the published settings; tests override
// individual fields (e.g. momentum = 0, random_start = false).
struct AttackParams {
    double momentum = 0.25;
    bool random_start = true;
    // When set, gradient attacks use this constant step instead of the
    // stagnation schedule.
    std::optional<double> fixed_step;
    double cw_c = 0.5;
    double cw_kappa = 20.0;
    double adam_lr = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double ddn_lr = 1.0;
    double ddn_gamma = 0.05;
    double square_p = 0.8;
    double spsa_delta = 1e-9;
    double spsa_lr = 0.01;
};

struct AttackResult {
    Tensor x_adv;
    Cost cost;
};

// Validates (kind, norm, targeted, target) and input shape, then dispatches.
[[nodiscard]] auto apply_attack(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model,
    std::optional<int> target = std::nullopt, AttackParams const& params = {}) -> AttackResult;

// clip01(x + epsilon * sign(grad))
[[nodiscard]] auto fgsm_step(Tensor const& x, Tensor const& grad, double epsilon) -> Tensor;

// Step length at current_step when the loss never improves:
// max(2 eps * 0.5^floor(current / ceil(total / 10)), eps / 10).
[[nodiscard]] auto adaptive_step_size(double epsilon, std::uint32_t total_steps, std::uint32_t current_step) -> double;

// Stagnation schedule: the step halves (down to the floor) each time the
// best loss has not improved for `window` consecutive steps.
class StepSchedule {
public:
    StepSchedule(double initial, double floor, std::uint32_t window);
    static auto for_budget(double epsilon, std::uint32_t total_steps) -> StepSchedule;

    // Records the loss at the current iterate and returns the step to take.
    auto next(double loss) -> double;
    [[nodiscard]] auto current() const noexcept -> double { return step_; }

private:
    double step_;
    double floor_;
    std::uint32_t window_;
    std::uint32_t stale_ = 0;
    bool started_ = false;
    double best_ = 0.0;
};

[[nodiscard]] auto mt_attack(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model,
    AttackParams const& params = {}) -> AttackResult;
// The per-target inner attacks of mt_attack, in target order (the first
// min(K - 1, 9) classes other than y).
[[nodiscard]] auto mt_candidates(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model,
    AttackParams const& params = {}) -> std::vector<Tensor>;
[[nodiscard]] auto ddn_attack(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model,
    std::optional<int> target = std::nullopt, AttackParams const& params = {}) -> AttackResult;
[[nodiscard]] auto square_attack(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model,
    std::optional<int> target = std::nullopt, AttackParams const& params = {}) -> AttackResult;
[[nodiscard]] auto spatial_attack(Tensor const& x, int y, Classifier const& model, std::optional<int> target = std::nullopt)
    -> AttackResult;

// (L(x + delta v) - L(x - delta v)) / (2 delta) * v with Rademacher v drawn
// from seed.
[[nodiscard]] auto spsa_gradient_estimate(Classifier const& model, Tensor const& x, int y, LossKind const& loss,
    double delta, std::uint64_t seed) -> Tensor;

struct SpatialTransform {
    double tx = 0.0;
    double ty = 0.0;
    double degrees = 0.0;
};

// The 125 grid transforms in scan order: rotation outermost, then x
// translation, then y translation.
[[nodiscard]] auto spatial_grid() -> std::vector<SpatialTransform>;
// Rotation about the image centre followed by translation; bilinear
// sampling, zero outside the image.
[[nodiscard]] auto spatial_transform(Tensor const& x, SpatialTransform const& t) -> Tensor;

// Severity-1 corruption parameters.
struct CorruptionParams {
    double gaussian_sigma = 0.08;
    double shot_scale = 60.0;
    double impulse_fraction = 0.03;
    double brightness_shift = 0.1;
    double contrast_factor = 0.4;
    double pixelate_factor = 0.6;
    double blur_sigma = 1.0;
    double saturate_factor = 0.3;
};

[[nodiscard]] auto corruption_attack(AttackKind kind, Tensor const& x, std::uint64_t seed = 0,
    CorruptionParams const& params = {}) -> Tensor;

// Fraction of examples still correctly classified after PGD-Linf(eps, steps)
// with per-example seeds derived from seed.
[[nodiscard]] auto pgd_robust_accuracy(Classifier const& model, std::span<const Tensor> images, std::span<const int> labels,
    double epsilon, std::uint32_t steps, std::uint64_t seed) -> double;

} // namespace caa
