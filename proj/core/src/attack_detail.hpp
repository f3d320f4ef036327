#pragma once

#include "caa/attacks.hpp"
#include "caa/rng.hpp"

#include <optional>
#include <span>
#include <vector>

namespace caa::detail {

// Loss to ascend plus the success predicate of one (untargeted or targeted)
// attack call.
struct Objective {
    Classifier const* model;
    int label;
    LossKind loss;
    int true_label;
    std::optional<int> target;

    [[nodiscard]] auto value(std::span<const double> x) const -> double { return model->loss(x, label, loss); }
    auto eval(std::span<const double> x, std::span<double> grad) const -> Classifier::Evaluation
    {
        return model->evaluate(x, label, loss, grad);
    }
    [[nodiscard]] auto fooled(int predicted) const noexcept -> bool
    {
        return target ? predicted == *target : predicted != true_label;
    }
};

auto make_objective(Classifier const& model, int y, std::optional<int> target, LossKind base) -> Objective;

// Projects x onto the eps-ball around x0 (linf clip or l2 rescale) and the box.
void project(std::span<double> x, std::span<const double> x0, double eps, Norm norm);
void random_start(std::span<double> x, std::span<const double> x0, double eps, Norm norm, Rng& rng);

struct GradientRun {
    Norm norm = Norm::linf;
    double epsilon = 0.0;
    std::uint32_t steps = 0;
    bool random_start = false;
    std::optional<double> momentum;
    StepSchedule schedule { 0.0, 0.0, 1 };
    std::optional<double> fixed_step;
};

// Iterative sign / normalized gradient ascent with best-iterate tracking.
// Candidates are the input, the random start and every iterate; ties go to
// the later one.
auto iterate_gradient(std::span<const double> x0, Objective const& objective, GradientRun run, Rng& rng)
    -> std::vector<double>;

auto pgd_run(Norm norm, double eps, std::uint32_t steps, AttackParams const& params) -> GradientRun;

auto cw_l2_attack(AttackSpec const& spec, std::span<const double> x0, Objective const& objective, AttackParams const& params)
    -> std::vector<double>;
auto spsa_attack(AttackSpec const& spec, std::span<const double> x0, Objective const& objective, AttackParams const& params)
    -> std::vector<double>;

} // namespace caa::detail
