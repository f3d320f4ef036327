#include "caa/attacks.hpp"

#include "attack_detail.hpp"
#include "caa/error.hpp"
#include "caa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace caa {

namespace detail {

    auto make_objective(Classifier const& model, int y, std::optional<int> target, LossKind base) -> Objective
    {
        if (target) {
            base.targeted = true;
            return { &model, *target, base, y, target };
        }
        return { &model, y, base, y, std::nullopt };
    }

    void project(std::span<double> x, std::span<const double> x0, double eps, Norm norm)
    {
        auto const n = x.size();
        if (norm == Norm::l2) {
            double sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double const d = x[i] - x0[i];
                sq += d * d;
            }
            double const len = std::sqrt(sq);
            if (len > eps) {
                double const scale = eps / len;
                for (std::size_t i = 0; i < n; ++i) {
                    x[i] = x0[i] + (x[i] - x0[i]) * scale;
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = std::clamp(x[i], x0[i] - eps, x0[i] + eps);
            }
        }
        clip_unit(x);
    }

    void random_start(std::span<double> x, std::span<const double> x0, double eps, Norm norm, Rng& rng)
    {
        auto const n = x.size();
        if (norm == Norm::l2) {
            std::vector<double> dir(n);
            for (double& d : dir) {
                d = rng.normal();
            }
            double const len = l2_norm(dir);
            double const radius = eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = x0[i] + (len > 0.0 ? dir[i] / len * radius : 0.0);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = x0[i] + rng.uniform(-eps, eps);
            }
        }
        project(x, x0, eps, norm);
    }

    auto iterate_gradient(std::span<const double> x0, Objective const& objective, GradientRun run, Rng& rng)
        -> std::vector<double>
    {
        auto const n = x0.size();
        std::vector<double> x(x0.begin(), x0.end());
        std::vector<double> best = x;
        if (run.steps == 0) {
            return best;
        }
        double best_loss = objective.value(x0);
        if (run.random_start) {
            random_start(x, x0, run.epsilon, run.norm, rng);
        }
        std::vector<double> g(n);
        std::vector<double> velocity(n, 0.0);
        std::vector<double> dir(n);
        for (std::uint32_t k = 0; k < run.steps; ++k) {
            auto const e = objective.eval(x, g);
            if ((k > 0 || run.random_start) && e.value >= best_loss) {
                best_loss = e.value;
                best = x;
            }
            double const step = run.fixed_step ? *run.fixed_step : run.schedule.next(e.value);
            std::span<const double> source = g;
            if (run.momentum) {
                double const gn = run.norm == Norm::l2 ? l2_norm(g) : l1_norm(g);
                double const mu = *run.momentum;
                for (std::size_t i = 0; i < n; ++i) {
                    velocity[i] = mu * velocity[i] + (1.0 - mu) * (gn > 0.0 ? g[i] / gn : 0.0);
                }
                source = velocity;
            }
            if (run.norm == Norm::l2) {
                double const len = l2_norm(source);
                for (std::size_t i = 0; i < n; ++i) {
                    dir[i] = len > 0.0 ? source[i] / len : 0.0;
                }
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    dir[i] = sign(source[i]);
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += step * dir[i];
            }
            project(x, x0, run.epsilon, run.norm);
        }
        if (objective.value(x) >= best_loss) {
            best = x;
        }
        return best;
    }

    auto pgd_run(Norm norm, double eps, std::uint32_t steps, AttackParams const& params) -> GradientRun
    {
        GradientRun run;
        run.norm = norm;
        run.epsilon = eps;
        run.steps = steps;
        run.random_start = params.random_start;
        run.schedule = StepSchedule::for_budget(eps, steps);
        run.fixed_step = params.fixed_step;
        return run;
    }

} // namespace detail

using detail::make_objective;

StepSchedule::StepSchedule(double initial, double floor, std::uint32_t window)
    : step_(initial), floor_(floor), window_(std::max<std::uint32_t>(window, 1))
{
}

auto StepSchedule::for_budget(double epsilon, std::uint32_t total_steps) -> StepSchedule
{
    return { 2.0 * epsilon, epsilon / 10.0, (std::max<std::uint32_t>(total_steps, 1) + 9) / 10 };
}

auto StepSchedule::next(double loss) -> double
{
    if (!started_) {
        started_ = true;
        best_ = loss;
    } else if (loss > best_) {
        best_ = loss;
        stale_ = 0;
    } else if (++stale_ >= window_) {
        step_ = std::max(step_ / 2.0, floor_);
        stale_ = 0;
    }
    return step_;
}

auto adaptive_step_size(double epsilon, std::uint32_t total_steps, std::uint32_t current_step) -> double
{
    if (total_steps == 0 || current_step >= total_steps) {
        throw ValidationError("step index outside the schedule");
    }
    std::uint32_t const window = (total_steps + 9) / 10;
    double const halvings = static_cast<double>(current_step / window);
    return std::max(2.0 * epsilon * std::pow(0.5, halvings), epsilon / 10.0);
}

auto fgsm_step(Tensor const& x, Tensor const& grad, double epsilon) -> Tensor
{
    if (grad.size() != x.size()) {
        throw RejectedInput("gradient shape does not match input");
    }
    Tensor out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double const v = static_cast<double>(x.data[i]) + epsilon * sign(static_cast<double>(grad.data[i]));
        out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

namespace {

    auto fgsm(std::span<const double> x0, double eps, detail::Objective const& objective) -> std::vector<double>
    {
        std::vector<double> g(x0.size());
        objective.eval(x0, g);
        std::vector<double> x(x0.begin(), x0.end());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += eps * sign(g[i]);
        }
        clip_unit(x);
        return x;
    }

    auto momentum_run(Norm norm, double eps, std::uint32_t steps, AttackParams const& params) -> detail::GradientRun
    {
        detail::GradientRun run;
        run.norm = norm;
        run.epsilon = eps;
        run.steps = steps;
        run.momentum = params.momentum;
        double const initial = 2.0 * eps / std::max<std::uint32_t>(steps, 1);
        run.schedule = StepSchedule(initial, std::min(eps / 10.0, initial), (std::max<std::uint32_t>(steps, 1) + 9) / 10);
        run.fixed_step = params.fixed_step;
        return run;
    }

    auto targets_of(int y, std::uint32_t num_classes) -> std::vector<int>
    {
        if (num_classes < 2) {
            throw InvalidProblem("multi-targeted attack needs at least two classes");
        }
        std::vector<int> out;
        for (int t = 0; t < static_cast<int>(num_classes) && out.size() < kMultiTargetedMaxTargets; ++t) {
            if (t != y) {
                out.push_back(t);
            }
        }
        return out;
    }

    auto multi_targeted_candidates(AttackSpec const& spec, std::span<const double> x0, int y, Classifier const& model,
        AttackParams const& params) -> std::vector<std::vector<double>>
    {
        std::vector<std::vector<double>> out;
        for (int t : targets_of(y, model.num_classes())) {
            auto const objective = make_objective(model, y, std::nullopt, LossKind::per_target_margin(t));
            Rng rng(derive_seed(spec.seed, t));
            out.push_back(detail::iterate_gradient(x0, objective, detail::pgd_run(spec.norm, spec.epsilon, spec.steps, params), rng));
        }
        return out;
    }

    auto multi_targeted(AttackSpec const& spec, std::span<const double> x0, int y, Classifier const& model,
        AttackParams const& params) -> std::vector<double>
    {
        auto candidates = multi_targeted_candidates(spec, x0, y, model, params);
        std::size_t best = 0;
        double best_margin = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            double const margin = cw_margin_loss(model.logits(candidates[i]), y, std::numeric_limits<double>::infinity());
            if (margin > best_margin) {
                best_margin = margin;
                best = i;
            }
        }
        return std::move(candidates[best]);
    }

    void validate(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model, std::optional<int> target)
    {
        if (!supports_norm(spec.kind, spec.norm)) {
            throw CatalogError(std::string(attack_name(spec.kind)) + " is not available under " + std::string(norm_name(spec.norm)));
        }
        if (x.size() != model.input_size() || shape_product(x.shape) != model.input_size()) {
            throw RejectedInput("input does not match the model's input dims");
        }
        if (!x.in_unit_box()) {
            throw RejectedInput("input lies outside [0,1]");
        }
        if (y < 0 || static_cast<std::uint32_t>(y) >= model.num_classes()) {
            throw RejectedInput("label out of range");
        }
        if (!(spec.epsilon >= 0.0) || !std::isfinite(spec.epsilon)) {
            throw ValidationError("epsilon must be finite and non-negative");
        }
        if (spec.targeted != target.has_value()) {
            throw ValidationError("a target class is required exactly when the attack is targeted");
        }
        if (spec.targeted && is_multi_targeted(spec.kind)) {
            throw ExcludedAttackError(std::string(attack_name(spec.kind)) + " cannot run targeted");
        }
        if (target && (*target < 0 || static_cast<std::uint32_t>(*target) >= model.num_classes() || *target == y)) {
            throw InvalidTarget("target class must differ from the label and lie in range");
        }
    }

} // namespace

auto mt_attack(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model, AttackParams const& params) -> AttackResult
{
    if (spec.targeted) {
        throw ExcludedAttackError("multi-targeted attack cannot run targeted");
    }
    auto const x0 = x.to_doubles();
    auto out = multi_targeted(spec, x0, y, model, params);
    return { Tensor::from_doubles(x.shape, out), attack_cost(spec.kind, spec.steps, model.num_classes()) };
}

auto mt_candidates(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model, AttackParams const& params)
    -> std::vector<Tensor>
{
    std::vector<Tensor> out;
    for (auto const& c : multi_targeted_candidates(spec, x.to_doubles(), y, model, params)) {
        out.push_back(Tensor::from_doubles(x.shape, c));
    }
    return out;
}

auto apply_attack(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model, std::optional<int> target,
    AttackParams const& params) -> AttackResult
{
    validate(spec, x, y, model, target);
    auto const x0 = x.to_doubles();
    double const eps = spec.epsilon;
    std::uint32_t steps = spec.steps;
    std::vector<double> out;
    LossKind const ce = LossKind::cross_entropy();
    Rng rng(spec.seed);

    switch (spec.kind) {
    case AttackKind::identity:
        return { x, {} };
    case AttackKind::fgsm:
        steps = 1;
        out = fgsm(x0, eps, make_objective(model, y, target, ce));
        break;
    case AttackKind::pgd_linf:
    case AttackKind::pgd_l2:
        out = detail::iterate_gradient(x0, make_objective(model, y, target, ce), detail::pgd_run(spec.norm, eps, steps, params), rng);
        break;
    case AttackKind::cw_linf:
        out = detail::iterate_gradient(x0, make_objective(model, y, target, LossKind::cw_margin(params.cw_kappa)),
            detail::pgd_run(Norm::linf, eps, steps, params), rng);
        break;
    case AttackKind::mi_linf:
    case AttackKind::mi_l2:
        out = detail::iterate_gradient(x0, make_objective(model, y, target, ce), momentum_run(spec.norm, eps, steps, params), rng);
        break;
    case AttackKind::mt_linf:
    case AttackKind::mt_l2:
        out = multi_targeted(spec, x0, y, model, params);
        break;
    case AttackKind::cw_l2:
        out = detail::cw_l2_attack(spec, x0, make_objective(model, y, target, LossKind::cw_margin(params.cw_kappa)), params);
        break;
    case AttackKind::ddn:
        return ddn_attack(spec, x, y, model, target, params);
    case AttackKind::square:
        return square_attack(spec, x, y, model, target, params);
    case AttackKind::spsa: {
        AttackSpec s = spec;
        if (spec.norm == Norm::unrestricted) {
            s.epsilon = kUnrestrictedSpsaEpsilon;
            s.steps = kUnrestrictedSpsaSteps;
        }
        steps = s.steps;
        out = detail::spsa_attack(s, x0,
            make_objective(model, y, target, LossKind::cw_margin(std::numeric_limits<double>::infinity())), params);
        break;
    }
    case AttackKind::spatial: {
        Tensor shaped = x;
        shaped.shape = model.input_dims().shape();
        auto r = spatial_attack(shaped, y, model, target);
        r.x_adv.shape = x.shape;
        return r;
    }
    default: {
        Tensor shaped = x;
        shaped.shape = model.input_dims().shape();
        Tensor r = corruption_attack(spec.kind, shaped, spec.seed);
        r.shape = x.shape;
        return { std::move(r), {} };
    }
    }
    return { Tensor::from_doubles(x.shape, out), attack_cost(spec.kind, steps, model.num_classes()) };
}

auto pgd_robust_accuracy(Classifier const& model, std::span<const Tensor> images, std::span<const int> labels, double epsilon,
    std::uint32_t steps, std::uint64_t seed) -> double
{
    if (images.empty() || images.size() != labels.size()) {
        throw ValidationError("images and labels must be non-empty and of equal length");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        AttackSpec spec { AttackKind::pgd_linf, epsilon, steps, Norm::linf, false, derive_seed(seed, i) };
        auto const r = apply_attack(spec, images[i], labels[i], model);
        if (model.predict(r.x_adv.to_doubles()) == labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(images.size());
}

} // namespace caa
