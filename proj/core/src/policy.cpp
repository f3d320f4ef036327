#include "caa/policy.hpp"

#include "caa/error.hpp"
#include "caa/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace caa {

void validate_policy(Policy const& policy, bool targeted)
{
    auto const n = policy.elements.size();
    if (n < 1 || n > kMaxPolicyLength) {
        throw ValidationError("policy length must be between 1 and 7, got " + std::to_string(n));
    }
    if (policy.restarts < 1) {
        throw ValidationError("policy restarts must be at least 1");
    }
    if (!std::isfinite(policy.eps_global) || policy.eps_global < 0.0) {
        throw ValidationError("eps_global must be finite and non-negative");
    }
    if (policy.norm == Norm::unrestricted && policy.eps_global != 1.0) {
        throw ValidationError("unrestricted policies use eps_global = 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto const& e = policy.elements[i];
        std::string const where = "element " + std::to_string(i) + " (" + std::string(attack_name(e.kind)) + ")";
        if (!supports_norm(e.kind, policy.norm)) {
            throw ValidationError(where + " does not run under " + std::string(norm_name(policy.norm)));
        }
        if (!std::isfinite(e.epsilon) || e.epsilon < 0.0 || e.epsilon > policy.eps_global) {
            throw ValidationError(where + " epsilon outside [0, eps_global]");
        }
        if (e.steps > step_limit(e.kind, policy.norm)) {
            throw ValidationError(where + " steps above the limit of " + std::to_string(step_limit(e.kind, policy.norm)));
        }
        if (targeted && is_multi_targeted(e.kind)) {
            throw ValidationError(where + " is excluded from targeted policies");
        }
    }
}

auto policy_complexity(Policy const& policy, std::uint32_t num_classes) -> Cost
{
    Cost total;
    for (auto const& e : policy.elements) {
        total += attack_cost(e.kind, e.kind == AttackKind::fgsm ? 1 : e.steps, num_classes);
    }
    total.gradient_evals *= policy.restarts;
    total.queries *= policy.restarts;
    return total;
}

auto reproject(Tensor const& x_orig, Tensor const& x_cur, double eps_global, Norm norm) -> Tensor
{
    if (!(eps_global >= 0.0)) {
        throw ValidationError("eps_global must be non-negative");
    }
    if (x_orig.size() != x_cur.size()) {
        throw RejectedInput("reproject needs tensors of equal shape");
    }
    Tensor out = x_cur;
    auto const n = x_cur.size();
    if (norm == Norm::l2) {
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double const d = static_cast<double>(x_cur.data[i]) - static_cast<double>(x_orig.data[i]);
            sq += d * d;
        }
        double const len = std::sqrt(sq);
        if (len > eps_global) {
            double const scale = eps_global / len;
            for (std::size_t i = 0; i < n; ++i) {
                double const o = x_orig.data[i];
                out.data[i] = static_cast<float>(o + (static_cast<double>(x_cur.data[i]) - o) * scale);
            }
        }
    } else if (norm == Norm::linf) {
        for (std::size_t i = 0; i < n; ++i) {
            double const o = x_orig.data[i];
            double const c = x_cur.data[i];
            if (c > o + eps_global || c < o - eps_global) {
                out.data[i] = static_cast<float>(std::clamp(c, o - eps_global, o + eps_global));
            }
        }
    }
    for (float& v : out.data) {
        v = std::clamp(v, 0.0F, 1.0F);
    }
    return out;
}

auto stage_seed(std::uint64_t base, std::uint32_t restart, std::uint32_t ordinal, std::uint64_t example_id) -> std::uint64_t
{
    return derive_seed(base, restart, ordinal, example_id);
}

auto PolicyOutcome::robust_accuracy() const -> double
{
    if (success_mask.empty()) {
        return 0.0;
    }
    auto const fooled = std::count(success_mask.begin(), success_mask.end(), true);
    return 1.0 - static_cast<double>(fooled) / static_cast<double>(success_mask.size());
}

auto default_workers() -> std::size_t
{
    if (char const* env = std::getenv("CAA_WORKERS")) {
        char* end = nullptr;
        unsigned long const v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return v;
        }
    }
    return 1;
}

namespace {

    struct ExampleResult {
        Tensor adversary;
        bool success = false;
        bool clean = false;
        std::vector<bool> stages;
        Cost cost;
    };

    auto run_example(Policy const& policy, Tensor const& x, int y, std::optional<int> target, std::uint64_t id,
        Classifier const& judge, Classifier const& generator, RunOptions const& options) -> ExampleResult
    {
        auto const fooled = [&](Tensor const& t) {
            int const p = judge.predict(t.to_doubles());
            return target ? p == *target : p != y;
        };
        ExampleResult r;
        r.stages.assign(policy.elements.size(), false);
        r.clean = fooled(x);
        if (r.clean && options.stop_on_success) {
            r.adversary = x;
            r.success = true;
            return r;
        }
        std::optional<Tensor> recorded;
        std::optional<Tensor> first_final;
        bool const lp = policy.norm != Norm::unrestricted;
        for (std::uint32_t restart = 0; restart < policy.restarts; ++restart) {
            Tensor cur = x;
            std::uint32_t ordinal = 0;
            bool stop = false;
            for (std::size_t n = 0; n < policy.elements.size(); ++n) {
                auto const& e = policy.elements[n];
                if (e.kind != AttackKind::identity) {
                    AttackSpec const spec { e.kind, e.epsilon, e.steps, policy.norm, target.has_value(),
                        stage_seed(options.seed, restart, ordinal++, id) };
                    auto res = apply_attack(spec, cur, y, generator, target, options.params);
                    r.cost += res.cost;
                    cur = lp ? reproject(x, res.x_adv, policy.eps_global, policy.norm) : std::move(res.x_adv);
                }
                bool const f = fooled(cur);
                if (f) {
                    r.stages[n] = true;
                    if (!recorded && e.kind != AttackKind::identity) {
                        recorded = cur;
                    }
                    if (options.stop_on_success) {
                        stop = true;
                        break;
                    }
                }
            }
            if (restart == 0) {
                first_final = cur;
            }
            if (stop) {
                break;
            }
        }
        r.success = r.clean || std::find(r.stages.begin(), r.stages.end(), true) != r.stages.end();
        r.adversary = recorded ? std::move(*recorded) : std::move(*first_final);
        return r;
    }

} // namespace

auto run_policy(Policy const& policy, std::span<const Tensor> images, std::span<const int> labels, Classifier const& model,
    RunOptions const& options) -> PolicyOutcome
{
    validate_policy(policy, !options.targets.empty());
    if (images.empty() || images.size() != labels.size()) {
        throw ValidationError("policy batch must be non-empty with one label per image");
    }
    if (!options.targets.empty() && options.targets.size() != images.size()) {
        throw ValidationError("targeted runs need one target per example");
    }
    if (!options.example_ids.empty() && options.example_ids.size() != images.size()) {
        throw ValidationError("example ids must match the batch size");
    }
    Classifier const& generator = options.generation_model != nullptr ? *options.generation_model : model;
    if (generator.input_size() != model.input_size()) {
        throw RejectedInput("generation model input dims differ from the judged model");
    }

    auto const count = images.size();
    std::vector<ExampleResult> results(count);
    auto work = [&](std::size_t i) {
        std::optional<int> target;
        if (!options.targets.empty()) {
            target = options.targets[i];
        }
        std::uint64_t const id = options.example_ids.empty() ? i : options.example_ids[i];
        results[i] = run_example(policy, images[i], labels[i], target, id, model, generator, options);
    };

    std::size_t const workers = std::min(options.workers == 0 ? default_workers() : options.workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            work(i);
        }
    } else {
        std::atomic<std::size_t> next { 0 };
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < count; i = next++) {
                        try {
                            work(i);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) {
                                failure = std::current_exception();
                            }
                            next = count;
                        }
                    }
                });
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    PolicyOutcome out;
    out.per_stage_success.assign(policy.elements.size(), std::vector<bool>(count, false));
    out.adversarial_examples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto& r = results[i];
        out.adversarial_examples.push_back(std::move(r.adversary));
        out.success_mask.push_back(r.success);
        out.clean_success.push_back(r.clean);
        for (std::size_t n = 0; n < r.stages.size(); ++n) {
            out.per_stage_success[n][i] = r.stages[n];
        }
        out.gradient_evals += r.cost.gradient_evals;
        out.queries += r.cost.queries;
    }
    return out;
}

auto run_policy(Policy const& policy, Dataset const& data, std::span<const std::size_t> indices, Classifier const& model,
    RunOptions options) -> PolicyOutcome
{
    std::vector<Tensor> images;
    std::vector<int> labels;
    images.reserve(indices.size());
    labels.reserve(indices.size());
    bool const fill_ids = options.example_ids.empty();
    for (auto i : indices) {
        images.push_back(data.image(i));
        labels.push_back(data.label(i));
        if (fill_ids) {
            options.example_ids.push_back(i);
        }
    }
    return run_policy(policy, images, labels, model, options);
}

} // namespace caa
