#include "commands.hpp"

#include "caa/attacks.hpp"
#include "caa/gradcheck.hpp"
#include "caa/model_io.hpp"
#include "caa/policy.hpp"
#include "caa/rng.hpp"
#include "caa/search.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>

namespace caa::cli {

namespace {

    auto random_input(std::size_t d, Rng& rng) -> Tensor
    {
        std::vector<float> v(d);
        for (auto& x : v) {
            x = static_cast<float>(rng.uniform(0.05, 0.95));
        }
        return Tensor({ 1, d, 1 }, std::move(v));
    }

    struct NamedLoss {
        std::string name;
        std::function<LossKind(int)> make;
    };

} // namespace

auto run_gradcheck(GradcheckOptions const& o, Common const& c) -> int
{
    std::vector<NamedLoss> const losses {
        { "cross_entropy", [](int) { return LossKind::cross_entropy(); } },
        { "cw_margin", [](int) { return LossKind::cw_margin(20.0); } },
        { "per_target_margin", [](int y) { return LossKind::per_target_margin((y + 1) % 4); } },
        { "targeted_cross_entropy", [](int) { return LossKind::cross_entropy(true); } },
    };
    double const h = 1e-3;
    bool ok = true;
    std::printf("%-24s %8s %8s %12s\n", "loss", "checked", "skipped", "max_rel_err");
    for (std::size_t li = 0; li < losses.size(); ++li) {
        Rng rng(derive_seed(c.seed, li));
        std::size_t checked = 0;
        std::size_t skipped = 0;
        double worst = 0.0;
        // kinks straddled by the stencil are redrawn, up to 20x the trial count
        for (std::size_t attempt = 0; checked < o.trials && attempt < 20 * o.trials; ++attempt) {
            auto const d = static_cast<std::size_t>(4 + rng.uniform_int(12));
            std::vector<std::uint32_t> hidden { static_cast<std::uint32_t>(3 + rng.uniform_int(10)) };
            Architecture const arch = rng.uniform_int(3) == 0 ? Architecture::linear() : Architecture::mlp(hidden);
            auto const model = Classifier::initialize(arch, InputDims { 1, static_cast<std::uint32_t>(d), 1 }, 4, rng.next_u64());
            auto const x = random_input(d, rng);
            int const y = static_cast<int>(rng.uniform_int(4));
            auto const loss = losses[li].make(y);
            if (!stencil_is_smooth(model, x, y, loss, h)) {
                ++skipped;
                continue;
            }
            auto const analytic = model.loss_and_input_grad(x, y, loss).grad;
            auto const numeric = finite_difference_grad(model, x, y, loss, h);
            worst = std::max(worst, max_relative_error(analytic.data, numeric.data));
            ++checked;
        }
        std::printf("%-24s %8zu %8zu %12.3e\n", losses[li].name.c_str(), checked, skipped, worst);
        ok = ok && checked == o.trials && worst < o.tolerance;
    }
    std::puts(ok ? "gradcheck passed" : "gradcheck FAILED");
    return ok ? kExitOk : kExitCheckFailed;
}

auto run_selftest(Common const& c) -> int
{
    int failures = 0;
    auto check = [&](std::string const& name, bool pass) {
        std::printf("%s %s\n", pass ? "PASS" : "FAIL", name.c_str());
        failures += pass ? 0 : 1;
    };

    {
        Classifier const m(Architecture::linear(), InputDims { 1, 2, 1 }, 2, { 2.0F, 0.0F, 0.0F, 2.0F, 0.0F, 0.0F });
        auto const r = apply_attack({ AttackKind::fgsm, 0.1, 1, Norm::linf }, Tensor({ 1, 2, 1 }, { 0.6F, 0.4F }), 0, m);
        check("fgsm known answer", std::fabs(r.x_adv.data[0] - 0.5F) < 1e-6F && std::fabs(r.x_adv.data[1] - 0.5F) < 1e-6F);
    }
    {
        Policy const sub { { { AttackKind::mt_linf, 8.0 / 255.0, 50 }, { AttackKind::mt_linf, 8.0 / 255.0, 25 },
                               { AttackKind::cw_linf, 8.0 / 255.0, 125 } },
            Norm::linf, 8.0 / 255.0, 1 };
        check("complexity of the three-stage linf proxy is 800", policy_complexity(sub, 10).gradient_evals == 800);
        check("linf search space (8*8*7)^3", search_space_size(7, 3) == "89915392");
    }
    {
        Rng rng(c.seed);
        bool agree = true;
        for (int trial = 0; trial < 50 && agree; ++trial) {
            std::vector<Objectives> pop;
            auto const n = 1 + rng.uniform_int(30);
            for (std::size_t i = 0; i < n; ++i) {
                pop.push_back({ static_cast<double>(rng.uniform_int(6)) / 5.0, rng.uniform_int(6) });
            }
            auto const fronts = fast_nondominated_sort(pop);
            std::vector<std::size_t> rank(n);
            for (std::size_t f = 0; f < fronts.size(); ++f) {
                for (auto i : fronts[f]) {
                    rank[i] = f;
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    // a dominator always sits in an earlier front, and front members never dominate each other
                    agree = agree && (!dominates(pop[j], pop[i]) || rank[j] < rank[i]);
                }
                bool const first = rank[i] == 0;
                bool undominated = true;
                for (std::size_t j = 0; j < n; ++j) {
                    undominated = undominated && !dominates(pop[j], pop[i]);
                }
                agree = agree && first == undominated;
            }
        }
        check("nondominated sort against pairwise dominance", agree);
    }
    {
        Rng rng(c.seed + 1);
        bool same = true;
        for (int trial = 0; trial < 100 && same; ++trial) {
            SearchConfig cfg;
            cfg.policy_len = 1 + rng.uniform_int(7);
            auto const p = decode(random_genome(cfg, rng), cfg);
            auto const text = serialize_policy(p);
            same = serialize_policy(parse_policy(text)) == text;
        }
        check("policy json round trip", same);
        auto const m = Classifier::initialize(Architecture::mlp({ 8 }), InputDims { 3, 3, 1 }, 4, c.seed);
        auto const bytes = encode_model(m);
        check("model container round trip", encode_model(decode_model(bytes)) == bytes);
    }
    {
        auto const m = Classifier::initialize(Architecture::mlp({ 6 }), InputDims { 1, 5, 1 }, 3, c.seed + 2);
        Rng rng(c.seed + 3);
        bool inside = true;
        for (int trial = 0; trial < 200 && inside; ++trial) {
            auto const x = random_input(5, rng);
            double const eps = rng.uniform(0.0, 0.3);
            Policy const p { { { AttackKind::pgd_linf, eps, 5 }, { AttackKind::mi_linf, eps, 5 } }, Norm::linf, eps, 1 };
            auto const out = run_policy(p, std::vector<Tensor> { x }, std::vector<int> { 0 }, m);
            auto const& adv = out.adversarial_examples[0];
            inside = linf_distance(adv.data, x.data) <= eps + 1e-6 && adv.in_unit_box();
        }
        check("composed linf policy stays in the budget", inside);
    }
    std::printf("%d failure(s)\n", failures);
    return failures == 0 ? kExitOk : kExitCheckFailed;
}

} // namespace caa::cli
