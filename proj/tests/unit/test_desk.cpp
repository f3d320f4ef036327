// Paired experiments on the adversarially trained digits model. Slow: the
// model is trained once per process.
#include "desk.hpp"

#include "caa/attacks.hpp"
#include "caa/policy.hpp"
#include "caa/rng.hpp"
#include "caa/search.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace caa;
using caa::testing::desk;

namespace {

struct Run {
    double success = 0.0;
    std::vector<double> l2_of_successes;
};

auto attack_eval_split(AttackSpec spec, AttackParams const& params = {}) -> Run
{
    auto const& d = desk();
    Run r;
    std::size_t fooled = 0;
    for (auto i : d.split.eval_indices) {
        spec.seed = derive_seed(1234, i);
        auto const& x = d.pool.image(i);
        int const y = d.pool.label(i);
        auto const adv = apply_attack(spec, x, y, d.model, std::nullopt, params).x_adv;
        if (d.model.predict(adv.to_doubles()) != y) {
            ++fooled;
            r.l2_of_successes.push_back(l2_distance(adv.data, x.data));
        }
    }
    r.success = static_cast<double>(fooled) / static_cast<double>(d.split.eval_indices.size());
    return r;
}

auto median(std::vector<double> v) -> double
{
    std::sort(v.begin(), v.end());
    auto const n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

auto op_index(SearchConfig const& c, AttackKind k) -> std::uint32_t
{
    auto const cat = c.catalog();
    return static_cast<std::uint32_t>(std::find(cat.begin(), cat.end(), k) - cat.begin());
}

} // namespace

TEST(Desk, ModelIsRobustButNotPerfect)
{
    auto const& d = desk();
    double const clean = clean_accuracy(d.model, d.pool, d.split.eval_indices);
    EXPECT_GT(clean, 0.7);
    auto const pgd = attack_eval_split({ AttackKind::pgd_linf, 0.2, 20, Norm::linf });
    EXPECT_GT(1.0 - pgd.success, 0.1);
    EXPECT_LT(1.0 - pgd.success, clean);
}

// At the radius the model was trained for.
TEST(Desk, StagnationScheduleBeatsFixedQuarterStep)
{
    double const eps = caa::testing::kDeskEps;
    AttackSpec const spec { AttackKind::pgd_linf, eps, 50, Norm::linf };
    AttackParams fixed;
    fixed.fixed_step = eps / 4.0;
    auto const adaptive = attack_eval_split(spec);
    auto const quarter = attack_eval_split(spec, fixed);
    RecordProperty("adaptive_success", std::to_string(adaptive.success));
    RecordProperty("fixed_success", std::to_string(quarter.success));
    EXPECT_GT(adaptive.success, quarter.success);
}

TEST(Desk, DdnFindsSmallerPerturbationsThanPgdL2)
{
    auto const ddn = attack_eval_split({ AttackKind::ddn, 1.5, 100, Norm::l2 });
    auto const pgd = attack_eval_split({ AttackKind::pgd_l2, 1.5, 100, Norm::l2 });
    ASSERT_FALSE(ddn.l2_of_successes.empty());
    ASSERT_FALSE(pgd.l2_of_successes.empty());
    EXPECT_LT(median(ddn.l2_of_successes), median(pgd.l2_of_successes));
}

TEST(Desk, SquareTracksPgdL2)
{
    auto const square = attack_eval_split({ AttackKind::square, 1.5, 1000, Norm::l2 });
    auto const pgd = attack_eval_split({ AttackKind::pgd_l2, 1.5, 100, Norm::l2 });
    RecordProperty("square_success", std::to_string(square.success));
    RecordProperty("pgd_success", std::to_string(pgd.success));
    EXPECT_NEAR(square.success, pgd.success, 0.10);
}

TEST(Desk, ReplacingTrailingIdentityWithPgdNeverHelpsTheDefender)
{
    auto const& d = desk();
    SearchConfig c;
    c.policy_len = 2;
    c.eps_max = 0.2;
    PolicyEvaluator ev(c, SearchProblem { &d.model, nullptr, &d.pool, d.split.search_indices });
    auto const id = op_index(c, AttackKind::identity);
    auto const pgd = op_index(c, AttackKind::pgd_linf);
    Rng rng(8);
    for (int trial = 0; trial < 12; ++trial) {
        Gene first = random_genome(c, rng).genes[0];
        Genome const shorter { { first, { id, 0, 0 } } };
        Genome const longer { { first, { pgd, static_cast<std::uint32_t>(rng.uniform_int(8)), static_cast<std::uint32_t>(rng.uniform_int(3)) } } };
        EXPECT_LE(ev.evaluate(longer).robust_accuracy, ev.evaluate(shorter).robust_accuracy) << longer.to_string();
    }
}

// A searched targeted policy against targeted PGD given the same number of
// gradient evaluations (more restarts when one run cannot use them all).
TEST(Desk, TargetedSearchBeatsTargetedPgd)
{
    auto const& d = desk();
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SearchConfig c;
        c.mode = SearchMode::targeted;
        c.eps_max = 0.2;
        c.policy_len = 2;
        c.generations = 10;
        c.seed = seed;
        PolicyEvaluator search(c, SearchProblem { &d.model, nullptr, &d.pool, d.split.search_indices });
        auto const found = nsga2_search(c, search);

        PolicyEvaluator held_out(c, SearchProblem { &d.model, nullptr, &d.pool, d.split.eval_indices });
        auto const budget = std::max<std::uint64_t>(1, policy_complexity(found.best_policy, 10).gradient_evals);
        auto const t = static_cast<std::uint32_t>(std::min<std::uint64_t>(budget, step_limit(AttackKind::pgd_linf, Norm::linf)));
        Policy baseline { { { AttackKind::pgd_linf, c.eps_max, t } }, Norm::linf, c.eps_max, 1 };
        baseline.restarts = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, (budget + t - 1) / t));

        double const searched = held_out.evaluate_policy(found.best_policy).robust_accuracy;
        double const pgd = held_out.evaluate_policy(baseline).robust_accuracy;
        std::cout << "seed " << seed << ": " << describe_policy(found.best_policy) << " targeted RA " << searched
                  << " vs PGD(t=" << t << ", restarts=" << baseline.restarts << ") " << pgd << '\n';
        wins += searched < pgd ? 1 : 0;
    }
    EXPECT_GE(wins, 3);
}
