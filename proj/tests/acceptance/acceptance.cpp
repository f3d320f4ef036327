// Acceptance run: one PASS/FAIL line per criterion, measured values alongside.
#include "desk.hpp"

#include "caa/attacks.hpp"
#include "caa/model_io.hpp"
#include "caa/policy.hpp"
#include "caa/report.hpp"
#include "caa/rng.hpp"
#include "caa/search.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace caa;
using caa::testing::desk;
using caa::testing::kDeskEps;

namespace {

using Clock = std::chrono::steady_clock;

auto seconds_since(Clock::time_point start) -> double { return std::chrono::duration<double>(Clock::now() - start).count(); }

int failures = 0;

void verdict(int id, bool pass, std::string const& what, double secs, std::string const& detail)
{
    std::printf("%s %2d %-28s %8.1fs  %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), secs, detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

void note(std::string const& line)
{
    std::printf("     %s\n", line.c_str());
    std::fflush(stdout);
}

auto fmt(char const* f, double v) -> std::string
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

auto random_image(std::size_t h, std::size_t w, std::size_t c, Rng& rng) -> Tensor
{
    std::vector<float> v(h * w * c);
    for (auto& x : v) {
        x = static_cast<float>(rng.uniform(0.0, 1.0));
    }
    return Tensor({ h, w, c }, std::move(v));
}

auto random_classifier(Rng& rng, InputDims dims, std::uint32_t classes) -> Classifier
{
    switch (rng.uniform_int(3)) {
    case 0:
        return Classifier::initialize(Architecture::linear(), dims, classes, rng.next_u64());
    case 1: {
        std::vector<std::uint32_t> hidden(1 + rng.uniform_int(2));
        for (auto& h : hidden) {
            h = static_cast<std::uint32_t>(2 + rng.uniform_int(10));
        }
        return Classifier::initialize(Architecture::mlp(hidden), dims, classes, rng.next_u64());
    }
    default:
        return Classifier::initialize(Architecture::convnet({ static_cast<std::uint32_t>(1 + rng.uniform_int(3)) }), dims, classes,
            rng.next_u64());
    }
}

// ---- 1: gradients against a central difference ----

struct LossCase {
    std::string name;
    std::function<LossKind(int y, std::uint32_t k)> make;
};

// Same linear region and same loss branch at both ends of every stencil arm.
auto smooth_stencil(Classifier const& m, std::vector<double> x, int y, LossKind const& loss, double h) -> bool
{
    auto branch = [&](std::vector<double> const& p) -> int {
        if (loss.variant != LossKind::Variant::cw_margin) {
            return 0;
        }
        auto const z = m.logits(p);
        int best = -1;
        for (int i = 0; i < static_cast<int>(z.size()); ++i) {
            if (i != y && (best < 0 || z[static_cast<std::size_t>(i)] > z[static_cast<std::size_t>(best)])) {
                best = i;
            }
        }
        return z[static_cast<std::size_t>(best)] - z[static_cast<std::size_t>(y)] <= -loss.kappa ? -1 : best;
    };
    auto const pattern = m.activation_pattern(x);
    int const b = branch(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double const orig = x[i];
        for (double d : { h, -h }) {
            x[i] = orig + d;
            if (m.activation_pattern(x) != pattern || branch(x) != b) {
                return false;
            }
        }
        x[i] = orig;
    }
    return true;
}

void criterion_gradients()
{
    auto const start = Clock::now();
    std::vector<LossCase> const cases {
        { "cross_entropy", [](int, std::uint32_t) { return LossKind::cross_entropy(); } },
        { "targeted_cross_entropy", [](int, std::uint32_t) { return LossKind::cross_entropy(true); } },
        { "cw_margin", [](int, std::uint32_t) { return LossKind::cw_margin(20.0); } },
        { "targeted_cw_margin", [](int, std::uint32_t) { return LossKind::cw_margin(0.5, true); } },
        { "per_target_margin", [](int y, std::uint32_t k) { return LossKind::per_target_margin((y + 1) % static_cast<int>(k)); } },
    };
    double const h = 1e-4;
    bool ok = true;
    std::string detail;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        Rng rng(derive_seed(2024, c));
        std::size_t checked = 0;
        std::size_t excluded = 0;
        double worst = 0.0;
        while (checked < 50 && excluded < 5000) {
            InputDims const dims { static_cast<std::uint32_t>(2 + rng.uniform_int(4)), static_cast<std::uint32_t>(2 + rng.uniform_int(4)),
                static_cast<std::uint32_t>(1 + rng.uniform_int(2)) };
            auto const k = static_cast<std::uint32_t>(2 + rng.uniform_int(5));
            auto const model = random_classifier(rng, dims, k);
            auto x = random_image(dims.height, dims.width, dims.channels, rng);
            int const y = static_cast<int>(rng.uniform_int(k));
            auto const loss = cases[c].make(y, k);
            auto xd = x.to_doubles();
            if (!smooth_stencil(model, xd, y, loss, h)) {
                ++excluded;
                continue;
            }
            auto const analytic = model.loss_and_input_grad(x, y, loss).grad.to_doubles();
            double diff = 0.0;
            double scale = 0.0;
            for (std::size_t i = 0; i < xd.size(); ++i) {
                double const orig = xd[i];
                xd[i] = orig + h;
                double const up = model.loss(xd, y, loss);
                xd[i] = orig - h;
                double const down = model.loss(xd, y, loss);
                xd[i] = orig;
                double const numeric = (up - down) / (2.0 * h);
                diff = std::max(diff, std::abs(numeric - analytic[i]));
                scale = std::max({ scale, std::abs(numeric), std::abs(analytic[i]) });
            }
            worst = std::max(worst, scale > 0.0 ? diff / scale : 0.0);
            ++checked;
        }
        ok = ok && checked == 50 && worst < 1e-4;
        note(cases[c].name + ": " + std::to_string(checked) + " checked, " + std::to_string(excluded) + " excluded, max rel err "
            + fmt("%.2e", worst));
        detail = "5 loss kinds x 50 triples";
    }
    double const secs = seconds_since(start);
    verdict(1, ok && secs < 60.0, "gradient fidelity", secs, detail);
}

// ---- 2: budget and box ----

void criterion_budget()
{
    auto const start = Clock::now();
    Rng rng(77);
    std::size_t violations = 0;
    std::size_t runs = 0;
    double worst_excess = -1.0;
    std::array<std::size_t, kAttackKindCount> seen {};
    for (; runs < 10000; ++runs) {
        Norm const space = std::array { Norm::linf, Norm::l2, Norm::unrestricted }[rng.uniform_int(3)];
        InputDims const dims { static_cast<std::uint32_t>(3 + rng.uniform_int(4)), static_cast<std::uint32_t>(3 + rng.uniform_int(4)),
            rng.uniform_int(2) == 0 ? 1U : 3U };
        auto const k = static_cast<std::uint32_t>(2 + rng.uniform_int(9));
        auto const model = random_classifier(rng, dims, k);
        auto const x = random_image(dims.height, dims.width, dims.channels, rng);
        int const y = static_cast<int>(rng.uniform_int(k));
        bool const targeted = rng.uniform_int(4) == 0;
        double const eps = space == Norm::linf ? rng.uniform(0.0, 0.3) : (space == Norm::l2 ? rng.uniform(0.0, 2.0) : 1.0);

        Policy p;
        if (runs % 2 == 0) {
            SearchConfig cfg;
            cfg.space = space;
            cfg.eps_max = space == Norm::unrestricted ? 1.0 : std::clamp(eps, 1e-3, 1.0);
            cfg.policy_len = 1 + rng.uniform_int(4);
            cfg.mode = targeted ? SearchMode::targeted : SearchMode::direct;
            p = decode(random_genome(cfg, rng), cfg);
            p.restarts = static_cast<std::uint32_t>(1 + rng.uniform_int(2));
        } else {
            // off-grid magnitudes and short step counts
            auto const catalog = attack_catalog(space, targeted);
            p.norm = space;
            p.eps_global = eps;
            auto const n = 1 + rng.uniform_int(3);
            for (std::size_t i = 0; i < n; ++i) {
                AttackKind const kind = catalog[rng.uniform_int(catalog.size())];
                PolicyElement e { kind, 0.0, 0 };
                if (uses_epsilon(kind, space)) {
                    e.epsilon = rng.uniform(0.0, eps);
                }
                if (uses_steps(kind, space)) {
                    e.steps = static_cast<std::uint32_t>(1 + rng.uniform_int(std::min<std::uint32_t>(step_limit(kind, space), 40)));
                }
                if (space == Norm::unrestricted && kind == AttackKind::spsa) {
                    e.epsilon = kUnrestrictedSpsaEpsilon;
                    e.steps = static_cast<std::uint32_t>(1 + rng.uniform_int(kUnrestrictedSpsaSteps));
                }
                p.elements.push_back(e);
            }
        }
        for (auto const& e : p.elements) {
            ++seen[static_cast<std::size_t>(e.kind)];
        }
        RunOptions opts;
        opts.seed = rng.next_u64();
        opts.workers = 1;
        if (targeted) {
            opts.targets = { (y + 1) % static_cast<int>(k) };
        }
        auto const out = run_policy(p, std::vector<Tensor> { x }, std::vector<int> { y }, model, opts);
        auto const& adv = out.adversarial_examples[0];
        double dist = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double const d = static_cast<double>(adv.data[i]) - static_cast<double>(x.data[i]);
            dist = space == Norm::linf ? std::max(dist, std::abs(d)) : dist + d * d;
        }
        if (space == Norm::l2) {
            dist = std::sqrt(dist);
        }
        bool in_box = std::all_of(adv.data.begin(), adv.data.end(), [](float v) { return v >= 0.0F && v <= 1.0F; });
        bool in_ball = space == Norm::unrestricted || dist <= p.eps_global + 1e-6;
        if (space != Norm::unrestricted) {
            worst_excess = std::max(worst_excess, dist - p.eps_global);
        }
        if (!in_box || !in_ball || adv.shape != x.shape) {
            ++violations;
        }
    }
    auto const kinds = std::count_if(seen.begin(), seen.end(), [](std::size_t n) { return n > 0; });
    double const secs = seconds_since(start);
    verdict(2, violations == 0 && secs < 600.0, "budget soundness", secs,
        std::to_string(runs) + " runs, " + std::to_string(violations) + " violations, " + std::to_string(kinds)
            + " attack kinds exercised, max ||d||-eps " + fmt("%.2e", worst_excess));
}

// ---- 3: complexity and space size ----

void criterion_complexity()
{
    auto const start = Clock::now();
    double const e = 8.0 / 255.0;
    Policy const sub { { { AttackKind::mt_linf, e, 50 }, { AttackKind::mt_linf, e, 25 }, { AttackKind::cw_linf, e, 125 } }, Norm::linf, e, 1 };
    auto const cost = policy_complexity(sub, 10);
    // (8 * 8 * 7)^3 = 448^3
    std::uint64_t const expected_space = 448ULL * 448ULL * 448ULL;
    auto const reported = search_space_size(attack_catalog(Norm::linf).size(), 3);
    bool const ok = cost.gradient_evals == 800 && reported == std::to_string(expected_space) && attack_catalog(Norm::linf).size() == 7;
    verdict(3, ok, "complexity reproduction", seconds_since(start),
        "complexity " + std::to_string(cost.gradient_evals) + ", space " + reported + " vs " + std::to_string(expected_space));
}

// ---- 4: sort and elitism ----

auto dominated_by(Objectives const& a, Objectives const& b) -> bool
{
    return b.robust_accuracy <= a.robust_accuracy && b.complexity <= a.complexity
        && (b.robust_accuracy < a.robust_accuracy || b.complexity < a.complexity);
}

// Peel nondominated layers by pairwise comparison.
auto brute_force_fronts(std::vector<Objectives> const& pop) -> std::vector<std::vector<std::size_t>>
{
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<bool> taken(pop.size(), false);
    std::size_t left = pop.size();
    while (left > 0) {
        std::vector<std::size_t> front;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (taken[i]) {
                continue;
            }
            bool beaten = false;
            for (std::size_t j = 0; j < pop.size() && !beaten; ++j) {
                beaten = !taken[j] && dominated_by(pop[i], pop[j]);
            }
            if (!beaten) {
                front.push_back(i);
            }
        }
        for (auto i : front) {
            taken[i] = true;
        }
        left -= front.size();
        fronts.push_back(front);
    }
    return fronts;
}

void criterion_nsga2()
{
    auto const start = Clock::now();
    Rng rng(4242);
    std::size_t sort_mismatch = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Objectives> pop(1 + rng.uniform_int(50));
        // coarse grid so ties and duplicates are common
        for (auto& o : pop) {
            o = { static_cast<double>(rng.uniform_int(11)) / 10.0, rng.uniform_int(12) * 50 };
        }
        if (fast_nondominated_sort(pop) != brute_force_fronts(pop)) {
            ++sort_mismatch;
        }
    }

    std::size_t regressions = 0;
    std::size_t steps = 0;
    for (int run = 0; run < 10; ++run) {
        SearchConfig cfg;
        cfg.space = std::array { Norm::linf, Norm::l2, Norm::unrestricted }[run % 3];
        cfg.policy_len = 1 + rng.uniform_int(4);
        cfg.population = 4 + rng.uniform_int(20);
        cfg.offspring = 2 + rng.uniform_int(12);
        cfg.seed = rng.next_u64();
        std::uint64_t const salt = rng.next_u64();
        // arbitrary deterministic landscape over decoded policies
        PolicyEvaluator ev(cfg, [salt](Policy const& p) {
            std::uint64_t h = salt;
            for (auto const& e : p.elements) {
                h = derive_seed(h, static_cast<std::uint64_t>(e.kind) * 1000003ULL + e.steps);
                h = derive_seed(h, static_cast<std::uint64_t>(e.epsilon * 1e6));
            }
            return Objectives { static_cast<double>(h % 1001) / 1000.0, (h >> 20) % 5000 };
        });
        double const alpha = 1e-4;
        std::vector<Individual> pop;
        for (std::size_t i = 0; i < cfg.population; ++i) {
            auto g = random_genome(cfg, rng);
            pop.push_back({ g, ev.evaluate(g) });
        }
        auto best = [&](std::vector<Individual> const& p) {
            double m = 1e300;
            for (auto const& ind : p) {
                m = std::min(m, ind.objectives.robust_accuracy + alpha * static_cast<double>(ind.objectives.complexity));
            }
            return m;
        };
        SearchConfig step_cfg = cfg;
        step_cfg.alpha = alpha;
        for (int s = 0; s < 10; ++s, ++steps) {
            double const before = best(pop);
            pop = nsga2_step(pop, step_cfg, ev, rng);
            if (best(pop) > before || pop.size() != cfg.population) {
                ++regressions;
            }
        }
    }
    double const secs = seconds_since(start);
    verdict(4, sort_mismatch == 0 && regressions == 0 && secs < 60.0, "nsga2 correctness", secs,
        "200 populations, " + std::to_string(sort_mismatch) + " sort mismatches; " + std::to_string(steps) + " steps, "
            + std::to_string(regressions) + " elitism regressions");
}

// ---- 5 to 8: desk experiments ----

auto desk_config(std::size_t n, std::uint64_t seed, std::size_t workers) -> SearchConfig
{
    SearchConfig cfg;
    cfg.eps_max = kDeskEps;
    cfg.policy_len = n;
    cfg.seed = seed;
    cfg.population = 20;
    cfg.generations = 15;
    cfg.offspring = 10;
    cfg.workers = workers;
    return cfg;
}

auto search_problem() -> SearchProblem
{
    auto const& d = desk();
    return { &d.model, nullptr, &d.pool, d.split.search_indices };
}

auto eval_problem() -> SearchProblem
{
    auto const& d = desk();
    return { &d.model, nullptr, &d.pool, d.split.eval_indices };
}

// Per-example report of a policy on the eval split.
auto eval_report(Policy const& p, std::uint64_t seed, std::size_t workers) -> std::string
{
    auto const& d = desk();
    RunOptions opts;
    opts.seed = seed;
    opts.workers = workers;
    auto const& idx = d.split.eval_indices;
    auto const out = run_policy(p, d.pool, idx, d.model, opts);
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (auto i : idx) {
        images.push_back(d.pool.image(i));
        labels.push_back(d.pool.label(i));
    }
    return attack_report_csv(out, images, labels, idx, {}, d.model);
}

struct ChainRun {
    // [seed][n - 1]
    std::vector<std::vector<SearchResult>> results;
    std::vector<std::vector<SearchConfig>> configs;
    std::string csv;
    double seconds = 0.0;
};

// N = 1, 2, 3 per seed; each search starts from the previous best and front,
// padded with Identity.
auto run_chain(std::size_t workers) -> ChainRun
{
    auto const start = Clock::now();
    ChainRun chain;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::vector<Genome> warm;
        chain.results.emplace_back();
        chain.configs.emplace_back();
        for (std::size_t n = 1; n <= 3; ++n) {
            auto cfg = desk_config(n, seed, workers);
            for (auto const& g : warm) {
                cfg.seed_genomes.push_back(pad_genome(g, n, cfg));
            }
            PolicyEvaluator ev(cfg, search_problem());
            auto r = nsga2_search(cfg, ev);
            chain.csv += "# seed " + std::to_string(seed) + " N " + std::to_string(n) + "\n" + history_csv(r.history) + pareto_csv(r.pareto_log);
            chain.csv += eval_report(r.best_policy, seed, workers);
            warm.assign(1, r.best_genome);
            for (auto const& f : r.pareto_front) {
                if (f.genome != r.best_genome && warm.size() < cfg.population) {
                    warm.push_back(f.genome);
                }
            }
            chain.results.back().push_back(std::move(r));
            chain.configs.back().push_back(cfg);
        }
    }
    chain.seconds = seconds_since(start);
    return chain;
}

auto eval_ra(Policy const& p, std::uint64_t seed) -> double
{
    PolicyEvaluator ev(desk_config(p.elements.size(), seed, 1), eval_problem());
    return ev.evaluate_policy(p).robust_accuracy;
}

void criterion_ensemble(ChainRun const& chain)
{
    auto const start = Clock::now();
    int holds = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto const& three = chain.results[seed - 1][2];
        auto const& one = chain.results[seed - 1][0];
        Policy first = three.best_policy;
        first.elements.resize(1);
        double const ra3 = eval_ra(three.best_policy, seed);
        double const ra_first = eval_ra(first, seed);
        double const ra_best = eval_ra(one.best_policy, seed);
        bool const ok = ra3 <= ra_first && ra3 <= ra_best;
        holds += ok ? 1 : 0;
        note("seed " + std::to_string(seed) + ": policy " + fmt("%.3f", ra3) + ", first element " + fmt("%.3f", ra_first)
            + ", best single " + fmt("%.3f", ra_best) + "  " + describe_policy(three.best_policy));
    }
    double const secs = chain.seconds + seconds_since(start);
    verdict(5, holds == 5 && secs < 1200.0, "ensemble dominance", secs, std::to_string(holds) + "/5 seeds (search shared with 7)");
}

struct OrderingRun {
    std::vector<double> nsga2_l;
    std::vector<double> random_l;
    std::string csv;
};

auto run_ordering(std::size_t workers) -> OrderingRun
{
    OrderingRun o;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto const cfg = desk_config(3, seed, workers);
        PolicyEvaluator ev_n(cfg, search_problem());
        auto const n = nsga2_search(cfg, ev_n);
        PolicyEvaluator ev_r(cfg, search_problem());
        auto const r = random_search(170, cfg, ev_r);
        o.nsga2_l.push_back(n.best_scalar);
        o.random_l.push_back(r.best_scalar);
        o.csv += "# seed " + std::to_string(seed) + "\n" + history_csv(n.history) + pareto_csv(n.pareto_log) + history_csv(r.history)
            + pareto_csv(r.pareto_log);
    }
    return o;
}

void criterion_ordering(OrderingRun const& o, double secs)
{
    int wins = 0;
    for (std::size_t s = 0; s < o.nsga2_l.size(); ++s) {
        bool const ok = o.nsga2_l[s] <= o.random_l[s];
        wins += ok ? 1 : 0;
        note("seed " + std::to_string(s + 1) + ": nsga2 L " + fmt("%.6f", o.nsga2_l[s]) + ", random L " + fmt("%.6f", o.random_l[s]));
    }
    verdict(6, wins >= 4 && secs < 2700.0, "search-quality ordering", secs, std::to_string(wins) + "/5 seeds with nsga2 <= random");
}

void criterion_length(ChainRun const& chain)
{
    auto const start = Clock::now();
    int monotone = 0;
    int admissible = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto const& rs = chain.results[seed - 1];
        auto const& cs = chain.configs[seed - 1];
        bool const ok = rs[0].best_objectives.robust_accuracy >= rs[1].best_objectives.robust_accuracy
            && rs[1].best_objectives.robust_accuracy >= rs[2].best_objectives.robust_accuracy;
        monotone += ok ? 1 : 0;
        bool padded_ok = true;
        for (std::size_t n = 1; n < 3; ++n) {
            SearchConfig cfg = cs[n];
            cfg.seed_genomes.clear();
            auto const padded = pad_genome(rs[n - 1].best_genome, n + 1, cfg);
            PolicyEvaluator ev(cfg, search_problem());
            auto const obj = ev.evaluate(padded);
            // same objectives after padding, and the longer search did no worse
            padded_ok = padded_ok && obj == rs[n - 1].best_objectives && rs[n].best_scalar <= scalarize(obj, cfg.alpha_value());
        }
        admissible += padded_ok ? 1 : 0;
        note("seed " + std::to_string(seed) + ": RA N=1 " + fmt("%.3f", rs[0].best_objectives.robust_accuracy) + ", N=2 "
            + fmt("%.3f", rs[1].best_objectives.robust_accuracy) + ", N=3 " + fmt("%.3f", rs[2].best_objectives.robust_accuracy)
            + (padded_ok ? ", padding admissible" : ", padding NOT admissible"));
    }
    double const secs = chain.seconds + seconds_since(start);
    verdict(7, monotone == 5 && admissible == 5 && secs < 3600.0, "length ablation", secs,
        std::to_string(monotone) + "/5 seeds non-increasing, " + std::to_string(admissible) + "/5 padded re-evaluations match");
}

struct RestartRun {
    std::vector<double> ra;
    std::string csv;
    double seconds = 0.0;
};

auto run_restarts(std::size_t workers) -> RestartRun
{
    auto const start = Clock::now();
    auto const& d = desk();
    RestartRun out;
    Policy p { { { AttackKind::spsa, kDeskEps, 20 }, { AttackKind::pgd_linf, 0.15, 10 } }, Norm::linf, kDeskEps, 1 };
    for (std::uint32_t r : { 1U, 2U, 4U }) {
        p.restarts = r;
        RunOptions opts;
        opts.seed = 31;
        opts.workers = workers;
        auto const outcome = run_policy(p, d.pool, d.split.eval_indices, d.model, opts);
        out.ra.push_back(outcome.robust_accuracy());
        std::vector<Tensor> images;
        std::vector<int> labels;
        for (auto i : d.split.eval_indices) {
            images.push_back(d.pool.image(i));
            labels.push_back(d.pool.label(i));
        }
        AttackSummary s;
        s.robust_accuracy = outcome.robust_accuracy();
        s.clean_accuracy = clean_accuracy(d.model, d.pool, d.split.eval_indices);
        s.examples = d.split.eval_indices.size();
        s.restarts = r;
        s.complexity = policy_complexity(p, d.model.num_classes()).gradient_evals;
        s.gradient_evals = outcome.gradient_evals;
        s.queries = outcome.queries;
        out.csv += attack_report_csv(outcome, images, labels, d.split.eval_indices, {}, d.model) + attack_summary_csv(s);
    }
    out.seconds = seconds_since(start);
    return out;
}

void criterion_restarts(RestartRun const& r)
{
    bool const ok = r.ra[0] >= r.ra[1] && r.ra[1] >= r.ra[2];
    verdict(8, ok && r.seconds < 300.0, "restart monotonicity", r.seconds,
        "RA r=1 " + fmt("%.3f", r.ra[0]) + ", r=2 " + fmt("%.3f", r.ra[1]) + ", r=4 " + fmt("%.3f", r.ra[2]));
}

// ---- 10: round trips ----

auto write_read_write(fs::path const& dir, std::string const& text) -> bool
{
    auto const a = dir / "a.json";
    auto const b = dir / "b.json";
    std::ofstream(a, std::ios::binary) << text;
    std::ifstream in(a, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto const again = serialize_policy(parse_policy(ss.str()));
    std::ofstream(b, std::ios::binary) << again;
    return read_file_bytes(a) == read_file_bytes(b);
}

void criterion_round_trips()
{
    auto const start = Clock::now();
    auto const dir = fs::temp_directory_path() / ("caa_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    Rng rng(1010);
    std::size_t policy_bad = 0;
    std::size_t model_bad = 0;
    for (int i = 0; i < 1000; ++i) {
        SearchConfig cfg;
        cfg.space = std::array { Norm::linf, Norm::l2, Norm::unrestricted }[rng.uniform_int(3)];
        cfg.eps_max = rng.uniform(1e-4, 1.0);
        cfg.policy_len = 1 + rng.uniform_int(kMaxPolicyLength);
        Policy p = decode(random_genome(cfg, rng), cfg);
        p.restarts = static_cast<std::uint32_t>(1 + rng.uniform_int(16));
        if (cfg.space != Norm::unrestricted) {
            // arbitrary doubles, not just grid values
            for (auto& e : p.elements) {
                if (uses_epsilon(e.kind, cfg.space)) {
                    e.epsilon = rng.uniform(0.0, p.eps_global);
                }
            }
        }
        if (!write_read_write(dir, serialize_policy(p)) || parse_policy(serialize_policy(p)) != p) {
            ++policy_bad;
        }

        InputDims const dims { static_cast<std::uint32_t>(1 + rng.uniform_int(6)), static_cast<std::uint32_t>(1 + rng.uniform_int(6)),
            static_cast<std::uint32_t>(1 + rng.uniform_int(3)) };
        auto const model = random_classifier(rng, dims, static_cast<std::uint32_t>(2 + rng.uniform_int(9)));
        auto const m1 = dir / "a.caam";
        auto const m2 = dir / "b.caam";
        save_model(model, m1);
        auto const loaded = load_model(m1);
        save_model(loaded, m2);
        if (read_file_bytes(m1) != read_file_bytes(m2) || !(loaded == model)) {
            ++model_bad;
        }
    }
    fs::remove_all(dir);
    verdict(10, policy_bad == 0 && model_bad == 0, "round trips", seconds_since(start),
        "1000 policies (" + std::to_string(policy_bad) + " differ), 1000 models (" + std::to_string(model_bad) + " differ)");
}

} // namespace

int main()
{
    auto const total = Clock::now();
    criterion_gradients();
    criterion_budget();
    criterion_complexity();
    criterion_nsga2();

    auto const desk_start = Clock::now();
    auto const& d = desk();
    note("desk model built in " + fmt("%.1f", seconds_since(desk_start)) + "s, clean eval accuracy "
        + fmt("%.3f", clean_accuracy(d.model, d.pool, d.split.eval_indices)));

    auto const chain = run_chain(1);
    criterion_ensemble(chain);
    auto const ordering_start = Clock::now();
    auto const ordering = run_ordering(1);
    criterion_ordering(ordering, seconds_since(ordering_start));
    criterion_length(chain);
    auto const restarts = run_restarts(1);
    criterion_restarts(restarts);

    // 5 to 8 again with three workers
    auto const again = Clock::now();
    auto const chain3 = run_chain(3);
    auto const ordering3 = run_ordering(3);
    auto const restarts3 = run_restarts(3);
    bool const same5 = chain3.csv == chain.csv;
    bool const same6 = ordering3.csv == ordering.csv;
    bool const same8 = restarts3.csv == restarts.csv;
    verdict(9, same5 && same6 && same8, "determinism across workers", seconds_since(again),
        std::string("1 vs 3 workers: searches 5/7 ") + (same5 ? "identical" : "DIFFER") + ", 6 " + (same6 ? "identical" : "DIFFER")
            + ", 8 " + (same8 ? "identical" : "DIFFER") + " (" + std::to_string(chain.csv.size() + ordering.csv.size() + restarts.csv.size())
            + " bytes)");

    criterion_round_trips();
    std::printf("%d criterion failure(s), total %.1fs\n", failures, seconds_since(total));
    return failures == 0 ? 0 : 1;
}
