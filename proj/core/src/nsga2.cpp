#include "caa/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace caa {

auto fast_nondominated_sort(std::span<const Objectives> pop) -> std::vector<std::vector<std::size_t>>
{
    auto const n = pop.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (dominates(pop[p], pop[q])) {
                dominated[p].push_back(q);
            } else if (dominates(pop[q], pop[p])) {
                ++count[p];
            }
        }
        if (count[p] == 0) {
            fronts[0].push_back(p);
        }
    }
    for (std::size_t i = 0; !fronts[i].empty(); ++i) {
        std::vector<std::size_t> next;
        for (auto p : fronts[i]) {
            for (auto q : dominated[p]) {
                if (--count[q] == 0) {
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

auto crowding_distance(std::span<const Objectives> front) -> std::vector<double>
{
    auto const n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    auto const value = [&](std::size_t i, int axis) {
        return axis == 0 ? front[i].robust_accuracy : static_cast<double>(front[i].complexity);
    };
    std::vector<std::size_t> order(n);
    for (int axis = 0; axis < 2; ++axis) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a, axis) < value(b, axis); });
        double const lo = value(order.front(), axis);
        double const hi = value(order.back(), axis);
        if (!(hi > lo)) {
            continue;
        }
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k + 1 < n; ++k) {
            dist[order[k]] += (value(order[k + 1], axis) - value(order[k - 1], axis)) / (hi - lo);
        }
    }
    return dist;
}

namespace {

    // Smaller is better: scalar L, then complexity, then genome order.
    auto better_scalar(Individual const& a, Individual const& b, double alpha) -> bool
    {
        double const la = scalarize(a.objectives, alpha);
        double const lb = scalarize(b.objectives, alpha);
        if (la != lb) {
            return la < lb;
        }
        if (a.objectives.complexity != b.objectives.complexity) {
            return a.objectives.complexity < b.objectives.complexity;
        }
        return a.genome < b.genome;
    }

    struct Ranking {
        std::vector<std::size_t> rank;
        std::vector<double> crowding;
    };

    auto rank_population(std::span<const Individual> pop) -> Ranking
    {
        std::vector<Objectives> objs;
        objs.reserve(pop.size());
        for (auto const& ind : pop) {
            objs.push_back(ind.objectives);
        }
        Ranking r { std::vector<std::size_t>(pop.size()), std::vector<double>(pop.size()) };
        auto const fronts = fast_nondominated_sort(objs);
        for (std::size_t f = 0; f < fronts.size(); ++f) {
            std::vector<Objectives> fo;
            for (auto i : fronts[f]) {
                fo.push_back(objs[i]);
            }
            auto const cd = crowding_distance(fo);
            for (std::size_t j = 0; j < fronts[f].size(); ++j) {
                r.rank[fronts[f][j]] = f;
                r.crowding[fronts[f][j]] = cd[j];
            }
        }
        return r;
    }

    auto median(std::vector<double> v) -> double
    {
        std::sort(v.begin(), v.end());
        auto const n = v.size();
        if (n == 0) {
            return 0.0;
        }
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }

    class Archive {
    public:
        void add(Individual const& ind)
        {
            if (std::find_if(members_.begin(), members_.end(), [&](Individual const& m) { return m.genome == ind.genome; })
                == members_.end()) {
                members_.push_back(ind);
            }
        }

        [[nodiscard]] auto front() const -> std::vector<Individual>
        {
            std::vector<Individual> out;
            if (members_.empty()) {
                return out;
            }
            std::vector<Objectives> objs;
            for (auto const& m : members_) {
                objs.push_back(m.objectives);
            }
            auto const fronts = fast_nondominated_sort(objs);
            for (auto i : fronts.front()) {
                bool const repeat = std::any_of(
                    out.begin(), out.end(), [&](Individual const& o) { return o.objectives == members_[i].objectives; });
                if (!repeat) {
                    out.push_back(members_[i]);
                }
            }
            std::sort(out.begin(), out.end(), [](Individual const& a, Individual const& b) {
                if (a.objectives.complexity != b.objectives.complexity) {
                    return a.objectives.complexity < b.objectives.complexity;
                }
                if (a.objectives.robust_accuracy != b.objectives.robust_accuracy) {
                    return a.objectives.robust_accuracy < b.objectives.robust_accuracy;
                }
                return a.genome < b.genome;
            });
            return out;
        }

        [[nodiscard]] auto members() const noexcept -> std::vector<Individual> const& { return members_; }

    private:
        std::vector<Individual> members_;
    };

    struct Tracker {
        SearchConfig const& config;
        PolicyEvaluator& evaluator;
        Archive archive;
        std::vector<Individual> population;
        std::vector<HistoryRow> history;
        std::vector<ParetoRow> pareto_log;

        void record(std::size_t generation, std::span<const Individual> sample, bool snapshot = true)
        {
            double const alpha = config.alpha_value();
            std::vector<double> ls;
            for (auto const& ind : sample) {
                ls.push_back(scalarize(ind.objectives, alpha));
            }
            history.push_back({ generation, *std::min_element(ls.begin(), ls.end()), median(ls) });
            if (!snapshot) {
                return;
            }
            for (auto const& m : archive.front()) {
                pareto_log.push_back({ generation, m });
            }
        }

        [[nodiscard]] auto result() const -> SearchResult
        {
            SearchResult r;
            r.pareto_front = archive.front();
            r.final_population = population;
            r.history = history;
            r.pareto_log = pareto_log;
            r.stats = evaluator.stats();
            if (!archive.members().empty()) {
                double const alpha = config.alpha_value();
                auto const& ms = archive.members();
                auto const best = std::min_element(
                    ms.begin(), ms.end(), [&](Individual const& a, Individual const& b) { return better_scalar(a, b, alpha); });
                r.best_genome = best->genome;
                r.best_objectives = best->objectives;
                r.best_scalar = scalarize(best->objectives, alpha);
                r.best_policy = decode(best->genome, config);
            }
            return r;
        }

        auto evaluate(Genome const& g) -> Individual
        {
            Individual ind { g, evaluator.evaluate(g) };
            archive.add(ind);
            return ind;
        }
    };

} // namespace

auto select_survivors(std::span<const Individual> pool, std::size_t keep, double alpha) -> std::vector<Individual>
{
    std::vector<std::size_t> unique;
    std::vector<std::size_t> duplicates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        bool seen = false;
        for (auto j : unique) {
            if (pool[j].genome == pool[i].genome || pool[j].objectives == pool[i].objectives) {
                seen = true;
                break;
            }
        }
        (seen ? duplicates : unique).push_back(i);
    }
    std::vector<Individual> out;
    if (keep == 0 || pool.empty()) {
        return out;
    }
    std::vector<Objectives> objs;
    for (auto i : unique) {
        objs.push_back(pool[i].objectives);
    }
    std::size_t protect = 0;
    for (std::size_t u = 1; u < unique.size(); ++u) {
        if (better_scalar(pool[unique[u]], pool[unique[protect]], alpha)) {
            protect = u;
        }
    }
    out.push_back(pool[unique[protect]]);
    for (auto const& front : fast_nondominated_sort(objs)) {
        if (out.size() >= keep) {
            break;
        }
        std::vector<std::size_t> members;
        for (auto u : front) {
            if (u != protect) {
                members.push_back(u);
            }
        }
        if (out.size() + members.size() <= keep) {
            for (auto u : members) {
                out.push_back(pool[unique[u]]);
            }
            continue;
        }
        std::vector<Objectives> fo;
        for (auto u : front) {
            fo.push_back(objs[u]);
        }
        auto const cd = crowding_distance(fo);
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t j = 0; j < front.size(); ++j) {
            if (front[j] != protect) {
                scored.emplace_back(cd[j], front[j]);
            }
        }
        std::sort(scored.begin(), scored.end(), [&](auto const& a, auto const& b) {
            if (a.first != b.first) {
                return a.first > b.first;
            }
            return pool[unique[a.second]].genome < pool[unique[b.second]].genome;
        });
        for (std::size_t j = 0; out.size() < keep; ++j) {
            out.push_back(pool[unique[scored[j].second]]);
        }
    }
    for (std::size_t j = 0; out.size() < keep && j < duplicates.size(); ++j) {
        out.push_back(pool[duplicates[j]]);
    }
    return out;
}

auto nsga2_step(std::span<const Individual> parents, SearchConfig const& config, PolicyEvaluator& evaluator, Rng& rng,
    StepControls const& controls) -> std::vector<Individual>
{
    if (parents.empty()) {
        throw ValidationError("nsga2 step needs a non-empty population");
    }
    auto const k = parents.size();
    auto const ranking = rank_population(parents);
    auto const tournament = [&] {
        auto const a = static_cast<std::size_t>(rng.uniform_int(k));
        auto const b = static_cast<std::size_t>(rng.uniform_int(k));
        if (ranking.rank[a] != ranking.rank[b]) {
            return ranking.rank[a] < ranking.rank[b] ? a : b;
        }
        if (ranking.crowding[a] != ranking.crowding[b]) {
            return ranking.crowding[a] > ranking.crowding[b] ? a : b;
        }
        return parents[b].genome < parents[a].genome ? b : a;
    };

    auto const ops = static_cast<std::uint32_t>(config.catalog().size());
    std::vector<Individual> pool(parents.begin(), parents.end());
    for (std::size_t o = 0; o < config.offspring; ++o) {
        auto const f1 = parents[tournament()].genome.flatten();
        auto const f2 = parents[tournament()].genome.flatten();
        auto const len = f1.size();
        std::size_t cut = 0;
        if (controls.crossover_point) {
            cut = std::min(*controls.crossover_point, len);
        } else if (len > 1) {
            cut = 1 + static_cast<std::size_t>(rng.uniform_int(len - 1));
        }
        std::vector<std::uint32_t> child(f1.begin(), f1.begin() + static_cast<std::ptrdiff_t>(cut));
        child.insert(child.end(), f2.begin() + static_cast<std::ptrdiff_t>(cut), f2.end());
        double const rate = controls.mutation_rate ? *controls.mutation_rate : 1.0 / static_cast<double>(len);
        for (std::size_t i = 0; i < len; ++i) {
            if (rng.uniform() < rate) {
                long const hi = i % 3 == 0 ? static_cast<long>(ops) - 1 : static_cast<long>(kGridLevels) - 1;
                long const v = static_cast<long>(child[i]) + std::lround(1.5 * rng.normal());
                child[i] = static_cast<std::uint32_t>(std::clamp(v, 0L, hi));
            }
        }
        Genome g = Genome::unflatten(child);
        Objectives const obj = evaluator.evaluate(g);
        pool.push_back({ std::move(g), obj });
        if (controls.offspring != nullptr) {
            controls.offspring->push_back(pool.back());
        }
    }
    return select_survivors(pool, k, config.alpha_value());
}

auto nsga2_search(SearchConfig const& config, PolicyEvaluator& evaluator) -> SearchResult
{
    validate_config(config);
    Tracker tr { config, evaluator, {}, {}, {}, {} };
    Rng init(derive_seed(config.seed, 1));
    Rng steps(derive_seed(config.seed, 2));
    try {
        for (std::size_t i = 0; i < config.population; ++i) {
            Genome g = i < config.seed_genomes.size() ? config.seed_genomes[i] : random_genome(config, init);
            tr.population.push_back(tr.evaluate(g));
        }
        tr.record(0, tr.population);
        for (std::size_t gen = 1; gen <= config.generations; ++gen) {
            std::vector<Individual> offspring;
            StepControls controls;
            controls.offspring = &offspring;
            auto next = nsga2_step(tr.population, config, evaluator, steps, controls);
            for (auto const& ind : offspring) {
                tr.archive.add(ind);
            }
            tr.population = std::move(next);
            tr.record(gen, tr.population);
        }
    } catch (BudgetExhausted const&) {
        throw BudgetExhausted(tr.result());
    }
    return tr.result();
}

auto random_search(std::size_t budget, SearchConfig const& config, PolicyEvaluator& evaluator) -> SearchResult
{
    validate_config(config);
    if (budget < 1) {
        throw ValidationError("random search budget must be at least 1");
    }
    Tracker tr { config, evaluator, {}, {}, {}, {} };
    Rng init(derive_seed(config.seed, 1));
    try {
        for (std::size_t i = 0; i < budget; ++i) {
            tr.population.push_back(tr.evaluate(random_genome(config, init)));
            tr.record(i, tr.population, i + 1 == budget);
        }
    } catch (BudgetExhausted const&) {
        throw BudgetExhausted(tr.result());
    }
    return tr.result();
}

} // namespace caa
