#include "caa/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace caa {

auto Genome::flatten() const -> std::vector<std::uint32_t>
{
    std::vector<std::uint32_t> flat;
    flat.reserve(genes.size() * 3);
    for (auto const& g : genes) {
        flat.push_back(g.op);
        flat.push_back(g.eps);
        flat.push_back(g.t);
    }
    return flat;
}

auto Genome::unflatten(std::span<const std::uint32_t> flat) -> Genome
{
    if (flat.size() % 3 != 0) {
        throw ValidationError("flattened genome length must be a multiple of 3");
    }
    Genome g;
    for (std::size_t i = 0; i < flat.size(); i += 3) {
        g.genes.push_back({ flat[i], flat[i + 1], flat[i + 2] });
    }
    return g;
}

auto Genome::to_string() const -> std::string
{
    std::string out;
    for (std::size_t i = 0; i < genes.size(); ++i) {
        if (i > 0) {
            out += '|';
        }
        out += std::to_string(genes[i].op) + ':' + std::to_string(genes[i].eps) + ':' + std::to_string(genes[i].t);
    }
    return out;
}

auto Genome::parse(std::string_view text) -> Genome
{
    Genome g;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto const bar = std::min(text.find('|', pos), text.size());
        std::string const part(text.substr(pos, bar - pos));
        unsigned op = 0;
        unsigned eps = 0;
        unsigned t = 0;
        char tail = 0;
        if (std::sscanf(part.c_str(), "%u:%u:%u%c", &op, &eps, &t, &tail) != 3) {
            throw ParseError("malformed gene '" + part + "'", "character " + std::to_string(pos));
        }
        g.genes.push_back({ op, eps, t });
        pos = bar + 1;
    }
    return g;
}

auto mode_name(SearchMode m) -> std::string_view
{
    switch (m) {
    case SearchMode::direct:
        return "direct";
    case SearchMode::transfer:
        return "transfer";
    case SearchMode::targeted:
        return "targeted";
    }
    return "?";
}

auto parse_mode(std::string_view s) -> std::optional<SearchMode>
{
    for (auto m : { SearchMode::direct, SearchMode::transfer, SearchMode::targeted }) {
        if (mode_name(m) == s) {
            return m;
        }
    }
    return std::nullopt;
}

auto default_alpha(Norm space) -> double
{
    switch (space) {
    case Norm::linf:
        return 1e-4;
    case Norm::l2:
        return 1e-6;
    case Norm::unrestricted:
        return 0.0;
    }
    return 0.0;
}

void validate_config(SearchConfig const& c)
{
    if (c.policy_len < 1 || c.policy_len > kMaxPolicyLength) {
        throw ValidationError("policy length must be between 1 and 7");
    }
    if (c.population < 2) {
        throw ValidationError("population must hold at least two genomes");
    }
    if (c.space != Norm::unrestricted && (!(c.eps_max > 0.0) || c.eps_max > 1.0)) {
        throw ValidationError("eps_max must lie in (0, 1]");
    }
    if (c.alpha && (!std::isfinite(*c.alpha) || *c.alpha < 0.0)) {
        throw ValidationError("alpha must be finite and non-negative");
    }
    if (c.mode == SearchMode::targeted && c.fixed_target && *c.fixed_target < 0) {
        throw ValidationError("target class must be non-negative");
    }
    for (auto const& g : c.seed_genomes) {
        validate_genome(g, c);
    }
}

auto grid_epsilon(std::uint32_t index, double eps_max) -> double
{
    return static_cast<double>(index + 1) * eps_max / kGridLevels;
}

auto grid_steps(std::uint32_t index, std::uint32_t t_max) -> std::uint32_t
{
    auto const t = std::lround(static_cast<double>(index + 1) * t_max / kGridLevels);
    return static_cast<std::uint32_t>(std::max(1L, t));
}

auto decode(Genome const& genome, SearchConfig const& config) -> Policy
{
    validate_genome(genome, config);
    auto const catalog = config.catalog();
    Policy p;
    p.norm = config.space;
    p.eps_global = config.eps_global();
    p.restarts = 1;
    for (auto const& g : genome.genes) {
        AttackKind const k = catalog[g.op];
        PolicyElement e { k, 0.0, 0 };
        if (k == AttackKind::identity) {
            // nothing to set
        } else if (config.space == Norm::unrestricted) {
            if (k == AttackKind::spsa) {
                e.epsilon = kUnrestrictedSpsaEpsilon;
                e.steps = kUnrestrictedSpsaSteps;
            } else {
                e.epsilon = 1.0;
                e.steps = 1;
            }
        } else {
            e.epsilon = grid_epsilon(g.eps, config.eps_max);
            e.steps = k == AttackKind::fgsm ? 1 : grid_steps(g.t, step_limit(k, config.space));
        }
        p.elements.push_back(e);
    }
    return p;
}

auto encode(Policy const& policy, SearchConfig const& config) -> Encoded
{
    if (policy.norm != config.space) {
        throw ValidationError("policy norm differs from the search space");
    }
    auto const catalog = config.catalog();
    Encoded out;
    for (auto const& e : policy.elements) {
        auto const it = std::find(catalog.begin(), catalog.end(), e.kind);
        if (it == catalog.end()) {
            throw CatalogError(std::string(attack_name(e.kind)) + " is not in the search catalog");
        }
        Gene g { static_cast<std::uint32_t>(it - catalog.begin()), 0, 0 };
        if (uses_epsilon(e.kind, config.space)) {
            long const k = std::lround(e.epsilon * kGridLevels / config.eps_max) - 1;
            g.eps = static_cast<std::uint32_t>(std::clamp(k, 0L, static_cast<long>(kGridLevels) - 1));
            double const back = grid_epsilon(g.eps, config.eps_max);
            if (std::abs(back - e.epsilon) > 1e-12 * std::max(1.0, config.eps_max)) {
                out.off_grid = true;
            }
        }
        if (uses_steps(e.kind, config.space)) {
            std::uint32_t const t_max = step_limit(e.kind, config.space);
            long const k = std::lround(static_cast<double>(e.steps) * kGridLevels / t_max) - 1;
            g.t = static_cast<std::uint32_t>(std::clamp(k, 0L, static_cast<long>(kGridLevels) - 1));
            if (grid_steps(g.t, t_max) != e.steps) {
                out.off_grid = true;
            }
        }
        out.genome.genes.push_back(g);
    }
    return out;
}

auto random_genome(SearchConfig const& config, Rng& rng) -> Genome
{
    auto const ops = config.catalog().size();
    Genome g;
    for (std::size_t i = 0; i < config.policy_len; ++i) {
        Gene gene;
        gene.op = static_cast<std::uint32_t>(rng.uniform_int(ops));
        gene.eps = static_cast<std::uint32_t>(rng.uniform_int(kGridLevels));
        gene.t = static_cast<std::uint32_t>(rng.uniform_int(kGridLevels));
        g.genes.push_back(gene);
    }
    return g;
}

void validate_genome(Genome const& genome, SearchConfig const& config)
{
    if (genome.genes.size() != config.policy_len) {
        throw ValidationError("genome has " + std::to_string(genome.genes.size()) + " genes, expected "
            + std::to_string(config.policy_len));
    }
    auto const ops = config.catalog().size();
    for (auto const& g : genome.genes) {
        if (g.op >= ops || g.eps >= kGridLevels || g.t >= kGridLevels) {
            throw ValidationError("gene " + genome.to_string() + " has an index out of range");
        }
    }
}

namespace {
    __extension__ using u128 = unsigned __int128;
} // namespace

auto search_space_size(std::size_t catalog_size, std::size_t policy_len) -> std::string
{
    u128 const per_gene = static_cast<u128>(kGridLevels) * kGridLevels * catalog_size;
    u128 total = 1;
    for (std::size_t i = 0; i < policy_len; ++i) {
        total *= per_gene;
    }
    if (total == 0) {
        return "0";
    }
    std::string digits;
    while (total > 0) {
        digits.push_back(static_cast<char>('0' + static_cast<int>(total % 10)));
        total /= 10;
    }
    return { digits.rbegin(), digits.rend() };
}

auto scalarize(Objectives const& obj, double alpha) -> double
{
    return obj.robust_accuracy + alpha * static_cast<double>(obj.complexity);
}

auto dominates(Objectives const& a, Objectives const& b) -> bool
{
    bool const no_worse = a.robust_accuracy <= b.robust_accuracy && a.complexity <= b.complexity;
    bool const better = a.robust_accuracy < b.robust_accuracy || a.complexity < b.complexity;
    return no_worse && better;
}

auto plan_targets(Dataset const& data, std::span<const std::size_t> indices, std::optional<int> fixed) -> TargetPlan
{
    auto const k = static_cast<int>(data.num_classes());
    if (k < 2) {
        throw InvalidProblem("targeted search needs at least two classes");
    }
    if (fixed && (*fixed < 0 || *fixed >= k)) {
        throw InvalidTarget("fixed target class out of range");
    }
    TargetPlan plan;
    for (auto i : indices) {
        int const y = data.label(i);
        if (fixed) {
            if (y == *fixed) {
                continue;
            }
            plan.targets.push_back(*fixed);
        } else {
            plan.targets.push_back((y + 1) % k);
        }
        plan.indices.push_back(i);
    }
    return plan;
}

auto canonical_policy(Policy const& policy) -> Policy
{
    Policy out = policy;
    std::erase_if(out.elements, [](PolicyElement const& e) { return e.kind == AttackKind::identity; });
    if (out.elements.empty()) {
        out.elements.push_back({ AttackKind::identity, 0.0, 0 });
    }
    return out;
}

auto pad_genome(Genome const& genome, std::size_t n, SearchConfig const& config) -> Genome
{
    auto const catalog = config.catalog();
    auto const it = std::find(catalog.begin(), catalog.end(), AttackKind::identity);
    Genome out = genome;
    while (out.genes.size() < n) {
        out.genes.push_back({ static_cast<std::uint32_t>(it - catalog.begin()), 0, 0 });
    }
    return out;
}

PolicyEvaluator::PolicyEvaluator(SearchConfig config, SearchProblem problem)
    : config_(std::move(config))
    , problem_(std::move(problem))
{
    validate_config(config_);
    if (problem_.model == nullptr || problem_.data == nullptr) {
        throw ValidationError("search needs a model and a dataset");
    }
    if (config_.mode == SearchMode::transfer && problem_.generation_model == nullptr) {
        throw ValidationError("transfer mode needs a substitute model");
    }
    if (config_.mode != SearchMode::transfer && problem_.generation_model != nullptr
        && problem_.generation_model != problem_.model) {
        throw ValidationError("a substitute model is only used in transfer mode");
    }
    std::vector<std::size_t> indices = problem_.indices;
    if (config_.eval_subset_size > 0 && config_.eval_subset_size < indices.size()) {
        indices.resize(config_.eval_subset_size);
    }
    if (config_.targeted()) {
        auto plan = plan_targets(*problem_.data, indices, config_.fixed_target);
        indices = std::move(plan.indices);
        targets_ = std::move(plan.targets);
    }
    if (indices.empty()) {
        throw ValidationError("search batch is empty");
    }
    indices_ = std::move(indices);
}

PolicyEvaluator::PolicyEvaluator(SearchConfig config, Scorer scorer)
    : config_(std::move(config))
    , scorer_(std::move(scorer))
{
    validate_config(config_);
    if (!scorer_) {
        throw ValidationError("scorer must be callable");
    }
}

auto PolicyEvaluator::evaluate_policy(Policy const& policy) const -> Objectives
{
    if (scorer_) {
        return scorer_(policy);
    }
    RunOptions options;
    options.seed = config_.seed;
    options.workers = config_.workers;
    options.stop_on_success = true;
    options.targets = targets_;
    if (config_.mode == SearchMode::transfer) {
        options.generation_model = problem_.generation_model;
    }
    auto const outcome = run_policy(policy, *problem_.data, indices_, *problem_.model, options);
    return { outcome.robust_accuracy(), policy_complexity(policy, problem_.model->num_classes()).gradient_evals };
}

auto PolicyEvaluator::evaluate(Genome const& genome) -> Objectives
{
    Policy const policy = decode(genome, config_);
    {
        std::lock_guard lock(mutex_);
        if (config_.max_evaluations && stats_.requests >= *config_.max_evaluations) {
            throw BudgetExhausted(SearchResult {});
        }
        ++stats_.requests;
        if (auto it = by_genome_.find(genome); it != by_genome_.end()) {
            ++stats_.cache_hits;
            return it->second;
        }
    }
    std::string const key = scorer_ ? genome.to_string() : serialize_policy(canonical_policy(policy));
    {
        std::lock_guard lock(mutex_);
        if (auto it = by_policy_.find(key); it != by_policy_.end()) {
            Objectives const obj = it->second;
            by_genome_.emplace(genome, obj);
            return obj;
        }
    }
    Objectives const obj = evaluate_policy(policy);
    std::lock_guard lock(mutex_);
    ++stats_.policy_runs;
    by_policy_.emplace(key, obj);
    by_genome_.emplace(genome, obj);
    return obj;
}

auto PolicyEvaluator::stats() const -> EvaluationStats
{
    std::lock_guard lock(mutex_);
    return stats_;
}

namespace {

    auto fmt(char const* spec, double v) -> std::string
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, spec, v);
        return buf;
    }

} // namespace

auto pareto_csv(std::span<const ParetoRow> rows) -> std::string
{
    std::string out = "generation,robust_accuracy,complexity,genome\n";
    for (auto const& r : rows) {
        out += std::to_string(r.generation) + ',' + fmt("%.6f", r.member.objectives.robust_accuracy) + ','
            + std::to_string(r.member.objectives.complexity) + ',' + r.member.genome.to_string() + '\n';
    }
    return out;
}

auto history_csv(std::span<const HistoryRow> rows) -> std::string
{
    std::string out = "generation,best_scalar,median_scalar\n";
    for (auto const& r : rows) {
        out += std::to_string(r.generation) + ',' + fmt("%.8f", r.best_scalar) + ',' + fmt("%.8f", r.median_scalar) + '\n';
    }
    return out;
}

} // namespace caa
