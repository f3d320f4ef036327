#pragma once

#include "caa/catalog.hpp"
#include "caa/data.hpp"
#include "caa/error.hpp"
#include "caa/model.hpp"
#include "caa/policy.hpp"
#include "caa/rng.hpp"

#include <compare>
#include <functional>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace caa {

inline constexpr std::uint32_t kGridLevels = 8;

struct Gene {
    std::uint32_t op = 0;
    std::uint32_t eps = 0;
    std::uint32_t t = 0;

    friend auto operator<=>(Gene const&, Gene const&) = default;
};

struct Genome {
    std::vector<Gene> genes;

    [[nodiscard]] auto flatten() const -> std::vector<std::uint32_t>;
    static auto unflatten(std::span<const std::uint32_t> flat) -> Genome;
    // "op:eps:t|op:eps:t|..."
    [[nodiscard]] auto to_string() const -> std::string;
    static auto parse(std::string_view text) -> Genome;

    friend auto operator<=>(Genome const&, Genome const&) = default;
};

enum class SearchMode : std::uint8_t { direct, transfer, targeted };

[[nodiscard]] auto mode_name(SearchMode m) -> std::string_view;
[[nodiscard]] auto parse_mode(std::string_view s) -> std::optional<SearchMode>;

// 1e-4 for linf, 1e-6 for l2, 0 for unrestricted.
[[nodiscard]] auto default_alpha(Norm space) -> double;

struct SearchConfig {
    Norm space = Norm::linf;
    double eps_max = 8.0 / 255.0;
    std::size_t policy_len = 3;
    std::size_t population = 20;
    std::size_t generations = 40;
    std::size_t offspring = 10;
    std::optional<double> alpha;
    std::uint64_t seed = 0;
    SearchMode mode = SearchMode::direct;
    // 0 evaluates the whole search split.
    std::size_t eval_subset_size = 0;
    // Targeted mode: fixed target class; (y + 1) mod K when unset.
    std::optional<int> fixed_target;
    std::size_t workers = 0;
    // Hard cap on evaluation requests; unlimited when unset.
    std::optional<std::size_t> max_evaluations;
    // Genomes placed at the front of the initial population.
    std::vector<Genome> seed_genomes;

    [[nodiscard]] auto alpha_value() const -> double { return alpha ? *alpha : default_alpha(space); }
    [[nodiscard]] auto targeted() const noexcept -> bool { return mode == SearchMode::targeted; }
    [[nodiscard]] auto catalog() const -> std::vector<AttackKind> { return attack_catalog(space, targeted()); }
    // Global budget of decoded policies: eps_max, or 1 for unrestricted.
    [[nodiscard]] auto eps_global() const -> double { return space == Norm::unrestricted ? 1.0 : eps_max; }
};

// Throws ValidationError for an unusable configuration.
void validate_config(SearchConfig const& config);

// Grid value (k + 1) * max / 8.
[[nodiscard]] auto grid_epsilon(std::uint32_t index, double eps_max) -> double;
// round((k + 1) * t_max / 8), at least 1.
[[nodiscard]] auto grid_steps(std::uint32_t index, std::uint32_t t_max) -> std::uint32_t;

[[nodiscard]] auto decode(Genome const& genome, SearchConfig const& config) -> Policy;

struct Encoded {
    Genome genome;
    // Set when some epsilon or step count had to be rounded to the grid.
    bool off_grid = false;
};
[[nodiscard]] auto encode(Policy const& policy, SearchConfig const& config) -> Encoded;

// Uniform draw of every index.
[[nodiscard]] auto random_genome(SearchConfig const& config, Rng& rng) -> Genome;
// Throws ValidationError when an index is out of range or the length differs.
void validate_genome(Genome const& genome, SearchConfig const& config);

// Number of distinct genomes, (8 * 8 * |A|)^N, in decimal.
[[nodiscard]] auto search_space_size(std::size_t catalog_size, std::size_t policy_len) -> std::string;

struct Objectives {
    double robust_accuracy = 0.0;
    std::uint64_t complexity = 0;

    friend auto operator==(Objectives const&, Objectives const&) -> bool = default;
};

// robust_accuracy + alpha * complexity
[[nodiscard]] auto scalarize(Objectives const& obj, double alpha) -> double;
// <= on both, < on at least one.
[[nodiscard]] auto dominates(Objectives const& a, Objectives const& b) -> bool;

struct Individual {
    Genome genome;
    Objectives objectives;

    friend auto operator==(Individual const&, Individual const&) -> bool = default;
};

// Everything the evaluator needs besides the configuration.
struct SearchProblem {
    Classifier const* model = nullptr;
    // Substitute that crafts the examples in transfer mode.
    Classifier const* generation_model = nullptr;
    Dataset const* data = nullptr;
    std::vector<std::size_t> indices;
};

// Per-example targets for a targeted search: (y + 1) mod K, or the fixed
// class. Examples already labelled with the fixed class are dropped from
// `indices`.
struct TargetPlan {
    std::vector<std::size_t> indices;
    std::vector<int> targets;
};
[[nodiscard]] auto plan_targets(Dataset const& data, std::span<const std::size_t> indices, std::optional<int> fixed) -> TargetPlan;

struct EvaluationStats {
    std::size_t requests = 0;
    std::size_t cache_hits = 0;
    std::size_t policy_runs = 0;
};

// Memoized genome -> objectives evaluation. Genomes that decode to the same
// policy once Identity stages are dropped share one run. Safe to call from
// several threads.
class PolicyEvaluator {
public:
    PolicyEvaluator(SearchConfig config, SearchProblem problem);
    // Scores decoded policies with a caller-supplied function instead of
    // running attacks; used to exercise the search machinery in isolation.
    using Scorer = std::function<Objectives(Policy const&)>;
    PolicyEvaluator(SearchConfig config, Scorer scorer);

    auto evaluate(Genome const& genome) -> Objectives;
    // Uncached evaluation of an arbitrary policy on the same batch.
    [[nodiscard]] auto evaluate_policy(Policy const& policy) const -> Objectives;
    [[nodiscard]] auto stats() const -> EvaluationStats;
    [[nodiscard]] auto config() const noexcept -> SearchConfig const& { return config_; }
    [[nodiscard]] auto batch_size() const noexcept -> std::size_t { return indices_.size(); }

private:
    SearchConfig config_;
    SearchProblem problem_;
    std::vector<std::size_t> indices_;
    std::vector<int> targets_;
    Scorer scorer_;
    mutable std::mutex mutex_;
    std::map<Genome, Objectives> by_genome_;
    std::map<std::string, Objectives> by_policy_;
    EvaluationStats stats_;
};

struct HistoryRow {
    std::size_t generation = 0;
    double best_scalar = 0.0;
    double median_scalar = 0.0;
};

struct ParetoRow {
    std::size_t generation = 0;
    Individual member;
};

struct SearchResult {
    Genome best_genome;
    Policy best_policy;
    Objectives best_objectives;
    double best_scalar = 0.0;
    // Nondominated set of every evaluated genome, one genome (the first
    // evaluated) per distinct objective pair.
    std::vector<Individual> pareto_front;
    std::vector<Individual> final_population;
    std::vector<HistoryRow> history;
    std::vector<ParetoRow> pareto_log;
    EvaluationStats stats;
};

// Thrown when SearchConfig::max_evaluations runs out; carries the best
// result found so far.
class BudgetExhausted : public Error {
public:
    explicit BudgetExhausted(SearchResult partial)
        : Error("evaluation budget exhausted")
        , partial_(std::move(partial))
    {
    }
    [[nodiscard]] auto partial() const noexcept -> SearchResult const& { return partial_; }

private:
    SearchResult partial_;
};

// Fronts of indices, each ascending; front 0 is the nondominated set.
[[nodiscard]] auto fast_nondominated_sort(std::span<const Objectives> population) -> std::vector<std::vector<std::size_t>>;
[[nodiscard]] auto crowding_distance(std::span<const Objectives> front) -> std::vector<double>;

struct StepControls {
    std::optional<std::size_t> crossover_point;
    std::optional<double> mutation_rate;
    // Receives every evaluated offspring, survivors or not.
    std::vector<Individual>* offspring = nullptr;
};

// One generation: tournament selection, single-point crossover, integer
// mutation, evaluation of the offspring and elitist survival of the best K.
[[nodiscard]] auto nsga2_step(std::span<const Individual> parents, SearchConfig const& config, PolicyEvaluator& evaluator,
    Rng& rng, StepControls const& controls = {}) -> std::vector<Individual>;

// Elitist truncation of a combined population to `keep` members. Members
// repeating an earlier member's genome or objectives rank after all distinct
// ones; the scalar-best member is always kept.
[[nodiscard]] auto select_survivors(std::span<const Individual> pool, std::size_t keep, double alpha) -> std::vector<Individual>;

[[nodiscard]] auto nsga2_search(SearchConfig const& config, PolicyEvaluator& evaluator) -> SearchResult;
[[nodiscard]] auto random_search(std::size_t budget, SearchConfig const& config, PolicyEvaluator& evaluator) -> SearchResult;

// Removes Identity stages (keeping one when nothing else remains).
[[nodiscard]] auto canonical_policy(Policy const& policy) -> Policy;
// Appends Identity genes up to length n.
[[nodiscard]] auto pad_genome(Genome const& genome, std::size_t n, SearchConfig const& config) -> Genome;

[[nodiscard]] auto pareto_csv(std::span<const ParetoRow> rows) -> std::string;
[[nodiscard]] auto history_csv(std::span<const HistoryRow> rows) -> std::string;

} // namespace caa
