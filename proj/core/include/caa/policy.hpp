#pragma once

#include "caa/attacks.hpp"
#include "caa/catalog.hpp"
#include "caa/data.hpp"
#include "caa/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace caa {

inline constexpr std::size_t kMaxPolicyLength = 7;

struct PolicyElement {
    AttackKind kind = AttackKind::identity;
    double epsilon = 0.0;
    std::uint32_t steps = 0;

    friend auto operator==(PolicyElement const&, PolicyElement const&) -> bool = default;
};

struct Policy {
    std::vector<PolicyElement> elements;
    Norm norm = Norm::linf;
    double eps_global = 0.0;
    std::uint32_t restarts = 1;

    friend auto operator==(Policy const&, Policy const&) -> bool = default;
};

// Throws ValidationError on: length outside [1, 7], zero restarts, an element
// whose kind does not run under the policy norm, epsilon outside
// [0, eps_global], steps above the kind's limit, or an unrestricted policy
// with eps_global != 1. When targeted, MultiTargeted elements are rejected.
void validate_policy(Policy const& policy, bool targeted = false);

// Gradient evaluations and queries of one example, times restarts.
[[nodiscard]] auto policy_complexity(Policy const& policy, std::uint32_t num_classes) -> Cost;

// Clip (linf) or rescale (l2) x_cur - x_orig into the eps_global ball, then
// clip to the box. Points already inside the ball come back unchanged.
[[nodiscard]] auto reproject(Tensor const& x_orig, Tensor const& x_cur, double eps_global, Norm norm) -> Tensor;

// Seed of one stage: restart number, position among the non-Identity stages,
// and the example's id. Identity stages consume no seed.
[[nodiscard]] auto stage_seed(std::uint64_t base, std::uint32_t restart, std::uint32_t ordinal, std::uint64_t example_id)
    -> std::uint64_t;

struct RunOptions {
    std::uint64_t seed = 0;
    // 0 picks default_workers().
    std::size_t workers = 0;
    // Attacks are computed on this model when set; success is always judged
    // on the model passed to run_policy.
    Classifier const* generation_model = nullptr;
    // Per-example targets (same length as the batch) for targeted runs.
    std::vector<int> targets;
    // Per-example ids used for seeding; positions 0..n-1 when empty.
    std::vector<std::uint64_t> example_ids;
    // Stop working on an example once it is fooled. Leaves success and robust
    // accuracy unchanged; the recorded adversary may be an earlier stage.
    bool stop_on_success = false;
    AttackParams params;
};

struct PolicyOutcome {
    std::vector<Tensor> adversarial_examples;
    std::vector<bool> success_mask;
    // [stage][example], OR over restarts.
    std::vector<std::vector<bool>> per_stage_success;
    std::vector<bool> clean_success;
    std::uint64_t gradient_evals = 0;
    std::uint64_t queries = 0;

    [[nodiscard]] auto size() const noexcept -> std::size_t { return success_mask.size(); }
    // Fraction of examples not fooled; 1 - targeted success rate in targeted runs.
    [[nodiscard]] auto robust_accuracy() const -> double;
};

// Runs the stages in order, each starting from the previous output, with
// re-projection after every stage in l-p spaces. An example counts as fooled
// when its clean input or any stage output (any restart) fools the judging
// model. The recorded adversary is the first fooling stage output in
// (restart, stage) order, else the final output of the first restart.
[[nodiscard]] auto run_policy(Policy const& policy, std::span<const Tensor> images, std::span<const int> labels,
    Classifier const& model, RunOptions const& options = {}) -> PolicyOutcome;

[[nodiscard]] auto run_policy(Policy const& policy, Dataset const& data, std::span<const std::size_t> indices,
    Classifier const& model, RunOptions options = {}) -> PolicyOutcome;

// Worker count from CAA_WORKERS, else 1.
[[nodiscard]] auto default_workers() -> std::size_t;

// JSON text: {"norm", "eps_global", "restarts", "elements": [{"attack", "epsilon", "steps"}]}
[[nodiscard]] auto serialize_policy(Policy const& policy) -> std::string;
// Throws ParseError whose position is a byte offset for malformed JSON or a
// JSON pointer for schema violations.
[[nodiscard]] auto parse_policy(std::string_view text) -> Policy;

// "('MT-LinfAttack', eps=0.0314, t=50) -> ..."
[[nodiscard]] auto describe_policy(Policy const& policy) -> std::string;

} // namespace caa
