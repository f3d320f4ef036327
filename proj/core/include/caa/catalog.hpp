#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace caa {

enum class Norm : std::uint8_t { linf, l2, unrestricted };

[[nodiscard]] auto norm_name(Norm n) -> std::string_view;
[[nodiscard]] auto parse_norm(std::string_view s) -> std::optional<Norm>;

enum class AttackKind : std::uint8_t {
    identity,
    fgsm,
    mi_linf,
    pgd_linf,
    cw_linf,
    mt_linf,
    spsa,
    ddn,
    cw_l2,
    mi_l2,
    pgd_l2,
    mt_l2,
    square,
    spatial,
    gaussian_noise,
    shot_noise,
    impulse_noise,
    brightness,
    contrast,
    pixelate,
    gaussian_blur,
    saturate,
};

inline constexpr std::size_t kAttackKindCount = 22;

[[nodiscard]] auto all_attack_kinds() -> std::span<const AttackKind>;

// Canonical file/CLI spelling, e.g. "PGD-LinfAttack", "GaussianNoiseAttack".
[[nodiscard]] auto attack_name(AttackKind k) -> std::string_view;
// Accepts the canonical names plus the alternate spellings that occur in
// published policy listings ("CWLinfAttack", "SPSALinfAttack", ...).
[[nodiscard]] auto parse_attack_name(std::string_view s) -> std::optional<AttackKind>;

[[nodiscard]] auto is_corruption(AttackKind k) noexcept -> bool;
[[nodiscard]] auto is_multi_targeted(AttackKind k) noexcept -> bool;
// Whether the kind may run under the given threat model. Identity runs under
// all three; SPSA under linf and unrestricted.
[[nodiscard]] auto supports_norm(AttackKind k, Norm n) noexcept -> bool;
// Whether the searched epsilon / steps are meaningful for the kind in a space.
[[nodiscard]] auto uses_epsilon(AttackKind k, Norm space) noexcept -> bool;
[[nodiscard]] auto uses_steps(AttackKind k, Norm space) noexcept -> bool;

// Candidate pool per space in table order; targeted pools drop the
// MultiTargeted attacks.
[[nodiscard]] auto attack_catalog(Norm space, bool targeted = false) -> std::vector<AttackKind>;

// Largest searchable step count: 200 for iterative gradient attacks, 1000
// for black-box attacks under linf, 2000 for every l2 attack, 1 for FGSM and
// the fixed unrestricted operations, 100 for unrestricted SPSA, 0 for
// Identity.
[[nodiscard]] auto step_limit(AttackKind k, Norm space) -> std::uint32_t;

// Unrestricted-space SPSA runs with a fixed magnitude and step count.
inline constexpr double kUnrestrictedSpsaEpsilon = 16.0 / 255.0;
inline constexpr std::uint32_t kUnrestrictedSpsaSteps = 100;
inline constexpr std::uint32_t kMultiTargetedMaxTargets = 9;
inline constexpr std::uint32_t kSpatialGridEvaluations = 125;

struct Cost {
    std::uint64_t gradient_evals = 0;
    std::uint64_t queries = 0;

    auto operator+=(Cost const& o) -> Cost&
    {
        gradient_evals += o.gradient_evals;
        queries += o.queries;
        return *this;
    }
    friend auto operator==(Cost const&, Cost const&) -> bool = default;
};

// Gradient evaluations and black-box queries of one attack run:
// FGSM/PGD/MI/CW/DDN report t gradients, MT t * min(K-1, 9), SPSA t
// gradients (estimates) and 2t queries, Square t queries, Spatial 125
// queries, Identity and corruptions nothing.
[[nodiscard]] auto attack_cost(AttackKind k, std::uint32_t steps, std::uint32_t num_classes) -> Cost;

} // namespace caa
