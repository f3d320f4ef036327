#include "caa/catalog.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace caa {

namespace {

    constexpr std::array<AttackKind, kAttackKindCount> kAll {
        AttackKind::identity, AttackKind::fgsm, AttackKind::mi_linf, AttackKind::pgd_linf, AttackKind::cw_linf,
        AttackKind::mt_linf, AttackKind::spsa, AttackKind::ddn, AttackKind::cw_l2, AttackKind::mi_l2, AttackKind::pgd_l2,
        AttackKind::mt_l2, AttackKind::square, AttackKind::spatial, AttackKind::gaussian_noise, AttackKind::shot_noise,
        AttackKind::impulse_noise, AttackKind::brightness, AttackKind::contrast, AttackKind::pixelate,
        AttackKind::gaussian_blur, AttackKind::saturate,
    };

    constexpr std::array<std::string_view, kAttackKindCount> kNames {
        "IdentityAttack", "FGSMAttack", "MI-LinfAttack", "PGD-LinfAttack", "CW-LinfAttack", "MT-LinfAttack", "SPSAAttack",
        "DDNAttack", "CW-L2Attack", "MI-L2Attack", "PGD-L2Attack", "MT-L2Attack", "SquareAttack", "SpatialAttack",
        "GaussianNoiseAttack", "ShotNoiseAttack", "ImpulseNoiseAttack", "BrightnessAttack", "ContrastAttack",
        "PixelateAttack", "GaussianBlurAttack", "SaturateAttack",
    };

    constexpr std::array<std::pair<std::string_view, AttackKind>, 6> kAliases { {
        { "CWLinfAttack", AttackKind::cw_linf },
        { "CW-LinfAttak", AttackKind::cw_linf },
        { "CWL2Attack", AttackKind::cw_l2 },
        { "SPSALinfAttack", AttackKind::spsa },
        { "DDNL2Attack", AttackKind::ddn },
        { "FGSM-LinfAttack", AttackKind::fgsm },
    } };

    auto index(AttackKind k) -> std::size_t { return static_cast<std::size_t>(k); }

} // namespace

auto norm_name(Norm n) -> std::string_view
{
    switch (n) {
    case Norm::linf:
        return "linf";
    case Norm::l2:
        return "l2";
    case Norm::unrestricted:
        return "unrestricted";
    }
    return "?";
}

auto parse_norm(std::string_view s) -> std::optional<Norm>
{
    if (s == "linf") {
        return Norm::linf;
    }
    if (s == "l2") {
        return Norm::l2;
    }
    if (s == "unrestricted") {
        return Norm::unrestricted;
    }
    return std::nullopt;
}

auto all_attack_kinds() -> std::span<const AttackKind>
{
    return kAll;
}

auto attack_name(AttackKind k) -> std::string_view
{
    return kNames[index(k)];
}

auto parse_attack_name(std::string_view s) -> std::optional<AttackKind>
{
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == s) {
            return kAll[i];
        }
    }
    for (auto const& [alias, kind] : kAliases) {
        if (alias == s) {
            return kind;
        }
    }
    return std::nullopt;
}

auto is_corruption(AttackKind k) noexcept -> bool
{
    return index(k) >= index(AttackKind::gaussian_noise);
}

auto is_multi_targeted(AttackKind k) noexcept -> bool
{
    return k == AttackKind::mt_linf || k == AttackKind::mt_l2;
}

auto supports_norm(AttackKind k, Norm n) noexcept -> bool
{
    switch (k) {
    case AttackKind::identity:
        return true;
    case AttackKind::fgsm:
    case AttackKind::mi_linf:
    case AttackKind::pgd_linf:
    case AttackKind::cw_linf:
    case AttackKind::mt_linf:
        return n == Norm::linf;
    case AttackKind::spsa:
        return n == Norm::linf || n == Norm::unrestricted;
    case AttackKind::ddn:
    case AttackKind::cw_l2:
    case AttackKind::mi_l2:
    case AttackKind::pgd_l2:
    case AttackKind::mt_l2:
    case AttackKind::square:
        return n == Norm::l2;
    default:
        return n == Norm::unrestricted;
    }
}

auto uses_epsilon(AttackKind k, Norm space) noexcept -> bool
{
    return k != AttackKind::identity && space != Norm::unrestricted;
}

auto uses_steps(AttackKind k, Norm space) noexcept -> bool
{
    return k != AttackKind::identity && k != AttackKind::fgsm && space != Norm::unrestricted;
}

auto attack_catalog(Norm space, bool targeted) -> std::vector<AttackKind>
{
    std::vector<AttackKind> c;
    switch (space) {
    case Norm::linf:
        c = { AttackKind::mi_linf, AttackKind::mt_linf, AttackKind::fgsm, AttackKind::pgd_linf, AttackKind::cw_linf,
            AttackKind::spsa, AttackKind::identity };
        break;
    case Norm::l2:
        c = { AttackKind::ddn, AttackKind::cw_l2, AttackKind::mi_l2, AttackKind::pgd_l2, AttackKind::mt_l2,
            AttackKind::square, AttackKind::identity };
        break;
    case Norm::unrestricted:
        c = { AttackKind::gaussian_noise, AttackKind::shot_noise, AttackKind::impulse_noise, AttackKind::brightness,
            AttackKind::contrast, AttackKind::pixelate, AttackKind::gaussian_blur, AttackKind::saturate,
            AttackKind::spatial, AttackKind::spsa, AttackKind::identity };
        break;
    }
    if (targeted) {
        std::erase_if(c, is_multi_targeted);
    }
    return c;
}

auto step_limit(AttackKind k, Norm space) -> std::uint32_t
{
    if (k == AttackKind::identity) {
        return 0;
    }
    switch (space) {
    case Norm::linf:
        if (k == AttackKind::fgsm) {
            return 1;
        }
        return k == AttackKind::spsa ? 1000 : 200;
    case Norm::l2:
        return 2000;
    case Norm::unrestricted:
        return k == AttackKind::spsa ? kUnrestrictedSpsaSteps : 1;
    }
    return 0;
}

auto attack_cost(AttackKind k, std::uint32_t steps, std::uint32_t num_classes) -> Cost
{
    std::uint64_t const t = steps;
    switch (k) {
    case AttackKind::identity:
        return {};
    case AttackKind::mt_linf:
    case AttackKind::mt_l2: {
        std::uint64_t const targets = std::min<std::uint64_t>(num_classes > 0 ? num_classes - 1 : 0, kMultiTargetedMaxTargets);
        return { t * targets, 0 };
    }
    case AttackKind::spsa:
        return { t, 2 * t };
    case AttackKind::square:
        return { 0, t };
    case AttackKind::spatial:
        return { 0, kSpatialGridEvaluations };
    default:
        if (is_corruption(k)) {
            return {};
        }
        return { t, 0 };
    }
}

} // namespace caa
