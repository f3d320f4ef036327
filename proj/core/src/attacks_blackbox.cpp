#include "caa/attacks.hpp"

#include "attack_detail.hpp"
#include "caa/error.hpp"
#include "caa/rng.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>

namespace caa {

namespace {

    struct Estimate {
        double plus = 0.0;
        double minus = 0.0;
    };

    auto spsa_estimate(detail::Objective const& objective, std::span<const double> x, double delta, std::uint64_t seed,
        std::span<double> out) -> Estimate
    {
        auto const n = x.size();
        Rng rng(seed);
        std::vector<double> v(n);
        for (double& vi : v) {
            vi = rng.rademacher();
        }
        std::vector<double> probe(n);
        for (std::size_t i = 0; i < n; ++i) {
            probe[i] = x[i] + delta * v[i];
        }
        double const lp = objective.value(probe);
        for (std::size_t i = 0; i < n; ++i) {
            probe[i] = x[i] - delta * v[i];
        }
        double const lm = objective.value(probe);
        double const scale = (lp - lm) / (2.0 * delta);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = scale * v[i];
        }
        return { lp, lm };
    }

    constexpr std::array<double, 5> kShifts { -5.0, -2.5, 0.0, 2.5, 5.0 };
    constexpr std::array<double, 5> kAngles { -30.0, -15.0, 0.0, 15.0, 30.0 };

} // namespace

namespace detail {

    auto spsa_attack(AttackSpec const& spec, std::span<const double> x0, Objective const& objective, AttackParams const& params)
        -> std::vector<double>
    {
        auto const n = x0.size();
        std::vector<double> x(x0.begin(), x0.end());
        std::vector<double> g(n);
        double const initial = params.fixed_step ? *params.fixed_step : params.spsa_lr;
        StepSchedule schedule(initial, std::min(initial, params.spsa_lr / 10.0), (std::max<std::uint32_t>(spec.steps, 1) + 9) / 10);
        for (std::uint32_t k = 0; k < spec.steps; ++k) {
            auto const est = spsa_estimate(objective, x, params.spsa_delta, derive_seed(spec.seed, k), g);
            double const step = params.fixed_step ? *params.fixed_step : schedule.next(0.5 * (est.plus + est.minus));
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += step * sign(g[i]);
            }
            project(x, x0, spec.epsilon, Norm::linf);
        }
        return x;
    }

} // namespace detail

auto spsa_gradient_estimate(Classifier const& model, Tensor const& x, int y, LossKind const& loss, double delta,
    std::uint64_t seed) -> Tensor
{
    if (delta == 0.0 || !std::isfinite(delta)) {
        throw ValidationError("SPSA perturbation size must be finite and non-zero");
    }
    if (x.size() != model.input_size()) {
        throw RejectedInput("input does not match the model's input dims");
    }
    detail::Objective const objective { &model, y, loss, y, std::nullopt };
    auto const xd = x.to_doubles();
    std::vector<double> g(xd.size());
    spsa_estimate(objective, xd, delta, seed, g);
    return Tensor::from_doubles(x.shape, g);
}

auto spatial_grid() -> std::vector<SpatialTransform>
{
    std::vector<SpatialTransform> grid;
    grid.reserve(kSpatialGridEvaluations);
    for (double a : kAngles) {
        for (double tx : kShifts) {
            for (double ty : kShifts) {
                grid.push_back({ tx, ty, a });
            }
        }
    }
    return grid;
}

auto spatial_transform(Tensor const& x, SpatialTransform const& t) -> Tensor
{
    if (x.shape.size() != 2 && x.shape.size() != 3) {
        throw RejectedInput("spatial transform needs an HW or HWC image");
    }
    std::size_t const h = x.shape[0];
    std::size_t const w = x.shape[1];
    std::size_t const c = x.shape.size() == 3 ? x.shape[2] : 1;
    double const rad = t.degrees * std::numbers::pi / 180.0;
    double const cs = t.degrees == 0.0 ? 1.0 : std::cos(rad);
    double const sn = t.degrees == 0.0 ? 0.0 : std::sin(rad);
    double const cx = (static_cast<double>(w) - 1.0) / 2.0;
    double const cy = (static_cast<double>(h) - 1.0) / 2.0;

    auto pixel = [&](long r, long q, std::size_t ch) -> double {
        if (r < 0 || q < 0 || r >= static_cast<long>(h) || q >= static_cast<long>(w)) {
            return 0.0;
        }
        return x.data[(static_cast<std::size_t>(r) * w + static_cast<std::size_t>(q)) * c + ch];
    };

    Tensor out(x.shape);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t q = 0; q < w; ++q) {
            double const px = static_cast<double>(q) - cx - t.tx;
            double const py = static_cast<double>(r) - cy - t.ty;
            double const sx = cs * px + sn * py + cx;
            double const sy = -sn * px + cs * py + cy;
            double const fx = std::floor(sx);
            double const fy = std::floor(sy);
            double const ax = sx - fx;
            double const ay = sy - fy;
            auto const x0 = static_cast<long>(fx);
            auto const y0 = static_cast<long>(fy);
            for (std::size_t ch = 0; ch < c; ++ch) {
                double v = (1.0 - ay) * ((1.0 - ax) * pixel(y0, x0, ch) + ax * pixel(y0, x0 + 1, ch))
                    + ay * ((1.0 - ax) * pixel(y0 + 1, x0, ch) + ax * pixel(y0 + 1, x0 + 1, ch));
                out.data[(r * w + q) * c + ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

auto spatial_attack(Tensor const& x, int y, Classifier const& model, std::optional<int> target) -> AttackResult
{
    if (x.size() != model.input_size()) {
        throw RejectedInput("input does not match the model's input dims");
    }
    auto const objective = detail::make_objective(model, y, target, LossKind::cross_entropy());
    Tensor best;
    double best_loss = -std::numeric_limits<double>::infinity();
    for (auto const& t : spatial_grid()) {
        Tensor cand = spatial_transform(x, t);
        double const loss = objective.value(cand.to_doubles());
        if (loss > best_loss) {
            best_loss = loss;
            best = std::move(cand);
        }
    }
    return { std::move(best), attack_cost(AttackKind::spatial, 1, model.num_classes()) };
}

} // namespace caa
