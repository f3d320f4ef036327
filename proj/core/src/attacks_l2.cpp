#include "caa/attacks.hpp"

#include "attack_detail.hpp"
#include "caa/error.hpp"
#include "caa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace caa {

namespace detail {

    auto cw_l2_attack(AttackSpec const& spec, std::span<const double> x0, Objective const& objective, AttackParams const& params)
        -> std::vector<double>
    {
        auto const n = x0.size();
        std::vector<double> x(x0.begin(), x0.end());
        std::vector<double> g(n);
        std::vector<double> m(n, 0.0);
        std::vector<double> v(n, 0.0);
        std::vector<double> best_adv;
        double best_norm = std::numeric_limits<double>::infinity();
        std::vector<double> best_margin_x = x;
        double best_margin = -std::numeric_limits<double>::infinity();

        auto consider = [&](std::span<const double> point, Classifier::Evaluation const& e) {
            if (objective.fooled(e.predicted)) {
                double sq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    sq += (point[i] - x0[i]) * (point[i] - x0[i]);
                }
                if (sq < best_norm) {
                    best_norm = sq;
                    best_adv.assign(point.begin(), point.end());
                }
            }
            if (e.value > best_margin) {
                best_margin = e.value;
                best_margin_x.assign(point.begin(), point.end());
            }
        };

        double b1 = 1.0;
        double b2 = 1.0;
        for (std::uint32_t k = 0; k < spec.steps; ++k) {
            auto const e = objective.eval(x, g);
            consider(x, e);
            b1 *= params.adam_beta1;
            b2 *= params.adam_beta2;
            for (std::size_t i = 0; i < n; ++i) {
                // ascend c * margin - ||delta||^2
                double const gi = params.cw_c * g[i] - 2.0 * (x[i] - x0[i]);
                m[i] = params.adam_beta1 * m[i] + (1.0 - params.adam_beta1) * gi;
                v[i] = params.adam_beta2 * v[i] + (1.0 - params.adam_beta2) * gi * gi;
                double const mh = m[i] / (1.0 - b1);
                double const vh = v[i] / (1.0 - b2);
                x[i] += params.adam_lr * mh / (std::sqrt(vh) + 1e-8);
            }
            project(x, x0, spec.epsilon, Norm::l2);
        }
        if (spec.steps > 0) {
            auto const e = objective.eval(x, {});
            consider(x, e);
        }
        return best_adv.empty() ? best_margin_x : best_adv;
    }

} // namespace detail

auto ddn_attack(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model, std::optional<int> target,
    AttackParams const& params) -> AttackResult
{
    if (spec.norm != Norm::l2) {
        throw CatalogError("DDN runs under l2 only");
    }
    auto const objective = detail::make_objective(model, y, target, LossKind::cross_entropy());
    auto const x0 = x.to_doubles();
    auto const n = x0.size();
    std::vector<double> cur = x0;
    std::vector<double> g(n);
    std::vector<double> best_adv;
    double best_norm = std::numeric_limits<double>::infinity();
    double radius = spec.epsilon / 2.0;
    double const t = spec.steps;

    auto delta_norm = [&](std::span<const double> p) {
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sq += (p[i] - x0[i]) * (p[i] - x0[i]);
        }
        return std::sqrt(sq);
    };

    for (std::uint32_t k = 0; k < spec.steps; ++k) {
        auto const e = objective.eval(cur, g);
        bool const adv = objective.fooled(e.predicted);
        double const norm = delta_norm(cur);
        if (adv && norm < best_norm) {
            best_norm = norm;
            best_adv = cur;
        }
        double const lr = params.ddn_lr * (1.0 + std::cos(std::numbers::pi * k / t)) / 2.0;
        double const gl = l2_norm(g);
        std::vector<double> delta(n);
        for (std::size_t i = 0; i < n; ++i) {
            delta[i] = cur[i] - x0[i] + (gl > 0.0 ? lr * g[i] / gl : 0.0);
        }
        radius *= adv ? 1.0 - params.ddn_gamma : 1.0 + params.ddn_gamma;
        radius = std::min(radius, spec.epsilon);
        double const dl = l2_norm(delta);
        for (std::size_t i = 0; i < n; ++i) {
            cur[i] = x0[i] + (dl > 0.0 ? delta[i] * radius / dl : 0.0);
        }
        clip_unit(cur);
    }
    if (spec.steps > 0) {
        auto const e = objective.eval(cur, {});
        double const norm = delta_norm(cur);
        if (objective.fooled(e.predicted) && norm < best_norm) {
            best_adv = cur;
        }
    }
    std::vector<double> out = best_adv.empty() ? cur : best_adv;
    detail::project(out, x0, spec.epsilon, Norm::l2);
    return { Tensor::from_doubles(x.shape, out), attack_cost(AttackKind::ddn, spec.steps, model.num_classes()) };
}

namespace {

    // Nested rectangles weighted 1/(k+1)^2 around the centre, unit l2 norm.
    auto pseudo_gaussian(std::size_t rows, std::size_t cols) -> std::vector<double>
    {
        std::vector<double> d(rows * cols, 0.0);
        if (rows == 0 || cols == 0) {
            return d;
        }
        auto const rc = static_cast<std::ptrdiff_t>(rows / 2 + 1);
        auto const cc = static_cast<std::ptrdiff_t>(cols / 2 + 1);
        std::ptrdiff_t r0 = rc - 1;
        std::ptrdiff_t c0 = cc - 1;
        for (std::ptrdiff_t k = 0; k < std::max(rc, cc); ++k, --r0, --c0) {
            auto const r_hi = std::min<std::ptrdiff_t>(r0 + 2 * k + 1, static_cast<std::ptrdiff_t>(rows));
            auto const c_hi = std::min<std::ptrdiff_t>(c0 + 2 * k + 1, static_cast<std::ptrdiff_t>(cols));
            for (auto r = std::max<std::ptrdiff_t>(r0, 0); r < r_hi; ++r) {
                for (auto q = std::max<std::ptrdiff_t>(c0, 0); q < c_hi; ++q) {
                    d[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(q)] += 1.0 / static_cast<double>((k + 1) * (k + 1));
                }
            }
        }
        double norm = 0.0;
        for (double v : d) {
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : d) {
            v /= norm;
        }
        return d;
    }

    // s x s square: upper half a bump, lower half the negated bump, randomly
    // transposed. Unit l2 norm.
    auto square_pattern(std::size_t s, Rng& rng) -> std::vector<double>
    {
        std::vector<double> d(s * s, 0.0);
        auto const top = pseudo_gaussian(s / 2, s);
        auto const bottom = pseudo_gaussian(s - s / 2, s);
        for (std::size_t i = 0; i < top.size(); ++i) {
            d[i] = top[i];
        }
        for (std::size_t i = 0; i < bottom.size(); ++i) {
            d[top.size() + i] = -bottom[i];
        }
        double norm = 0.0;
        for (double v : d) {
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : d) {
            v /= norm;
        }
        if (rng.uniform() > 0.5) {
            std::vector<double> t(s * s);
            for (std::size_t r = 0; r < s; ++r) {
                for (std::size_t q = 0; q < s; ++q) {
                    t[q * s + r] = d[r * s + q];
                }
            }
            d.swap(t);
        }
        return d;
    }

} // namespace

auto square_attack(AttackSpec const& spec, Tensor const& x, int y, Classifier const& model, std::optional<int> target,
    AttackParams const& params) -> AttackResult
{
    if (spec.norm != Norm::l2) {
        throw CatalogError("Square attack runs under l2 only");
    }
    auto const dims = model.input_dims();
    if (dims.height < 2 || dims.width < 2) {
        throw GeometryError("square attack needs an image of at least 2x2");
    }
    Cost const cost = attack_cost(AttackKind::square, spec.steps, model.num_classes());
    if (spec.epsilon == 0.0 || spec.steps == 0) {
        return { x, cost };
    }
    auto const objective = detail::make_objective(model, y, target, LossKind::cw_margin(std::numeric_limits<double>::infinity()));
    auto const x0 = x.to_doubles();
    auto const n = x0.size();
    std::size_t const h = dims.height;
    std::size_t const w = dims.width;
    std::size_t const c = dims.channels;
    auto const at = [&](std::size_t r, std::size_t q, std::size_t ch) { return (r * w + q) * c + ch; };
    Rng rng(spec.seed);

    std::vector<double> best = x0;
    double best_loss = objective.value(x0);

    // The first query is a tiling of bumps with random signs at full radius.
    {
        std::size_t const s = std::max<std::size_t>(std::min(h, w) / 5, 1);
        std::size_t const off_r = (h - s * (h / s)) / 2;
        std::size_t const off_c = (w - s * (w / s)) / 2;
        std::vector<double> init(n, 0.0);
        for (std::size_t br = 0; br < h / s; ++br) {
            for (std::size_t bc = 0; bc < w / s; ++bc) {
                auto const pattern = square_pattern(s, rng);
                for (std::size_t ch = 0; ch < c; ++ch) {
                    double const sign = rng.rademacher();
                    for (std::size_t r = 0; r < s; ++r) {
                        for (std::size_t q = 0; q < s; ++q) {
                            init[at(off_r + br * s + r, off_c + bc * s + q, ch)] += sign * pattern[r * s + q];
                        }
                    }
                }
            }
        }
        double norm = 0.0;
        for (double v : init) {
            norm += v * v;
        }
        norm = std::sqrt(norm);
        std::vector<double> cand(n);
        for (std::size_t i = 0; i < n; ++i) {
            cand[i] = std::clamp(x0[i] + (norm > 0.0 ? spec.epsilon * init[i] / norm : 0.0), 0.0, 1.0);
        }
        double const loss = objective.value(cand);
        if (loss > best_loss) {
            best_loss = loss;
            best = cand;
        }
    }

    std::vector<double> delta(n);
    std::vector<double> cand(n);
    double const eps2 = spec.epsilon * spec.epsilon;
    double const t = spec.steps;
    for (std::uint32_t k = 1; k < spec.steps; ++k) {
        double p = params.square_p;
        for (double frac : { 0.1, 0.25, 0.5 }) {
            if (k >= frac * t) {
                p /= 2.0;
            }
        }
        auto side = static_cast<std::size_t>(std::lround(std::sqrt(p * static_cast<double>(h * w))));
        side = std::clamp<std::size_t>(std::max<std::size_t>(side, 3), 1, std::min(h, w));
        std::size_t const r1 = rng.uniform_int(h - side + 1);
        std::size_t const c1 = rng.uniform_int(w - side + 1);
        std::size_t const r2 = rng.uniform_int(h - side + 1);
        std::size_t const c2 = rng.uniform_int(w - side + 1);
        auto const in1 = [&](std::size_t r, std::size_t q) { return r >= r1 && r < r1 + side && q >= c1 && q < c1 + side; };
        auto const in2 = [&](std::size_t r, std::size_t q) { return r >= r2 && r < r2 + side && q >= c2 && q < c2 + side; };

        for (std::size_t i = 0; i < n; ++i) {
            delta[i] = best[i] - x0[i];
        }
        double total = 0.0;
        for (double d : delta) {
            total += d * d;
        }
        cand = best;
        for (std::size_t ch = 0; ch < c; ++ch) {
            // mass of both windows is moved into window 1, window 2 is emptied
            double window1 = 0.0;
            double windows = 0.0;
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t q = 0; q < w; ++q) {
                    double const d2 = delta[at(r, q, ch)] * delta[at(r, q, ch)];
                    window1 += in1(r, q) ? d2 : 0.0;
                    windows += in1(r, q) || in2(r, q) ? d2 : 0.0;
                }
            }
            window1 = std::sqrt(window1);
            auto bump = square_pattern(side, rng);
            double const sign = rng.rademacher();
            double norm = 0.0;
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t q = 0; q < side; ++q) {
                    double& v = bump[r * side + q];
                    v = sign * v + delta[at(r1 + r, c1 + q, ch)] / (window1 + 1e-10);
                    norm += v * v;
                }
            }
            norm = std::sqrt(norm);
            double const target_norm = std::sqrt(std::max(eps2 - total, 0.0) / static_cast<double>(c) + windows);
            for (std::size_t r = 0; r < h; ++r) {
                for (std::size_t q = 0; q < w; ++q) {
                    if (in2(r, q) && !in1(r, q)) {
                        cand[at(r, q, ch)] = x0[at(r, q, ch)];
                    }
                }
            }
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t q = 0; q < side; ++q) {
                    double const d = norm > 0.0 ? bump[r * side + q] / norm * target_norm : 0.0;
                    cand[at(r1 + r, c1 + q, ch)] = x0[at(r1 + r, c1 + q, ch)] + d;
                }
            }
        }
        detail::project(cand, x0, spec.epsilon, Norm::l2);
        double const loss = objective.value(cand);
        if (loss > best_loss) {
            best_loss = loss;
            best = cand;
        }
    }
    return { Tensor::from_doubles(x.shape, best), cost };
}

} // namespace caa
