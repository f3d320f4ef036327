#include "caa/gradcheck.hpp"

#include "caa/error.hpp"

#include <algorithm>
#include <cmath>

namespace caa {

auto finite_difference_grad(Classifier const& model, Tensor const& x, int y, LossKind const& loss, double h) -> Tensor
{
    if (!(h > 0.0)) {
        throw ValidationError("finite-difference step must be positive");
    }
    auto xd = x.to_doubles();
    std::vector<double> g(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) {
        double const orig = xd[i];
        xd[i] = orig + h;
        double const up = model.loss(xd, y, loss);
        xd[i] = orig - h;
        double const down = model.loss(xd, y, loss);
        xd[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return Tensor::from_doubles(x.shape, g);
}

namespace {

    template <typename T>
    auto rel_error(std::span<const T> a, std::span<const T> b) -> double
    {
        double diff = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            diff = std::max(diff, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
            scale = std::max({ scale, std::abs(static_cast<double>(a[i])), std::abs(static_cast<double>(b[i])) });
        }
        return scale == 0.0 ? 0.0 : diff / scale;
    }

    // Which piece of the piecewise loss is active.
    auto loss_branch(std::span<const double> z, int y, LossKind const& loss) -> int
    {
        if (loss.variant != LossKind::Variant::cw_margin) {
            return 0;
        }
        auto const uy = static_cast<std::size_t>(y);
        std::size_t runner = uy == 0 ? 1 : 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (i != uy && z[i] > z[runner]) {
                runner = i;
            }
        }
        bool const clamped = z[runner] - z[uy] <= -loss.kappa;
        return clamped ? -1 : static_cast<int>(runner);
    }

} // namespace

auto max_relative_error(std::span<const float> a, std::span<const float> b) -> double
{
    return rel_error(a, b);
}

auto max_relative_error(std::span<const double> a, std::span<const double> b) -> double
{
    return rel_error(a, b);
}

auto stencil_is_smooth(Classifier const& model, Tensor const& x, int y, LossKind const& loss, double h) -> bool
{
    auto xd = x.to_doubles();
    auto const pattern = model.activation_pattern(xd);
    int const branch = loss_branch(model.logits(xd), y, loss);
    for (std::size_t i = 0; i < xd.size(); ++i) {
        double const orig = xd[i];
        for (double d : { h, -h }) {
            xd[i] = orig + d;
            if (model.activation_pattern(xd) != pattern || loss_branch(model.logits(xd), y, loss) != branch) {
                return false;
            }
        }
        xd[i] = orig;
    }
    return true;
}

} // namespace caa
