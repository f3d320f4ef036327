#include "caa/model.hpp"

#include "caa/error.hpp"
#include "caa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace caa {

namespace {

    auto layer_kind_name(std::uint8_t kind) -> std::string
    {
        switch (kind) {
        case 0:
            return "dense";
        case 1:
            return "conv";
        default:
            return "relu";
        }
    }

    void check_finite(std::span<const double> v, std::size_t layer, std::uint8_t kind)
    {
        for (double x : v) {
            if (!std::isfinite(x)) {
                throw NumericError(layer, layer_kind_name(kind));
            }
        }
    }

} // namespace

auto Architecture::to_string() const -> std::string
{
    std::string s;
    switch (kind) {
    case ArchKind::linear:
        return "linear";
    case ArchKind::mlp:
        s = "mlp(";
        break;
    case ArchKind::convnet:
        s = "convnet(";
        break;
    }
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        s += (i != 0 ? "," : "") + std::to_string(sizes[i]);
    }
    return s + ")";
}

auto Architecture::parse(std::string const& kind, std::vector<std::uint32_t> sizes) -> Architecture
{
    if (kind == "linear") {
        return linear();
    }
    if (sizes.empty() || std::find(sizes.begin(), sizes.end(), 0U) != sizes.end()) {
        throw ValidationError("architecture '" + kind + "' needs a non-empty list of positive layer sizes");
    }
    if (kind == "mlp") {
        return mlp(std::move(sizes));
    }
    if (kind == "convnet") {
        return convnet(std::move(sizes));
    }
    throw ValidationError("unknown architecture '" + kind + "'");
}

auto cw_margin_loss(std::span<const double> logits, int y, double kappa) -> double
{
    if (logits.size() < 2) {
        throw InvalidProblem("cw margin needs at least two classes");
    }
    if (kappa < 0.0) {
        throw ValidationError("kappa must be non-negative");
    }
    double runner = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (static_cast<int>(i) != y && logits[i] > runner) {
            runner = logits[i];
        }
    }
    return std::max(runner - logits[static_cast<std::size_t>(y)], -kappa);
}

auto per_target_margin_loss(std::span<const double> logits, int y, int target) -> double
{
    if (target == y) {
        throw InvalidTarget("target class equals the true label");
    }
    return logits[static_cast<std::size_t>(target)] - logits[static_cast<std::size_t>(y)];
}

auto cross_entropy_loss(std::span<const double> logits, int y) -> double
{
    double const m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double z : logits) {
        s += std::exp(z - m);
    }
    return m + std::log(s) - logits[static_cast<std::size_t>(y)];
}

auto argmax(std::span<const double> v) noexcept -> int
{
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

auto loss_on_logits(std::span<const double> z, int y, LossKind const& loss, std::span<double> dz) -> double
{
    auto const k = z.size();
    auto const uy = static_cast<std::size_t>(y);
    std::fill(dz.begin(), dz.end(), 0.0);
    double value = 0.0;
    switch (loss.variant) {
    case LossKind::Variant::cross_entropy: {
        double const m = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            dz[i] = std::exp(z[i] - m);
            s += dz[i];
        }
        value = m + std::log(s) - z[uy];
        for (std::size_t i = 0; i < k; ++i) {
            dz[i] /= s;
        }
        dz[uy] -= 1.0;
        break;
    }
    case LossKind::Variant::cw_margin: {
        if (k < 2) {
            throw InvalidProblem("cw margin needs at least two classes");
        }
        std::size_t runner = uy == 0 ? 1 : 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (i != uy && z[i] > z[runner]) {
                runner = i;
            }
        }
        double const margin = z[runner] - z[uy];
        if (margin > -loss.kappa) {
            value = margin;
            dz[runner] = 1.0;
            dz[uy] = -1.0;
        } else {
            value = -loss.kappa;
        }
        break;
    }
    case LossKind::Variant::per_target_margin: {
        if (loss.target == y) {
            throw InvalidTarget("target class equals the true label");
        }
        if (loss.target < 0 || static_cast<std::size_t>(loss.target) >= k) {
            throw InvalidTarget("target class out of range");
        }
        auto const t = static_cast<std::size_t>(loss.target);
        value = z[t] - z[uy];
        dz[t] = 1.0;
        dz[uy] = -1.0;
        break;
    }
    }
    if (loss.targeted) {
        value = -value;
        for (double& d : dz) {
            d = -d;
        }
    }
    return value;
}

Classifier::Classifier(Architecture arch, InputDims dims, std::uint32_t num_classes, std::vector<float> params, float training_eps)
    : arch_(std::move(arch))
    , dims_(dims)
    , num_classes_(num_classes)
    , training_eps_(training_eps)
{
    if (num_classes_ < 1) {
        throw ValidationError("num_classes must be positive");
    }
    if (dims_.size() == 0) {
        throw ValidationError("input dims must be positive");
    }
    layers_ = build_layers(arch_, dims_, num_classes_);
    set_params(std::move(params));
}

void Classifier::set_params(std::vector<float> params)
{
    if (params.size() != parameter_count(arch_, dims_, num_classes_)) {
        throw ValidationError("parameter count " + std::to_string(params.size()) + " does not match architecture "
            + arch_.to_string() + " (expected " + std::to_string(parameter_count(arch_, dims_, num_classes_)) + ")");
    }
    params_ = std::move(params);
    weights_.assign(params_.begin(), params_.end());
}

auto Classifier::build_layers(Architecture const& arch, InputDims dims, std::uint32_t num_classes) -> std::vector<Layer>
{
    std::vector<Layer> layers;
    std::size_t offset = 0;
    auto dense = [&](std::size_t in, std::size_t out) {
        Layer l { Layer::Kind::dense, in, out };
        l.weight_offset = offset;
        offset += in * out;
        l.bias_offset = offset;
        offset += out;
        layers.push_back(l);
    };
    auto relu = [&](std::size_t n) { layers.push_back(Layer { Layer::Kind::relu, n, n }); };

    std::size_t width = dims.size();
    switch (arch.kind) {
    case ArchKind::linear:
        break;
    case ArchKind::mlp:
        for (auto h : arch.sizes) {
            dense(width, h);
            relu(h);
            width = h;
        }
        break;
    case ArchKind::convnet: {
        std::size_t channels = dims.channels;
        std::size_t const hw = static_cast<std::size_t>(dims.height) * dims.width;
        for (auto c : arch.sizes) {
            Layer l { Layer::Kind::conv, hw * channels, hw * c };
            l.height = dims.height;
            l.width = dims.width;
            l.in_channels = channels;
            l.out_channels = c;
            l.weight_offset = offset;
            offset += c * channels * 9;
            l.bias_offset = offset;
            offset += c;
            layers.push_back(l);
            relu(hw * c);
            channels = c;
        }
        width = hw * channels;
        break;
    }
    }
    dense(width, num_classes);
    return layers;
}

auto Classifier::parameter_count(Architecture const& arch, InputDims dims, std::uint32_t num_classes) -> std::size_t
{
    auto layers = build_layers(arch, dims, num_classes);
    std::size_t n = 0;
    for (auto const& l : layers) {
        if (l.kind == Layer::Kind::dense) {
            n += l.in_size * l.out_size + l.out_size;
        } else if (l.kind == Layer::Kind::conv) {
            n += l.out_channels * l.in_channels * 9 + l.out_channels;
        }
    }
    return n;
}

auto Classifier::initialize(Architecture const& arch, InputDims dims, std::uint32_t num_classes, std::uint64_t seed) -> Classifier
{
    auto layers = build_layers(arch, dims, num_classes);
    std::vector<float> params(parameter_count(arch, dims, num_classes), 0.0F);
    Rng rng(seed);
    for (auto const& l : layers) {
        std::size_t fan_in = 0;
        std::size_t count = 0;
        if (l.kind == Layer::Kind::dense) {
            fan_in = l.in_size;
            count = l.in_size * l.out_size;
        } else if (l.kind == Layer::Kind::conv) {
            fan_in = l.in_channels * 9;
            count = l.out_channels * l.in_channels * 9;
        } else {
            continue;
        }
        double const bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i) {
            params[l.weight_offset + i] = static_cast<float>(rng.uniform(-bound, bound));
        }
    }
    return { arch, dims, num_classes, std::move(params) };
}

void Classifier::check_input(Tensor const& x) const
{
    if (x.size() != dims_.size()) {
        throw RejectedInput("input has " + std::to_string(x.size()) + " values, model expects " + std::to_string(dims_.size()));
    }
    if (!x.shape.empty() && shape_product(x.shape) != dims_.size()) {
        throw RejectedInput("input shape does not match model input dims");
    }
}

void Classifier::run_forward(std::span<const double> x, std::vector<std::vector<double>>& act) const
{
    act.resize(layers_.size() + 1);
    act[0].assign(x.begin(), x.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        auto const& l = layers_[li];
        auto const& in = act[li];
        auto& out = act[li + 1];
        out.assign(l.out_size, 0.0);
        switch (l.kind) {
        case Layer::Kind::dense: {
            double const* w = weights_.data() + l.weight_offset;
            double const* b = weights_.data() + l.bias_offset;
            for (std::size_t o = 0; o < l.out_size; ++o) {
                double s = b[o];
                double const* row = w + o * l.in_size;
                for (std::size_t i = 0; i < l.in_size; ++i) {
                    s += row[i] * in[i];
                }
                out[o] = s;
            }
            break;
        }
        case Layer::Kind::conv: {
            double const* w = weights_.data() + l.weight_offset;
            double const* b = weights_.data() + l.bias_offset;
            auto const H = l.height;
            auto const W = l.width;
            auto const ci_n = l.in_channels;
            auto const co_n = l.out_channels;
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t x0 = 0; x0 < W; ++x0) {
                    for (std::size_t co = 0; co < co_n; ++co) {
                        double s = b[co];
                        for (std::size_t kh = 0; kh < 3; ++kh) {
                            auto const hh = static_cast<std::ptrdiff_t>(h + kh) - 1;
                            if (hh < 0 || hh >= static_cast<std::ptrdiff_t>(H)) {
                                continue;
                            }
                            for (std::size_t kw = 0; kw < 3; ++kw) {
                                auto const ww = static_cast<std::ptrdiff_t>(x0 + kw) - 1;
                                if (ww < 0 || ww >= static_cast<std::ptrdiff_t>(W)) {
                                    continue;
                                }
                                auto const base = (static_cast<std::size_t>(hh) * W + static_cast<std::size_t>(ww)) * ci_n;
                                for (std::size_t ci = 0; ci < ci_n; ++ci) {
                                    s += w[((co * ci_n + ci) * 3 + kh) * 3 + kw] * in[base + ci];
                                }
                            }
                        }
                        out[(h * W + x0) * co_n + co] = s;
                    }
                }
            }
            break;
        }
        case Layer::Kind::relu:
            for (std::size_t i = 0; i < l.out_size; ++i) {
                out[i] = in[i] > 0.0 ? in[i] : 0.0;
            }
            break;
        }
        check_finite(out, li, static_cast<std::uint8_t>(l.kind));
    }
}

void Classifier::run_backward(std::vector<std::vector<double>> const& act, std::vector<double> dout,
    std::span<double> input_grad, std::span<double> param_grad) const
{
    bool const want_params = !param_grad.empty();
    std::vector<double> din;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        auto const& l = layers_[li];
        auto const& in = act[li];
        bool const need_din = li > 0 || !input_grad.empty();
        din.assign(need_din ? l.in_size : 0, 0.0);
        switch (l.kind) {
        case Layer::Kind::dense: {
            double const* w = weights_.data() + l.weight_offset;
            for (std::size_t o = 0; o < l.out_size; ++o) {
                double const g = dout[o];
                if (g == 0.0) {
                    continue;
                }
                double const* row = w + o * l.in_size;
                if (need_din) {
                    for (std::size_t i = 0; i < l.in_size; ++i) {
                        din[i] += row[i] * g;
                    }
                }
                if (want_params) {
                    double* gw = param_grad.data() + l.weight_offset + o * l.in_size;
                    for (std::size_t i = 0; i < l.in_size; ++i) {
                        gw[i] += g * in[i];
                    }
                    param_grad[l.bias_offset + o] += g;
                }
            }
            break;
        }
        case Layer::Kind::conv: {
            double const* w = weights_.data() + l.weight_offset;
            auto const H = l.height;
            auto const W = l.width;
            auto const ci_n = l.in_channels;
            auto const co_n = l.out_channels;
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t x0 = 0; x0 < W; ++x0) {
                    for (std::size_t co = 0; co < co_n; ++co) {
                        double const g = dout[(h * W + x0) * co_n + co];
                        if (g == 0.0) {
                            continue;
                        }
                        if (want_params) {
                            param_grad[l.bias_offset + co] += g;
                        }
                        for (std::size_t kh = 0; kh < 3; ++kh) {
                            auto const hh = static_cast<std::ptrdiff_t>(h + kh) - 1;
                            if (hh < 0 || hh >= static_cast<std::ptrdiff_t>(H)) {
                                continue;
                            }
                            for (std::size_t kw = 0; kw < 3; ++kw) {
                                auto const ww = static_cast<std::ptrdiff_t>(x0 + kw) - 1;
                                if (ww < 0 || ww >= static_cast<std::ptrdiff_t>(W)) {
                                    continue;
                                }
                                auto const base = (static_cast<std::size_t>(hh) * W + static_cast<std::size_t>(ww)) * ci_n;
                                for (std::size_t ci = 0; ci < ci_n; ++ci) {
                                    auto const wi = ((co * ci_n + ci) * 3 + kh) * 3 + kw;
                                    if (need_din) {
                                        din[base + ci] += w[wi] * g;
                                    }
                                    if (want_params) {
                                        param_grad[l.weight_offset + wi] += g * in[base + ci];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            break;
        }
        case Layer::Kind::relu:
            if (need_din) {
                for (std::size_t i = 0; i < l.in_size; ++i) {
                    din[i] = in[i] > 0.0 ? dout[i] : 0.0;
                }
            }
            break;
        }
        if (li == 0) {
            if (!input_grad.empty()) {
                std::copy(din.begin(), din.end(), input_grad.begin());
            }
        } else {
            std::swap(dout, din);
        }
    }
}

auto Classifier::forward(Tensor const& x) const -> Tensor
{
    check_input(x);
    auto z = logits(x.to_doubles());
    return Tensor::from_doubles({ z.size() }, z);
}

auto Classifier::loss_and_input_grad(Tensor const& x, int y, LossKind const& loss) const -> LossGrad
{
    check_input(x);
    if (y < 0 || static_cast<std::uint32_t>(y) >= num_classes_) {
        throw RejectedInput("label " + std::to_string(y) + " out of range");
    }
    auto xd = x.to_doubles();
    std::vector<double> g(xd.size());
    auto const e = evaluate(xd, y, loss, g);
    auto shape = x.shape.empty() ? dims_.shape() : x.shape;
    return { e.value, Tensor::from_doubles(std::move(shape), g) };
}

auto Classifier::logits(std::span<const double> x) const -> std::vector<double>
{
    std::vector<std::vector<double>> act;
    run_forward(x, act);
    return std::move(act.back());
}

auto Classifier::predict(std::span<const double> x) const -> int
{
    return argmax(logits(x));
}

auto Classifier::loss(std::span<const double> x, int y, LossKind const& kind) const -> double
{
    return evaluate(x, y, kind, {}).value;
}

auto Classifier::evaluate(std::span<const double> x, int y, LossKind const& kind, std::span<double> input_grad) const -> Evaluation
{
    std::vector<std::vector<double>> act;
    run_forward(x, act);
    auto const& z = act.back();
    std::vector<double> dz(z.size());
    Evaluation e;
    e.value = loss_on_logits(z, y, kind, dz);
    e.predicted = argmax(z);
    if (!input_grad.empty()) {
        run_backward(act, std::move(dz), input_grad, {});
    }
    return e;
}

auto Classifier::accumulate_param_grad(std::span<const double> x, int y, LossKind const& kind, std::span<double> param_grad) const -> double
{
    std::vector<std::vector<double>> act;
    run_forward(x, act);
    std::vector<double> dz(act.back().size());
    double const v = loss_on_logits(act.back(), y, kind, dz);
    run_backward(act, std::move(dz), {}, param_grad);
    return v;
}

auto Classifier::activation_margin(std::span<const double> x) const -> double
{
    std::vector<std::vector<double>> act;
    run_forward(x, act);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        if (layers_[li].kind == Layer::Kind::relu) {
            for (double v : act[li]) {
                m = std::min(m, std::abs(v));
            }
        }
    }
    return m;
}

auto Classifier::activation_pattern(std::span<const double> x) const -> std::vector<bool>
{
    std::vector<std::vector<double>> act;
    run_forward(x, act);
    std::vector<bool> pattern;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        if (layers_[li].kind == Layer::Kind::relu) {
            for (double v : act[li]) {
                pattern.push_back(v > 0.0);
            }
        }
    }
    return pattern;
}

} // namespace caa
