#pragma once

#include "caa/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace caa {

enum class ArchKind : std::uint8_t { linear = 0, mlp = 1, convnet = 2 };

// Layer-size list: hidden widths for mlp, conv channel counts for convnet,
// empty for linear.
struct Architecture {
    ArchKind kind = ArchKind::linear;
    std::vector<std::uint32_t> sizes;

    static auto linear() -> Architecture { return { ArchKind::linear, {} }; }
    static auto mlp(std::vector<std::uint32_t> hidden) -> Architecture { return { ArchKind::mlp, std::move(hidden) }; }
    static auto convnet(std::vector<std::uint32_t> channels) -> Architecture { return { ArchKind::convnet, std::move(channels) }; }

    [[nodiscard]] auto to_string() const -> std::string;
    static auto parse(std::string const& kind, std::vector<std::uint32_t> sizes) -> Architecture;

    friend auto operator==(Architecture const&, Architecture const&) -> bool = default;
};

struct InputDims {
    std::uint32_t height = 1;
    std::uint32_t width = 1;
    std::uint32_t channels = 1;

    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return static_cast<std::size_t>(height) * width * channels;
    }
    [[nodiscard]] auto shape() const -> std::vector<std::size_t> { return { height, width, channels }; }

    friend auto operator==(InputDims const&, InputDims const&) -> bool = default;
};

struct LossKind {
    enum class Variant : std::uint8_t { cross_entropy, cw_margin, per_target_margin };

    Variant variant = Variant::cross_entropy;
    double kappa = 0.0;  // cw_margin only; may be +infinity
    int target = -1;     // per_target_margin only
    // When set, the label passed alongside the loss is the target class and
    // the value is negated, so maximizing it moves toward the target.
    bool targeted = false;

    static auto cross_entropy(bool targeted = false) -> LossKind { return { Variant::cross_entropy, 0.0, -1, targeted }; }
    static auto cw_margin(double kappa, bool targeted = false) -> LossKind { return { Variant::cw_margin, kappa, -1, targeted }; }
    static auto per_target_margin(int target, bool targeted = false) -> LossKind
    {
        return { Variant::per_target_margin, 0.0, target, targeted };
    }
};

// max(max_{i != y} z_i - z_y, -kappa). Ties for the runner-up resolve to the
// smallest index.
[[nodiscard]] auto cw_margin_loss(std::span<const double> logits, int y, double kappa) -> double;
// z_target - z_y
[[nodiscard]] auto per_target_margin_loss(std::span<const double> logits, int y, int target) -> double;
[[nodiscard]] auto cross_entropy_loss(std::span<const double> logits, int y) -> double;

// Loss value and d(loss)/d(logits) for any LossKind, including the targeted
// negation.
auto loss_on_logits(std::span<const double> logits, int y, LossKind const& loss, std::span<double> dlogits) -> double;

[[nodiscard]] auto argmax(std::span<const double> v) noexcept -> int;

struct LossGrad {
    double value = 0.0;
    Tensor grad;
};

// Linear / MLP / small convnet classifier with exact reverse-mode gradients.
// Weights are stored as f32 (the on-disk precision); all arithmetic runs in
// double. Instances are immutable apart from set_params, so const calls may
// run concurrently.
class Classifier {
public:
    Classifier(Architecture arch, InputDims dims, std::uint32_t num_classes, std::vector<float> params, float training_eps = 0.0F);

    // Uniform fan-in initialization: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b = 0.
    static auto initialize(Architecture const& arch, InputDims dims, std::uint32_t num_classes, std::uint64_t seed) -> Classifier;
    static auto parameter_count(Architecture const& arch, InputDims dims, std::uint32_t num_classes) -> std::size_t;

    [[nodiscard]] auto architecture() const noexcept -> Architecture const& { return arch_; }
    [[nodiscard]] auto input_dims() const noexcept -> InputDims { return dims_; }
    [[nodiscard]] auto input_size() const noexcept -> std::size_t { return dims_.size(); }
    [[nodiscard]] auto num_classes() const noexcept -> std::uint32_t { return num_classes_; }
    [[nodiscard]] auto params() const noexcept -> std::vector<float> const& { return params_; }
    [[nodiscard]] auto training_eps() const noexcept -> float { return training_eps_; }
    void set_params(std::vector<float> params);
    void set_training_eps(float eps) noexcept { training_eps_ = eps; }

    // Validated tensor API.
    [[nodiscard]] auto forward(Tensor const& x) const -> Tensor;
    [[nodiscard]] auto loss_and_input_grad(Tensor const& x, int y, LossKind const& loss) const -> LossGrad;

    // Unvalidated double-precision API used by attacks and training.
    struct Evaluation {
        double value = 0.0;
        int predicted = 0;
    };
    [[nodiscard]] auto logits(std::span<const double> x) const -> std::vector<double>;
    [[nodiscard]] auto predict(std::span<const double> x) const -> int;
    [[nodiscard]] auto loss(std::span<const double> x, int y, LossKind const& loss) const -> double;
    // input_grad may be empty, in which case only the forward pass runs.
    auto evaluate(std::span<const double> x, int y, LossKind const& loss, std::span<double> input_grad) const -> Evaluation;
    // Accumulates d(loss)/d(params) into param_grad.
    auto accumulate_param_grad(std::span<const double> x, int y, LossKind const& loss, std::span<double> param_grad) const -> double;

    // Smallest |pre-activation| over all ReLU inputs; +inf without ReLUs.
    [[nodiscard]] auto activation_margin(std::span<const double> x) const -> double;
    // On/off state of every ReLU unit.
    [[nodiscard]] auto activation_pattern(std::span<const double> x) const -> std::vector<bool>;

    friend auto operator==(Classifier const& a, Classifier const& b) -> bool
    {
        return a.arch_ == b.arch_ && a.dims_ == b.dims_ && a.num_classes_ == b.num_classes_ && a.params_ == b.params_
            && a.training_eps_ == b.training_eps_;
    }

private:
    struct Layer {
        enum class Kind : std::uint8_t { dense, conv, relu };
        Kind kind;
        std::size_t in_size;
        std::size_t out_size;
        std::size_t weight_offset = 0;
        std::size_t bias_offset = 0;
        // conv geometry
        std::size_t height = 0;
        std::size_t width = 0;
        std::size_t in_channels = 0;
        std::size_t out_channels = 0;
    };

    void check_input(Tensor const& x) const;
    // activations[0] is the input; activations[i+1] is the output of layer i.
    void run_forward(std::span<const double> x, std::vector<std::vector<double>>& activations) const;
    void run_backward(std::vector<std::vector<double>> const& activations, std::vector<double> dout,
        std::span<double> input_grad, std::span<double> param_grad) const;

    static auto build_layers(Architecture const& arch, InputDims dims, std::uint32_t num_classes) -> std::vector<Layer>;

    Architecture arch_;
    InputDims dims_;
    std::uint32_t num_classes_;
    std::vector<float> params_;
    std::vector<double> weights_;
    float training_eps_;
    std::vector<Layer> layers_;
};

} // namespace caa
