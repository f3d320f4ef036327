#include "caa/training.hpp"

#include "caa/error.hpp"
#include "caa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace caa {

namespace {

    void craft_pgd(Classifier const& model, std::vector<double>& x, int y, double eps, std::size_t steps, Rng& rng)
    {
        std::vector<double> const x0 = x;
        for (auto& v : x) {
            v += eps * rng.uniform(-1.0, 1.0);
        }
        clip_unit(x);
        double const step = 2.5 * eps / static_cast<double>(std::max<std::size_t>(steps, 1));
        std::vector<double> g(x.size());
        auto const ce = LossKind::cross_entropy();
        for (std::size_t k = 0; k < steps; ++k) {
            model.evaluate(x, y, ce, g);
            for (std::size_t i = 0; i < x.size(); ++i) {
                double const v = x[i] + step * sign(g[i]);
                x[i] = std::clamp(std::clamp(v, x0[i] - eps, x0[i] + eps), 0.0, 1.0);
            }
        }
    }

    auto train(TrainConfig const& config, Dataset const& data, bool adversarial) -> Classifier
    {
        if (data.empty()) {
            throw ValidationError("training dataset is empty");
        }
        if (config.eps < 0.0 || config.eps > 1.0) {
            throw ValidationError("training eps must lie in [0, 1]");
        }
        auto model = Classifier::initialize(config.arch, data.dims(), data.num_classes(), derive_seed(config.seed, 1));
        Rng order_rng(derive_seed(config.seed, 2));
        Rng attack_rng(derive_seed(config.seed, 3));
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t { 0 });
        std::vector<double> grad(model.params().size());
        std::vector<double> weights(model.params().begin(), model.params().end());
        auto const ce = LossKind::cross_entropy();
        std::size_t const batch = std::max<std::size_t>(config.batch_size, 1);

        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.uniform_int(i))]);
            }
            for (std::size_t start = 0; start < order.size(); start += batch) {
                std::size_t const end = std::min(order.size(), start + batch);
                std::fill(grad.begin(), grad.end(), 0.0);
                double batch_loss = 0.0;
                try {
                    for (std::size_t j = start; j < end; ++j) {
                        auto const idx = order[j];
                        auto x = data.image(idx).to_doubles();
                        if (adversarial) {
                            craft_pgd(model, x, data.label(idx), config.eps, config.pgd_steps, attack_rng);
                        }
                        batch_loss += model.accumulate_param_grad(x, data.label(idx), ce, grad);
                    }
                } catch (NumericError const& e) {
                    throw TrainingError(std::string("training diverged: ") + e.what());
                }
                if (!std::isfinite(batch_loss)) {
                    throw TrainingError("training diverged: non-finite loss in epoch " + std::to_string(epoch));
                }
                double const scale = config.learning_rate / static_cast<double>(end - start);
                for (std::size_t p = 0; p < weights.size(); ++p) {
                    weights[p] -= scale * grad[p];
                }
                std::vector<float> params(weights.size());
                for (std::size_t p = 0; p < weights.size(); ++p) {
                    params[p] = static_cast<float>(weights[p]);
                    if (!std::isfinite(params[p])) {
                        throw TrainingError("training diverged: non-finite weight in epoch " + std::to_string(epoch));
                    }
                }
                model.set_params(std::move(params));
            }
        }
        model.set_training_eps(adversarial ? static_cast<float>(config.eps) : 0.0F);
        return model;
    }

} // namespace

auto train_adversarial(TrainConfig const& config, Dataset const& data) -> Classifier
{
    return train(config, data, true);
}

auto train_standard(TrainConfig const& config, Dataset const& data) -> Classifier
{
    return train(config, data, false);
}

} // namespace caa
