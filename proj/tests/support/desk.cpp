#include "desk.hpp"

#include "caa/training.hpp"

namespace caa::testing {

auto desk() -> Desk const&
{
    static Desk const d = [] {
        Dataset train = synth_digits(300, 10, 1);
        TrainConfig config;
        config.arch = Architecture::mlp({ 128 });
        config.eps = kDeskEps;
        config.epochs = 40;
        config.seed = 7;
        Classifier model = train_adversarial(config, train);
        Dataset pool = synth_digits(30, 10, 2);
        Split split = make_split(pool, kDeskSearchSize, kDeskEvalSize, 5);
        return Desk { std::move(train), std::move(pool), std::move(split), std::move(model) };
    }();
    return d;
}

auto random_mlp(std::size_t inputs, std::uint32_t classes, std::vector<std::uint32_t> hidden, std::uint64_t seed) -> Classifier
{
    InputDims const dims { 1, static_cast<std::uint32_t>(inputs), 1 };
    return Classifier::initialize(Architecture::mlp(std::move(hidden)), dims, classes, seed);
}

auto diag_linear() -> Classifier
{
    return Classifier(Architecture::linear(), InputDims { 1, 2, 1 }, 2, { 2.0F, 0.0F, 0.0F, 2.0F, 0.0F, 0.0F });
}

} // namespace caa::testing
