#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace caa::cli {

struct TrainOptions {
    std::string dataset;
    std::string out;
    std::string arch = "mlp";
    std::vector<std::uint32_t> sizes { 128 };
    double adv_eps = 0.0;
    std::size_t epochs = 10;
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    std::size_t pgd_steps = 7;
    std::uint32_t num_classes = 0;
    std::optional<double> eval_eps;
};

// Which examples of the dataset a command runs on.
struct SplitOptions {
    std::size_t search_size = 1000;
    std::size_t eval_size = 1000;
    std::uint64_t split_seed = 0;
    std::string partition = "eval"; // search | eval | all
};

struct SearchOptions {
    std::string model;
    std::string substitute_model;
    std::string dataset;
    std::string out_dir;
    std::string space = "linf";
    std::optional<double> eps;
    std::size_t policy_len = 3;
    std::size_t population = 20;
    std::size_t generations = 40;
    std::size_t offspring = 10;
    std::optional<double> alpha;
    std::string strategy = "nsga2";
    std::size_t budget = 100;
    std::string mode = "direct";
    std::optional<int> target_class;
    std::size_t subset = 0;
    std::optional<std::size_t> max_evals;
    std::vector<std::string> seed_genomes;
    SplitOptions split;
};

struct AttackOptions {
    std::string policy;
    std::string model;
    std::string substitute_model;
    std::string dataset;
    std::string out;
    std::string summary;
    std::string space;
    std::uint32_t restarts = 1;
    std::string mode = "direct";
    std::optional<int> target_class;
    SplitOptions split;
};

struct ReportOptions {
    std::vector<std::string> inputs;
    std::string out;
    double width = 640.0;
    double height = 480.0;
};

struct MakeDataOptions {
    std::string kind = "digits";
    std::string out;
    std::size_t per_class = 100;
    std::uint32_t side = 10;
    std::uint32_t classes = 10;
    std::size_t dims = 16;
    double separation = 4.0;
};

struct GradcheckOptions {
    std::size_t trials = 50;
    double tolerance = 1e-4;
};

// Shared by every subcommand.
struct Common {
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    bool quiet = false;
    // Resolved configuration text, recorded in run metadata.
    std::string resolved_config;
};

// Each returns the process exit code.
auto run_train(TrainOptions const& o, Common const& c) -> int;
auto run_search(SearchOptions const& o, Common const& c) -> int;
auto run_attack(AttackOptions const& o, Common const& c) -> int;
auto run_report(ReportOptions const& o, Common const& c) -> int;
auto run_make_data(MakeDataOptions const& o, Common const& c) -> int;
auto run_gradcheck(GradcheckOptions const& o, Common const& c) -> int;
auto run_selftest(Common const& c) -> int;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
// gradcheck / selftest found a mismatch
inline constexpr int kExitCheckFailed = 3;

} // namespace caa::cli
