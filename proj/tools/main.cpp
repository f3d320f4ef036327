#include "commands.hpp"

#include "caa/error.hpp"
#include "caa/version.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

using namespace caa::cli;

namespace {

void add_split_options(CLI::App* cmd, SplitOptions& s)
{
    cmd->add_option("--search-size", s.search_size, "examples in the search partition")->capture_default_str();
    cmd->add_option("--eval-size", s.eval_size, "examples in the evaluation partition")->capture_default_str();
    cmd->add_option("--split-seed", s.split_seed, "seed of the search/eval split")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Composite adversarial attack search" };
    app.set_version_flag("--version", std::string(caa::version()));
    app.set_config("--config", "", "keyed text config (key = value, [subcommand] sections); flags override it");
    app.require_subcommand(1);

    Common common;
    if (char const* env = std::getenv("CAA_WORKERS")) {
        try {
            common.workers = std::stoul(env);
        } catch (std::exception const&) {
            std::cerr << "error: CAA_WORKERS must be a non-negative integer\n";
            return kExitUsage;
        }
    }
    app.add_option("--seed", common.seed, "base seed")->capture_default_str();
    app.add_option("--workers", common.workers, "evaluation workers (0 = CAA_WORKERS or 1)")->capture_default_str();
    app.add_flag("-q,--quiet", common.quiet, "suppress progress output");

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "train a classifier (adversarially when --adv-eps > 0)");
    train_cmd->add_option("--dataset", train.dataset, "IDX dataset directory")->required();
    train_cmd->add_option("--out", train.out, "model file to write")->required();
    train_cmd->add_option("--arch", train.arch, "linear, mlp or convnet")->capture_default_str();
    train_cmd->add_option("--sizes", train.sizes, "hidden widths (mlp) or channels (convnet)")->capture_default_str();
    train_cmd->add_option("--adv-eps", train.adv_eps, "linf radius of the inner PGD")->capture_default_str();
    train_cmd->add_option("--epochs", train.epochs)->capture_default_str();
    train_cmd->add_option("--lr", train.learning_rate)->capture_default_str();
    train_cmd->add_option("--batch-size", train.batch_size)->capture_default_str();
    train_cmd->add_option("--pgd-steps", train.pgd_steps)->capture_default_str();
    train_cmd->add_option("--num-classes", train.num_classes, "0 infers from the labels")->capture_default_str();
    train_cmd->add_option("--eval-eps", train.eval_eps, "radius of the reported PGD accuracy (default --adv-eps)");

    SearchOptions search;
    auto* search_cmd = app.add_subcommand("search", "search an attack policy");
    search_cmd->add_option("--model", search.model, "target model file")->required();
    search_cmd->add_option("--dataset", search.dataset, "IDX dataset directory")->required();
    search_cmd->add_option("--out-dir", search.out_dir, "directory for policy.json, pareto.csv, history.csv")->required();
    search_cmd->add_option("--space", search.space, "linf, l2 or unrestricted")->capture_default_str();
    search_cmd->add_option("--eps", search.eps, "global budget eps_max (default 8/255 linf, 0.5 l2)");
    search_cmd->add_option("--policy-len", search.policy_len, "N")->capture_default_str();
    search_cmd->add_option("--pop", search.population, "K")->capture_default_str();
    search_cmd->add_option("--gens", search.generations, "G")->capture_default_str();
    search_cmd->add_option("--offspring", search.offspring)->capture_default_str();
    search_cmd->add_option("--alpha", search.alpha, "complexity weight (default per space)");
    search_cmd->add_option("--strategy", search.strategy, "nsga2 or random")->capture_default_str();
    search_cmd->add_option("--budget", search.budget, "samples for --strategy random")->capture_default_str();
    search_cmd->add_option("--mode", search.mode, "direct, transfer or targeted")->capture_default_str();
    search_cmd->add_option("--substitute-model", search.substitute_model, "model that crafts examples in transfer mode");
    search_cmd->add_option("--target-class", search.target_class, "fixed target class (targeted mode)");
    search_cmd->add_option("--subset", search.subset, "evaluate each policy on this many search examples (0 = all)")
        ->capture_default_str();
    search_cmd->add_option("--max-evals", search.max_evals, "stop after this many evaluation requests");
    search_cmd->add_option("--seed-genome", search.seed_genomes, "genome op:eps:t|... placed in the initial population");
    add_split_options(search_cmd, search.split);

    AttackOptions attack;
    auto* attack_cmd = app.add_subcommand("attack", "run a policy and write a per-example report");
    attack_cmd->add_option("--policy", attack.policy, "policy JSON")->required();
    attack_cmd->add_option("--model", attack.model, "target model file")->required();
    attack_cmd->add_option("--dataset", attack.dataset, "IDX dataset directory")->required();
    attack_cmd->add_option("--out", attack.out, "per-example report CSV")->required();
    attack_cmd->add_option("--summary", attack.summary, "summary CSV (default <out>.summary.csv)");
    attack_cmd->add_option("--space", attack.space, "refuse policies of any other norm");
    attack_cmd->add_option("--restarts", attack.restarts)->capture_default_str();
    attack_cmd->add_option("--mode", attack.mode, "direct, transfer or targeted")->capture_default_str();
    attack_cmd->add_option("--substitute-model", attack.substitute_model, "model that crafts examples in transfer mode");
    attack_cmd->add_option("--target-class", attack.target_class, "fixed target class (targeted mode)");
    attack_cmd->add_option("--partition", attack.split.partition, "search, eval or all")->capture_default_str();
    add_split_options(attack_cmd, attack.split);

    ReportOptions report;
    auto* report_cmd = app.add_subcommand("report", "render pareto or attack summary CSVs as an SVG scatter");
    report_cmd->add_option("inputs", report.inputs, "pareto.csv or summary CSV files")->required();
    report_cmd->add_option("--out", report.out, "SVG file")->required();
    report_cmd->add_option("--width", report.width)->capture_default_str();
    report_cmd->add_option("--height", report.height)->capture_default_str();

    MakeDataOptions make;
    auto* make_cmd = app.add_subcommand("make-data", "write a synthetic dataset as IDX files");
    make_cmd->add_option("--kind", make.kind, "digits or gaussians")->capture_default_str();
    make_cmd->add_option("--out", make.out, "output directory")->required();
    make_cmd->add_option("--per-class", make.per_class)->capture_default_str();
    make_cmd->add_option("--side", make.side, "digit canvas side")->capture_default_str();
    make_cmd->add_option("--classes", make.classes, "gaussian classes")->capture_default_str();
    make_cmd->add_option("--dims", make.dims, "gaussian dimensions")->capture_default_str();
    make_cmd->add_option("--separation", make.separation, "gaussian simplex edge")->capture_default_str();

    GradcheckOptions grad;
    auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic and finite-difference input gradients");
    grad_cmd->add_option("--trials", grad.trials, "checks per loss kind")->capture_default_str();
    grad_cmd->add_option("--tolerance", grad.tolerance, "max relative error")->capture_default_str();

    auto* self_cmd = app.add_subcommand("selftest", "run the built-in oracle checks");

    CLI11_PARSE(app, argc, argv);
    // global keys plus the keys of the subcommand that ran
    std::string const prefix = app.get_subcommands().front()->get_name() + ".";
    std::istringstream all(app.config_to_str(true, false));
    for (std::string line; std::getline(all, line);) {
        auto const eq = line.find('=');
        auto const dot = line.find('.');
        if (line.rfind(prefix, 0) == 0 || dot == std::string::npos || dot > eq) {
            common.resolved_config += line + '\n';
        }
    }

    try {
        if (*train_cmd) {
            return run_train(train, common);
        }
        if (*search_cmd) {
            return run_search(search, common);
        }
        if (*attack_cmd) {
            return run_attack(attack, common);
        }
        if (*report_cmd) {
            return run_report(report, common);
        }
        if (*make_cmd) {
            return run_make_data(make, common);
        }
        if (*grad_cmd) {
            return run_gradcheck(grad, common);
        }
        if (*self_cmd) {
            return run_selftest(common);
        }
    } catch (caa::ValidationError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
