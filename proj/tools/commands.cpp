#include "commands.hpp"

#include "run_meta.hpp"

#include "caa/attacks.hpp"
#include "caa/data.hpp"
#include "caa/error.hpp"
#include "caa/model_io.hpp"
#include "caa/policy.hpp"
#include "caa/report.hpp"
#include "caa/search.hpp"
#include "caa/training.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace caa::cli {

namespace {

    auto read_text(fs::path const& p) -> std::string
    {
        std::ifstream in(p, std::ios::binary);
        if (!in) {
            throw Error("cannot open " + p.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    auto fixed(double v, int digits = 4) -> std::string
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", digits, v);
        return buf;
    }

    auto require_norm(std::string const& s) -> Norm
    {
        auto const n = parse_norm(s);
        if (!n) {
            throw ValidationError("unknown space '" + s + "' (expected linf, l2 or unrestricted)");
        }
        return *n;
    }

    auto require_mode(std::string const& s) -> SearchMode
    {
        auto const m = parse_mode(s);
        if (!m) {
            throw ValidationError("unknown mode '" + s + "' (expected direct, transfer or targeted)");
        }
        return *m;
    }

    auto select_indices(Dataset const& d, SplitOptions const& s) -> std::vector<std::size_t>
    {
        if (s.partition == "all") {
            std::vector<std::size_t> all(d.size());
            for (std::size_t i = 0; i < all.size(); ++i) {
                all[i] = i;
            }
            return all;
        }
        auto const split = make_split(d, s.search_size, s.eval_size, s.split_seed);
        if (s.partition == "search") {
            return split.search_indices;
        }
        if (s.partition == "eval") {
            return split.eval_indices;
        }
        throw ValidationError("unknown partition '" + s.partition + "' (expected search, eval or all)");
    }

    auto space_eps_default(Norm n) -> double
    {
        switch (n) {
        case Norm::linf:
            return 8.0 / 255.0;
        case Norm::l2:
            return 0.5;
        case Norm::unrestricted:
            break;
        }
        return 1.0;
    }

    void say(Common const& c, std::string const& line)
    {
        if (!c.quiet) {
            std::cout << line << '\n';
        }
    }

} // namespace

auto run_train(TrainOptions const& o, Common const& c) -> int
{
    Stopwatch const clock;
    Dataset const data = load_idx_dir(o.dataset, o.num_classes);
    TrainConfig cfg;
    cfg.arch = Architecture::parse(o.arch, o.sizes);
    cfg.eps = o.adv_eps;
    cfg.epochs = o.epochs;
    cfg.seed = c.seed;
    cfg.learning_rate = o.learning_rate;
    cfg.batch_size = o.batch_size;
    cfg.pgd_steps = o.pgd_steps;
    Classifier const model = o.adv_eps > 0.0 ? train_adversarial(cfg, data) : train_standard(cfg, data);
    save_model(model, o.out);

    double const eval_eps = o.eval_eps.value_or(o.adv_eps);
    double const clean = clean_accuracy(model, data);
    double const robust = pgd_robust_accuracy(model, data.images(), data.labels(), eval_eps, 20, derive_seed(c.seed, 99));
    say(c, "clean accuracy " + fixed(clean) + "\nPGD-Linf(eps=" + fixed(eval_eps) + ", t=20) robust accuracy " + fixed(robust));
    write_meta(meta_path_for(o.out), "train", c, clock.seconds(),
        { { "architecture", model.architecture().to_string() }, { "examples", data.size() }, { "clean_accuracy", clean },
            { "robust_accuracy", robust }, { "eval_eps", eval_eps } });
    return kExitOk;
}

auto run_search(SearchOptions const& o, Common const& c) -> int
{
    Stopwatch const clock;
    SearchConfig cfg;
    cfg.space = require_norm(o.space);
    cfg.mode = require_mode(o.mode);
    cfg.eps_max = o.eps.value_or(space_eps_default(cfg.space));
    cfg.policy_len = o.policy_len;
    cfg.population = o.population;
    cfg.generations = o.generations;
    cfg.offspring = o.offspring;
    cfg.alpha = o.alpha;
    cfg.seed = c.seed;
    cfg.eval_subset_size = o.subset;
    cfg.fixed_target = o.target_class;
    cfg.workers = c.workers;
    cfg.max_evaluations = o.max_evals;
    for (auto const& g : o.seed_genomes) {
        cfg.seed_genomes.push_back(Genome::parse(g));
    }
    if (o.strategy != "nsga2" && o.strategy != "random") {
        throw ValidationError("unknown strategy '" + o.strategy + "' (expected nsga2 or random)");
    }
    if (cfg.mode == SearchMode::transfer && o.substitute_model.empty()) {
        throw ValidationError("transfer mode needs --substitute-model");
    }
    if (cfg.mode != SearchMode::transfer && !o.substitute_model.empty()) {
        throw ValidationError("--substitute-model only applies to transfer mode");
    }
    validate_config(cfg);

    Classifier const model = load_model(o.model);
    std::optional<Classifier> substitute;
    if (!o.substitute_model.empty()) {
        substitute = load_model(o.substitute_model);
    }
    Dataset const data = load_idx_dir(o.dataset, model.num_classes());
    SplitOptions split = o.split;
    split.partition = "search";
    SearchProblem const problem { &model, substitute ? &*substitute : nullptr, &data, select_indices(data, split) };
    PolicyEvaluator evaluator(cfg, problem);

    bool exhausted = false;
    SearchResult result;
    try {
        result = o.strategy == "nsga2" ? nsga2_search(cfg, evaluator) : random_search(o.budget, cfg, evaluator);
    } catch (BudgetExhausted const& e) {
        exhausted = true;
        result = e.partial();
        std::cerr << "warning: evaluation budget exhausted after " << result.stats.requests << " requests; writing best so far\n";
    }

    fs::path const dir = o.out_dir;
    fs::create_directories(dir);
    write_text_atomic(dir / "history.csv", history_csv(result.history));
    write_text_atomic(dir / "pareto.csv", pareto_csv(result.pareto_log));
    write_text_atomic(dir / "policy.json", serialize_policy(result.best_policy));
    say(c, describe_policy(result.best_policy));
    say(c, "robust accuracy " + fixed(result.best_objectives.robust_accuracy) + ", complexity "
            + std::to_string(result.best_objectives.complexity) + ", L " + fixed(result.best_scalar, 6));
    write_meta(dir / "meta.json", "search", c, clock.seconds(),
        { { "strategy", o.strategy }, { "mode", std::string(mode_name(cfg.mode)) }, { "space", std::string(norm_name(cfg.space)) },
            { "eps_max", cfg.eps_max }, { "alpha", cfg.alpha_value() }, { "best_genome", result.best_genome.to_string() },
            { "search_space_size", search_space_size(cfg.catalog().size(), cfg.policy_len) },
            { "requests", result.stats.requests }, { "cache_hits", result.stats.cache_hits },
            { "policy_runs", result.stats.policy_runs }, { "budget_exhausted", exhausted } });
    return kExitOk;
}

auto run_attack(AttackOptions const& o, Common const& c) -> int
{
    Stopwatch const clock;
    Policy const policy = parse_policy(read_text(o.policy));
    if (!o.space.empty() && require_norm(o.space) != policy.norm) {
        throw ValidationError("policy norm " + std::string(norm_name(policy.norm)) + " does not match requested space " + o.space);
    }
    if (o.restarts < 1) {
        throw ValidationError("--restarts must be at least 1");
    }
    SearchMode const mode = require_mode(o.mode);
    if (mode == SearchMode::transfer && o.substitute_model.empty()) {
        throw ValidationError("transfer mode needs --substitute-model");
    }
    bool const targeted = mode == SearchMode::targeted;
    Policy run = policy;
    run.restarts = o.restarts;
    validate_policy(run, targeted);

    Classifier const model = load_model(o.model);
    std::optional<Classifier> substitute;
    if (!o.substitute_model.empty()) {
        substitute = load_model(o.substitute_model);
    }
    Dataset const data = load_idx_dir(o.dataset, model.num_classes());
    std::vector<std::size_t> indices = select_indices(data, o.split);
    std::vector<int> targets;
    if (targeted) {
        auto plan = plan_targets(data, indices, o.target_class);
        indices = std::move(plan.indices);
        targets = std::move(plan.targets);
    }

    RunOptions opts;
    opts.seed = c.seed;
    opts.workers = c.workers;
    opts.generation_model = substitute ? &*substitute : nullptr;
    opts.targets = targets;
    auto const outcome = run_policy(run, data, indices, model, opts);

    std::vector<Tensor> images;
    std::vector<int> labels;
    for (auto i : indices) {
        images.push_back(data.image(i));
        labels.push_back(data.label(i));
    }
    write_text_atomic(o.out, attack_report_csv(outcome, images, labels, indices, targets, model));

    AttackSummary s;
    s.robust_accuracy = outcome.robust_accuracy();
    s.clean_accuracy = clean_accuracy(model, data, indices);
    s.examples = indices.size();
    s.restarts = o.restarts;
    s.complexity = policy_complexity(policy, model.num_classes()).gradient_evals;
    s.gradient_evals = outcome.gradient_evals;
    s.queries = outcome.queries;
    fs::path summary = o.summary;
    if (summary.empty()) {
        summary = o.out;
        summary.replace_extension(".summary.csv");
    }
    write_text_atomic(summary, attack_summary_csv(s));
    say(c, describe_policy(policy));
    say(c, "robust accuracy " + fixed(s.robust_accuracy) + " (clean " + fixed(s.clean_accuracy) + ") over " + std::to_string(s.examples)
            + " examples, restarts " + std::to_string(s.restarts));
    write_meta(meta_path_for(o.out), "attack", c, clock.seconds(),
        { { "policy", describe_policy(policy) }, { "summary", summary.string() }, { "robust_accuracy", s.robust_accuracy },
            { "gradient_evals", s.gradient_evals }, { "queries", s.queries } });
    return kExitOk;
}

auto run_report(ReportOptions const& o, Common const& c) -> int
{
    Stopwatch const clock;
    std::vector<FrontPoint> points;
    for (auto const& in : o.inputs) {
        try {
            auto const part = read_front(read_text(in));
            points.insert(points.end(), part.begin(), part.end());
        } catch (ParseError const& e) {
            throw ParseError(in + ": " + e.what(), e.position());
        }
    }
    PlotGeometry g;
    g.width = o.width;
    g.height = o.height;
    write_text_atomic(o.out, render_front_svg(points, g));
    say(c, std::to_string(points.size()) + " points -> " + o.out);
    write_meta(meta_path_for(o.out), "report", c, clock.seconds(), { { "inputs", o.inputs }, { "points", points.size() } });
    return kExitOk;
}

auto run_make_data(MakeDataOptions const& o, Common const& c) -> int
{
    Stopwatch const clock;
    Dataset d;
    if (o.kind == "digits") {
        d = synth_digits(o.per_class, o.side, c.seed);
    } else if (o.kind == "gaussians") {
        d = synth_gaussians(o.classes, o.per_class, o.dims, o.separation, c.seed);
    } else {
        throw ValidationError("unknown dataset kind '" + o.kind + "' (expected digits or gaussians)");
    }
    fs::path const dir = o.out;
    fs::create_directories(dir);
    write_idx(d, dir / "images.idx", dir / "labels.idx");
    say(c, std::to_string(d.size()) + " examples -> " + o.out);
    write_meta(dir / "meta.json", "make-data", c, clock.seconds(), { { "kind", o.kind }, { "examples", d.size() } });
    return kExitOk;
}

} // namespace caa::cli
