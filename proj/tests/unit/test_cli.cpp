// Drives the caa binary end to end in a scratch directory.
#include "caa/model_io.hpp"
#include "caa/policy.hpp"
#include "caa/report.hpp"
#include "caa/training.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace caa;

namespace {

struct Outcome {
    int code = -1;
    std::string output;
};

auto work_dir() -> fs::path const&
{
    static fs::path const dir = [] {
        auto d = fs::temp_directory_path() / ("caa_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

auto run(std::string const& args, std::string const& env = "") -> Outcome
{
    std::string const cmd = "cd '" + work_dir().string() + "' && " + env + " '" CAA_CLI_PATH "' " + args + " 2>&1";
    Outcome o;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return o;
    }
    std::array<char, 4096> buf {};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) {
        o.output += buf.data();
    }
    int const status = ::pclose(pipe);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

auto slurp(fs::path const& p) -> std::string
{
    std::ifstream in(work_dir() / p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(fs::path const& p, std::string const& text)
{
    std::ofstream(work_dir() / p, std::ios::binary) << text;
}

auto exists(fs::path const& p) -> bool { return fs::exists(work_dir() / p); }

std::string const kSplit = " --search-size 20 --eval-size 40 ";
std::string const kSmallSearch = " --eps 0.1 --pop 6 --gens 2 --offspring 4" + kSplit;

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        ASSERT_EQ(run("--seed 3 make-data --out digits --per-class 12 --side 8").code, 0);
        ASSERT_EQ(run("--seed 7 train --dataset digits --out model.caam --adv-eps 0.1 --epochs 2 --sizes 16").code, 0);
    }
};

} // namespace

TEST_F(Cli, TrainWritesDeterministicModelContainer)
{
    auto const model = slurp("model.caam");
    EXPECT_EQ(model.substr(0, 4), "CAAM");
    ASSERT_EQ(run("--seed 7 train --dataset digits --out again.caam --adv-eps 0.1 --epochs 2 --sizes 16").code, 0);
    EXPECT_EQ(slurp("again.caam"), model);
    EXPECT_TRUE(exists("model.caam.meta.json"));

    auto const r = run("--seed 5 train --dataset digits --out init.caam --epochs 0 --sizes 16");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("clean accuracy"), std::string::npos);
    TrainConfig cfg;
    cfg.arch = Architecture::mlp({ 16 });
    cfg.epochs = 0;
    cfg.seed = 5;
    auto const expected = train_standard(cfg, load_idx_dir(work_dir() / "digits"));
    auto const bytes = encode_model(expected);
    EXPECT_EQ(slurp("init.caam"), std::string(bytes.begin(), bytes.end()));
}

TEST_F(Cli, SearchOutputsAreReproducibleAcrossWorkerCounts)
{
    auto const a = run("--seed 4 search --model model.caam --dataset digits --out-dir s1" + kSmallSearch);
    ASSERT_EQ(a.code, 0) << a.output;
    auto const b = run("--seed 4 --workers 2 search --model model.caam --dataset digits --out-dir s2" + kSmallSearch);
    ASSERT_EQ(b.code, 0) << b.output;
    for (auto const* f : { "policy.json", "pareto.csv", "history.csv" }) {
        EXPECT_EQ(slurp(fs::path("s1") / f), slurp(fs::path("s2") / f)) << f;
    }
    EXPECT_EQ(parse_csv(slurp("s1/history.csv")).rows.size(), 3U);
    EXPECT_EQ(parse_csv(slurp("s1/pareto.csv")).header, (std::vector<std::string> { "generation", "robust_accuracy", "complexity", "genome" }));
    EXPECT_NE(slurp("s1/meta.json").find("\"version\""), std::string::npos);
}

TEST_F(Cli, LengthOneAndRandomStrategy)
{
    ASSERT_EQ(run("--seed 2 search --model model.caam --dataset digits --out-dir one --policy-len 1" + kSmallSearch).code, 0);
    EXPECT_EQ(parse_policy(slurp("one/policy.json")).elements.size(), 1U);
    ASSERT_EQ(run("--seed 2 search --model model.caam --dataset digits --out-dir rnd --strategy random --budget 7" + kSmallSearch).code, 0);
    EXPECT_EQ(parse_csv(slurp("rnd/history.csv")).rows.size(), 7U);
}

TEST_F(Cli, InvalidCombinationsAreRejectedBeforeEvaluation)
{
    auto const mode = run("search --model model.caam --dataset digits --out-dir bad1 --mode sideways" + kSmallSearch);
    EXPECT_EQ(mode.code, 2);
    EXPECT_FALSE(exists("bad1"));
    auto const transfer = run("search --model model.caam --dataset digits --out-dir bad2 --mode transfer" + kSmallSearch);
    EXPECT_EQ(transfer.code, 2);
    EXPECT_NE(transfer.output.find("substitute"), std::string::npos);
    // op 6 is past the end of the six-op targeted catalog
    auto const mt = run("search --model model.caam --dataset digits --out-dir bad3 --mode targeted --seed-genome '6:0:0|0:0:0|0:0:0'" + kSmallSearch);
    EXPECT_EQ(mt.code, 2);
    EXPECT_FALSE(exists("bad3"));
    auto const missing = run("search --model nope.caam --dataset digits --out-dir bad4" + kSmallSearch);
    EXPECT_EQ(missing.code, 1);
    EXPECT_FALSE(exists("bad4/policy.json"));
}

TEST_F(Cli, TransferAndTargetedModesRun)
{
    auto const t = run("--seed 1 search --model model.caam --substitute-model model.caam --mode transfer --dataset digits --out-dir tr"
        + kSmallSearch);
    ASSERT_EQ(t.code, 0) << t.output;
    auto const d = run("--seed 1 search --model model.caam --dataset digits --out-dir di" + kSmallSearch);
    ASSERT_EQ(d.code, 0);
    EXPECT_EQ(slurp("tr/history.csv"), slurp("di/history.csv"));
    auto const g = run("--seed 1 search --model model.caam --mode targeted --target-class 3 --dataset digits --out-dir tg" + kSmallSearch);
    ASSERT_EQ(g.code, 0) << g.output;
    EXPECT_EQ(slurp("tg/policy.json").find("MT-"), std::string::npos);
}

TEST_F(Cli, AttackReports)
{
    put("identity.json", R"({"norm":"linf","eps_global":0.1,"restarts":1,"elements":[{"attack":"IdentityAttack","epsilon":0,"steps":0}]})");
    ASSERT_EQ(run("attack --policy identity.json --model model.caam --dataset digits --out id.csv" + kSplit).code, 0);
    auto const id = parse_csv(slurp("id.summary.csv"));
    EXPECT_EQ(id.rows[0][0], id.rows[0][1]);
    EXPECT_EQ(parse_csv(slurp("id.csv")).rows.size(), 40U);

    put("pgd.json", R"({"norm":"linf","eps_global":0.1,"restarts":1,"elements":[{"attack":"PGD-LinfAttack","epsilon":0.05,"steps":5}]})");
    ASSERT_EQ(run("--seed 9 attack --policy pgd.json --model model.caam --dataset digits --out r1.csv --restarts 1" + kSplit).code, 0);
    ASSERT_EQ(run("--seed 9 attack --policy pgd.json --model model.caam --dataset digits --out r2.csv --restarts 2" + kSplit).code, 0);
    double const ra1 = std::stod(parse_csv(slurp("r1.summary.csv")).rows[0][0]);
    double const ra2 = std::stod(parse_csv(slurp("r2.summary.csv")).rows[0][0]);
    EXPECT_LE(ra2, ra1);

    put("sub.json", R"({"norm":"linf","eps_global":0.03137254901960784,"restarts":1,"elements":[)"
                    R"({"attack":"MT-LinfAttack","epsilon":0.03137254901960784,"steps":50},)"
                    R"({"attack":"MT-LinfAttack","epsilon":0.03137254901960784,"steps":25},)"
                    R"({"attack":"CW-LinfAttack","epsilon":0.03137254901960784,"steps":125}]})");
    ASSERT_EQ(run("attack --policy sub.json --model model.caam --dataset digits --out sub.csv --partition search" + kSplit).code, 0);
    auto const sub = parse_csv(slurp("sub.summary.csv"));
    EXPECT_EQ(sub.rows[0][static_cast<std::size_t>(sub.column("complexity"))], "800");

    auto const refused = run("attack --policy pgd.json --model model.caam --dataset digits --out no.csv --space l2" + kSplit);
    EXPECT_EQ(refused.code, 2);
    EXPECT_FALSE(exists("no.csv"));
}

TEST_F(Cli, ReportRendersDeterministically)
{
    put("empty.csv", "");
    ASSERT_EQ(run("report empty.csv --out empty.svg").code, 0);
    EXPECT_EQ(slurp("empty.svg"), render_front_svg({}));
    put("two.csv", "robust_accuracy,complexity\n0.5,100\n1.0,0\n");
    ASSERT_EQ(run("report two.csv --out two.svg").code, 0);
    EXPECT_NE(slurp("two.svg").find("<circle cx=\"610.00\" cy=\"225.00\""), std::string::npos);
    ASSERT_EQ(run("report two.csv --out two_again.svg").code, 0);
    EXPECT_EQ(slurp("two.svg"), slurp("two_again.svg"));
    put("bad.csv", "robust_accuracy,complexity\n0.5,100\n0.2\n");
    auto const bad = run("report bad.csv --out bad.svg");
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.output.find("line 3"), std::string::npos);
    EXPECT_FALSE(exists("bad.svg"));
}

TEST_F(Cli, ConfigFileSitsUnderFlags)
{
    put("run.ini", "seed = 11\n[search]\npop = 6\ngens = 5\noffspring = 4\neps = 0.1\nsearch-size = 20\neval-size = 40\n");
    auto const r = run("--config run.ini search --model model.caam --dataset digits --out-dir cfg --gens 1");
    ASSERT_EQ(r.code, 0) << r.output;
    auto const meta = slurp("cfg/meta.json");
    EXPECT_NE(meta.find("search.gens=1"), std::string::npos);
    EXPECT_NE(meta.find("search.pop=6"), std::string::npos);
    EXPECT_NE(meta.find("\"seed\": 11"), std::string::npos);
    EXPECT_EQ(parse_csv(slurp("cfg/history.csv")).rows.size(), 2U);
}

TEST_F(Cli, WorkerEnvironmentDefault)
{
    ASSERT_EQ(run("report two.csv --out w.svg", "CAA_WORKERS=3").code, 0);
    EXPECT_NE(slurp("w.svg.meta.json").find("\"workers\": 3"), std::string::npos);
    EXPECT_EQ(run("report two.csv --out w2.svg", "CAA_WORKERS=lots").code, 2);
}

TEST_F(Cli, Checks)
{
    auto const g = run("gradcheck --trials 10");
    EXPECT_EQ(g.code, 0) << g.output;
    auto const s = run("selftest");
    EXPECT_EQ(s.code, 0) << s.output;
    EXPECT_EQ(s.output.find("FAIL "), std::string::npos);
}
