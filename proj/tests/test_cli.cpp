#include <flarebench/commands.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace flarebench;

namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(FLAREBENCH_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::size_t data_rows(const fs::path& p)
{
    std::ifstream is(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line))
        ++n;
    return n == 0 ? 0 : n - 1;
}

// One small dataset shared by every test in this file.
class Cli : public ::testing::Test
{
protected:
    static void SetUpTestSuite()
    {
        root_ = fs::temp_directory_path() / "flarebench_cli_test";
        fs::remove_all(root_);
        ASSERT_EQ(run_cli("gen --data-dir " + data().string()
                          + " --events 2,8,20,30,40 --params 6 --steps 16 --seed 5"),
                  0);
        ASSERT_EQ(run_cli("extract --data-dir " + data().string()), 0);
    }
    static void TearDownTestSuite() { fs::remove_all(root_); }

    static fs::path data() { return root_ / "data"; }
    static fs::path out(const std::string& name) { return root_ / name; }
    static std::string dirs(const std::string& name)
    {
        return "--data-dir " + data().string() + " --out-dir " + out(name).string();
    }

    static inline fs::path root_;
};

} // namespace

TEST_F(Cli, GenWritesManifestAndPartitions)
{
    EXPECT_TRUE(fs::exists(data() / "manifest.json"));
    for (int p = 1; p <= 5; ++p) {
        EXPECT_TRUE(fs::exists(data() / ("partition_" + std::to_string(p) + ".csv")));
        EXPECT_TRUE(fs::exists(features_file(data(), p)));
    }
    const auto recs = read_features(features_file(data(), 1));
    EXPECT_EQ(recs.front().features.size(), 36u); // 6 params x ALL
    EXPECT_EQ(recs.size(), 100u * 8u);
}

TEST_F(Cli, RunZProducesTwentyRows)
{
    ASSERT_EQ(run_cli("run Z " + dirs("z")), 0);
    EXPECT_EQ(data_rows(out("z") / "results.csv"), 20u);
    EXPECT_EQ(data_rows(out("z") / "summary.csv"), 20u);
}

TEST_F(Cli, RunAProducesTwoHundredRows)
{
    ASSERT_EQ(run_cli("run --experiments A " + dirs("a")), 0);
    EXPECT_EQ(data_rows(out("a") / "results.csv"), 200u);
}

TEST_F(Cli, RunDHasUnifoldAndMultifoldSeries)
{
    ASSERT_EQ(run_cli("run D " + dirs("d")), 0);
    const auto trials = read_trials(out("d") / "results.csv");
    std::size_t uni = 0, multi = 0;
    for (const auto& t : trials)
        (t.spec.unifold() ? uni : multi) += 1;
    EXPECT_EQ(uni, 50u);
    EXPECT_EQ(multi, 20u);
    std::size_t uni_rows = 0;
    for (const auto& r : aggregate(trials))
        uni_rows += r.series.rfind("unifold", 0) == 0 ? 1 : 0;
    EXPECT_EQ(uni_rows, 5u);
}

TEST_F(Cli, ReportMatchesAggregate)
{
    ASSERT_EQ(run_cli("run F --repeats 2 " + dirs("f")), 0);
    const std::string summary = slurp(out("f") / "summary.csv");
    ASSERT_EQ(run_cli("report --out-dir " + out("f").string()), 0);
    EXPECT_EQ(slurp(out("f") / "summary.csv"), summary);
    EXPECT_EQ(data_rows(out("f") / "plot_F.csv"), 40u);

    const auto rows = aggregate(read_trials(out("f") / "results.csv"));
    std::set<std::string> series;
    for (const auto& r : rows)
        series.insert(r.series);
    EXPECT_EQ(series, (std::set<std::string>{"multifold:OS1:global:LAST", "multifold:OS3:global:LAST"}));
}

TEST_F(Cli, ReportOnEmptyDirectory)
{
    fs::create_directories(out("empty"));
    EXPECT_EQ(run_cli("report --out-dir " + out("empty").string()), 0);
    EXPECT_EQ(data_rows(out("empty") / "summary.csv"), 0u);
}

TEST_F(Cli, RunsAreByteIdentical)
{
    ASSERT_EQ(run_cli("run C B --repeats 2 " + dirs("r1")), 0);
    ASSERT_EQ(run_cli("run C B --repeats 2 --jobs 2 " + dirs("r2")), 0);
    EXPECT_EQ(slurp(out("r1") / "results.csv"), slurp(out("r2") / "results.csv"));
}

TEST_F(Cli, ConfigFileAndFlagPrecedence)
{
    fs::create_directories(out("cfg"));
    {
        std::ofstream cfg(out("cfg") / "run.ini");
        cfg << "data-dir=" << data().string() << "\nout-dir=" << out("cfg").string() << "\nrepeats=1\nseed=3\n";
    }
    ASSERT_EQ(run_cli("--config " + (out("cfg") / "run.ini").string() + " run A --seed 4"), 0);
    const auto trials = read_trials(out("cfg") / "results.csv");
    EXPECT_EQ(trials.size(), 20u);
    RunOptions opt;
    opt.master_seed = 4;
    EXPECT_EQ(trials.front().spec.seed, detail::trial_seed(4, 1, 2, 0));
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run_cli("run Q " + dirs("bad")), kExitConfig);
    EXPECT_EQ(run_cli("run Z --remedy US9 " + dirs("bad")), kExitConfig);
    EXPECT_EQ(run_cli("gen --steps 4 --data-dir " + out("bad").string()), kExitConfig);
    EXPECT_EQ(run_cli("run Z --data-dir " + out("nowhere").string() + " --out-dir " + out("bad").string()),
              kExitData);
    // OS2 is infeasible when B > 2C: every trial fails.
    fs::create_directories(out("os2"));
    ASSERT_EQ(run_cli("gen --data-dir " + (out("os2") / "data").string()
                      + " --partitions 2 --events 2,8,10,30,40 --params 2 --steps 16"),
              0);
    ASSERT_EQ(run_cli("extract --data-dir " + (out("os2") / "data").string()), 0);
    EXPECT_EQ(run_cli("run A --repeats 1 --remedy OS2 --data-dir " + (out("os2") / "data").string() + " --out-dir "
                      + (out("os2") / "res").string()),
              kExitTrial);
    EXPECT_TRUE(fs::exists(out("os2") / "res" / "failures.csv"));
}
