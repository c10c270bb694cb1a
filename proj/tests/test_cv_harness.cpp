#include <flarebench/commands.hpp>
#include <flarebench/cv_harness.hpp>
#include <flarebench/experiments.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace flarebench;

namespace {

FeatureRecord rec(int pid, const std::string& event, int slice, FlareClass c, std::vector<double> f)
{
    FeatureRecord r;
    r.event_id = event;
    r.partition_id = pid;
    r.slice_index = slice;
    r.slice_uid = make_slice_uid(pid, event, slice);
    r.label = c;
    r.superclass = to_superclass(c);
    r.features = std::move(f);
    return r;
}

// Small synthetic partitions, features extracted in memory.
PartitionData make_data(const GenConfig& cfg, const FeatureSet& set = FeatureSet::all())
{
    const SyntheticDataset ds = generate(cfg);
    PartitionData data;
    for (const auto& [pid, slices] : ds.partitions)
        data[pid] = extract_features(slices, set, ParamSelection::all_of(ds.param_names));
    return data;
}

GenConfig small_config()
{
    GenConfig cfg;
    cfg.n_partitions = 3;
    cfg.events_per_partition = ClassCounts::of(2, 8, 20, 30, 40);
    cfg.n_params = 6;
    cfg.steps_per_slice = 16;
    return cfg;
}

} // namespace

TEST(CvHarness, MultifoldMatrix)
{
    const std::vector<int> five = {1, 2, 3, 4, 5};
    const auto pairs = multifold_matrix(five);
    EXPECT_EQ(pairs.size(), 20u);
    for (const auto& [a, b] : pairs)
        EXPECT_NE(a, b);
    EXPECT_EQ(multifold_matrix(std::vector<int>{1, 2}), (std::vector<std::pair<int, int>>{{1, 2}, {2, 1}}));
    EXPECT_THROW(multifold_matrix(std::vector<int>{1}), Error);
}

TEST(CvHarness, UnifoldFoldsAreStratifiedAndDisjoint)
{
    std::vector<FlareClass> labels;
    for (int i = 0; i < 100; ++i)
        labels.push_back(i < 10 ? FlareClass::M : (i < 40 ? FlareClass::C : FlareClass::N));
    const auto folds = unifold_folds<FlareClass>(labels, 10, 5);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
        EXPECT_EQ(f.size(), 10u);
        std::size_t xm = 0;
        for (std::size_t i : f) {
            EXPECT_TRUE(seen.insert(i).second);
            xm += labels[i] == FlareClass::M ? 1 : 0;
        }
        EXPECT_LE(std::abs(static_cast<double>(xm) - 1.0), 1.0);
    }
    EXPECT_EQ(seen.size(), 100u);

    const std::vector<FlareClass> tiny = {FlareClass::X, FlareClass::X, FlareClass::N, FlareClass::N};
    EXPECT_THROW(unifold_folds<FlareClass>(tiny, 3, 0), Error);
}

TEST(CvHarness, AggregateMeanAndVariance)
{
    std::vector<TrialResult> rs(2);
    rs[0].scores.tss = 0.6;
    rs[1].scores.tss = 0.8;
    rs[1].spec.repeat = 1;
    const auto rows = aggregate(rs);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].tss.mean, 0.7, 1e-15);
    EXPECT_NEAR(rows[0].tss.variance, 0.02, 1e-15);

    // Ten repeats against a direct recount.
    std::vector<TrialResult> ten(10);
    double sum = 0;
    for (int i = 0; i < 10; ++i) {
        ten[static_cast<std::size_t>(i)].scores.tss = 0.05 * i * i - 0.3;
        sum += 0.05 * i * i - 0.3;
    }
    double ss = 0;
    for (int i = 0; i < 10; ++i)
        ss += std::pow(0.05 * i * i - 0.3 - sum / 10, 2);
    const auto agg = aggregate(ten);
    EXPECT_NEAR(agg[0].tss.mean, sum / 10, 1e-12);
    EXPECT_NEAR(agg[0].tss.variance, ss / 9, 1e-12);
}

TEST(CvHarness, OverlappingIdsAbort)
{
    const std::vector<FeatureRecord> train = {rec(1, "e", 0, FlareClass::X, {1}), rec(1, "e", 1, FlareClass::N, {2})};
    const std::vector<FeatureRecord> test = {rec(1, "e", 1, FlareClass::N, {2})};
    EXPECT_THROW(check_disjoint(train, test), LeakageError);
    const std::vector<FeatureRecord> other = {rec(2, "f", 0, FlareClass::N, {2})};
    EXPECT_NO_THROW(check_disjoint(train, other));
}

TEST(CvHarness, ResamplingATestSetAborts)
{
    LabeledSet test{SetRole::testing, {rec(2, "a", 0, FlareClass::X, {1}), rec(2, "b", 0, FlareClass::M, {1}),
                                       rec(2, "c", 0, FlareClass::C, {1}), rec(2, "d", 0, FlareClass::B, {1}),
                                       rec(2, "e", 0, FlareClass::N, {1})}};
    const SamplingPlan plan = make_plan(count_classes(test.records), Strategy::US2);
    EXPECT_THROW(resample(test, plan, 1), LeakageError);
    test.role = SetRole::training;
    EXPECT_EQ(resample(test, plan, 1).records.size(), plan.targets.total());
}

TEST(CvHarness, TrialIsDeterministicAndTestSetIsUntouched)
{
    const PartitionData data = make_data(small_config());
    TrialSpec s;
    s.train_partition = 1;
    s.test_partition = 2;
    s.remedy = Remedy::resample(Strategy::OS3);
    s.seed = 44;
    const TrialResult a = run_trial(s, data, SvmConfig{});
    const TrialResult b = run_trial(s, data, SvmConfig{});
    EXPECT_EQ(a.cm, b.cm);
    EXPECT_EQ(a.cm.total(), data.at(2).size());

    s.train_partition = s.test_partition = 3;
    s.folds = 5;
    s.repeat = 2;
    const TrialResult u = run_trial(s, data, SvmConfig{});
    EXPECT_EQ(u.cm.total(), data.at(3).size() / 5);
}

TEST(CvHarness, FailuresNameTheirStage)
{
    PartitionData data = make_data(small_config(), FeatureSet::last());
    TrialSpec s;
    s.train_partition = 1;
    s.test_partition = 2;
    s.feature_set = FeatureSet::std_only(); // never extracted
    try {
        (void)run_trial(s, data, SvmConfig{});
        FAIL() << "expected a trial error";
    } catch (const TrialError& e) {
        EXPECT_EQ(e.stage(), TrialStage::select);
    }
    const std::vector<TrialSpec> specs = {s};
    const TrialBatch batch = run_trials(specs, data, SvmConfig{});
    EXPECT_TRUE(batch.results.empty());
    ASSERT_EQ(batch.failures.size(), 1u);
    EXPECT_EQ(batch.failures[0].stage, "select");
}

TEST(CvHarness, ParallelRunMatchesSerialRun)
{
    const PartitionData data = make_data(small_config(), FeatureSet::last());
    RunOptions opt;
    opt.repeats = 2;
    const std::vector<int> pids = {1, 2, 3};
    const auto specs = build_experiment('A', pids, opt);
    const auto serial = run_trials(specs, data, SvmConfig{}, 1);
    const auto parallel = run_trials(specs, data, SvmConfig{}, 3);
    ASSERT_EQ(serial.results.size(), parallel.results.size());
    for (std::size_t i = 0; i < serial.results.size(); ++i)
        EXPECT_EQ(format_trial_row(serial.results[i]), format_trial_row(parallel.results[i]));
}

TEST(CvHarness, ExperimentShapes)
{
    const std::vector<int> five = {1, 2, 3, 4, 5};
    const RunOptions opt;
    EXPECT_EQ(build_experiment('Z', five, opt).size(), 20u);
    EXPECT_EQ(build_experiment('A', five, opt).size(), 200u);
    EXPECT_EQ(build_experiment('B', five, opt).size(), 200u);
    EXPECT_EQ(build_experiment('C', five, opt).size(), 20u);
    EXPECT_EQ(build_experiment('D', five, opt).size(), 70u);
    EXPECT_EQ(build_experiment('E', five, opt).size(), 40u);
    EXPECT_EQ(build_experiment('F', five, opt).size(), 400u);
    EXPECT_EQ(build_experiment('G', five, opt).size(), 600u);
    EXPECT_THROW(build_experiment('H', five, opt), Error);

    // Arms of a comparison share their random streams.
    const auto g = build_experiment('G', five, opt);
    EXPECT_EQ(g[0].seed, g[200].seed);
    EXPECT_EQ(g[0].train_partition, g[200].train_partition);

    // Overrides leave the compared dimension alone.
    RunOptions forced;
    forced.normalization = NormPolicy::local;
    const auto e = build_experiment('E', five, forced);
    EXPECT_EQ(e.front().normalization, NormPolicy::global_pair);
    EXPECT_EQ(e.back().normalization, NormPolicy::local);
}

TEST(CvHarness, SeparableDataGivesNearPerfectSkill)
{
    GenConfig cfg = small_config();
    cfg.n_partitions = 2;
    cfg.events_per_partition = ClassCounts::of(4, 16, 20, 30, 40);
    cfg.phi = 0.0;
    cfg.delta = 10.0;
    cfg.volatility = 0.0;
    cfg.amplitudes = {1.0};
    const PartitionData data = make_data(cfg, FeatureSet::last());
    TrialSpec s;
    s.train_partition = 1;
    s.test_partition = 2;
    const TrialResult r = run_trial(s, data, SvmConfig{});
    EXPECT_GE(r.scores.tss, 0.95);
}
