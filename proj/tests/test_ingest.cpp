#include <flarebench/cv_harness.hpp>
#include <flarebench/ingest.hpp>
#include <oracle/oracles.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace flarebench;

namespace {

const std::vector<std::string> kParams = {"a", "b", "c"};

std::vector<MVTSSlice> small_dataset()
{
    std::vector<MVTSSlice> out;
    Rng rng = make_rng(4);
    for (int e = 0; e < 2; ++e)
        for (int j = 0; j < 3; ++j) {
            MVTSSlice s;
            s.event_id = "ev" + std::to_string(e);
            s.partition_id = 3;
            s.slice_index = j;
            s.label = e == 0 ? FlareClass::X : FlareClass::B;
            s.values = Grid<double>(4, 3);
            s.missing = Grid<std::uint8_t>(4, 3, 0);
            for (double& v : s.values.data())
                v = oracle::uniform01(rng) * 1e3 - 500;
            out.push_back(std::move(s));
        }
    out[1].missing(2, 1) = 1;
    out[1].values(2, 1) = 0;
    return out;
}

std::vector<MVTSSlice> parse(const std::string& text)
{
    std::istringstream is(text);
    return read_slices(is, "mem.csv", 3, 4);
}

} // namespace

TEST(Ingest, SliceRoundTrip)
{
    const auto slices = small_dataset();
    std::ostringstream os;
    write_slices(os, slices, kParams);
    const auto back = parse(os.str());
    ASSERT_EQ(back.size(), 6u);
    EXPECT_EQ(back, slices);
    EXPECT_EQ(back[1].missing(2, 1), 1);
}

TEST(Ingest, EmptyCellMarksMissing)
{
    const std::string text = "event_id,partition_id,class,slice_index,step,a,b,c\n"
                             "e,1,M,0,0,1,,3\n"
                             "e,1,M,0,1,1,2,3\n"
                             "e,1,M,0,2,1,2,3\n"
                             "e,1,M,0,3,1,2,3\n";
    const auto s = parse(text);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].missing(0, 1), 1);
    EXPECT_EQ(s[0].missing(1, 1), 0);
    EXPECT_EQ(s[0].label, FlareClass::M);
}

TEST(Ingest, MalformedRowsReportFileAndLine)
{
    const std::string header = "event_id,partition_id,class,slice_index,step,a,b,c\n";
    const auto fails_at = [&](const std::string& body, const std::string& where) {
        try {
            (void)parse(header + body);
            ADD_FAILURE() << "accepted: " << body;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::data);
            EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
        }
    };
    fails_at("e,1,M,0,0,1,2\n", "mem.csv:2");          // short row
    fails_at("e,1,Q,0,0,1,2,3\n", "mem.csv:2");        // bad class
    fails_at("e,1,M,0,0,1,x,3\n", "mem.csv:2");        // bad number
    fails_at("e,1,M,0,0,1,2,3\ne,1,M,0,1,1,2,3\n", "mem.csv"); // truncated slice
    EXPECT_THROW(parse("wrong,header\n"), Error);
}

TEST(Ingest, FeatureRoundTrip)
{
    Rng rng = make_rng(10);
    auto names = std::make_shared<std::vector<std::string>>();
    for (int k = 0; k < 144; ++k)
        names->push_back("p" + std::to_string(k / 6) + "_s" + std::to_string(k % 6));
    std::vector<FeatureRecord> recs;
    for (int i = 0; i < 100; ++i) {
        FeatureRecord r;
        r.event_id = "ev" + std::to_string(i / 8);
        r.partition_id = 1 + i % 5;
        r.slice_index = i % 8;
        r.slice_uid = make_slice_uid(r.partition_id, r.event_id, r.slice_index);
        r.label = kFlareClasses[static_cast<std::size_t>(i) % 5];
        r.superclass = to_superclass(r.label);
        r.feature_names = names;
        for (int k = 0; k < 144; ++k)
            r.features.push_back((oracle::uniform01(rng) - 0.5) * std::pow(10.0, k % 20 - 10));
        recs.push_back(std::move(r));
    }
    std::stringstream ss;
    write_features(ss, recs);
    EXPECT_EQ(read_features(ss, "mem"), recs);

    std::stringstream one;
    write_features(one, std::span<const FeatureRecord>(recs.data(), 1));
    std::string line;
    int lines = 0;
    while (std::getline(one, line))
        ++lines;
    EXPECT_EQ(lines, 2);

    std::stringstream none;
    write_features(none, std::span<const FeatureRecord>{});
    EXPECT_EQ(none.str(), "slice_uid,partition_id,event_id,slice_index,class,superclass\n");
    EXPECT_TRUE(read_features(none, "mem").empty());
}

TEST(Ingest, DuplicateSliceUidIsRejected)
{
    const std::string text = "slice_uid,partition_id,event_id,slice_index,class,superclass,a_last\n"
                             "1:e:0,1,e,0,X,XM,1.0\n"
                             "1:e:0,1,e,0,X,XM,2.0\n";
    std::istringstream is(text);
    EXPECT_THROW(read_features(is, "mem"), Error);
}

TEST(Ingest, TrialRows)
{
    std::vector<TrialResult> rs;
    int i = 0;
    for (const auto& [tr, te] : multifold_matrix(std::vector<int>{1, 2, 3, 4, 5}))
        for (int rep = 0; rep < 10; ++rep, ++i) {
            TrialResult r;
            r.spec.experiment = 'A';
            r.spec.train_partition = tr;
            r.spec.test_partition = te;
            r.spec.repeat = rep;
            r.spec.remedy = Remedy::resample(Strategy::US2);
            r.spec.seed = 0xffffffffffffffffULL - static_cast<std::uint64_t>(i);
            r.cm = {static_cast<std::uint64_t>(i % 7), 3, 90, 2};
            r.scores = Scores::of(r.cm);
            rs.push_back(r);
        }
    std::stringstream ss;
    write_trials(ss, rs);
    const auto back = read_trials(ss, "mem");
    ASSERT_EQ(back.size(), 200u);
    for (std::size_t k = 0; k < rs.size(); ++k) {
        EXPECT_EQ(format_trial_row(back[k]), format_trial_row(rs[k]));
        EXPECT_EQ(back[k].spec.seed, rs[k].spec.seed);
        EXPECT_EQ(back[k].scores.tss, rs[k].scores.tss);
    }

    std::stringstream empty;
    write_trials(empty, std::span<const TrialResult>{});
    EXPECT_EQ(empty.str(), std::string(kTrialHeader) + "\n");
}

TEST(Ingest, ManifestRoundTrip)
{
    const fs::path dir = fs::temp_directory_path() / "flarebench_manifest_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    DatasetManifest m;
    m.n_params = 3;
    m.steps_per_slice = 4;
    m.param_names = kParams;
    m.partitions[3] = "partition_3.csv";
    {
        std::ofstream os(dir / "partition_3.csv", std::ios::binary);
        write_slices(os, small_dataset(), kParams);
    }
    write_manifest(dir / "manifest.json", m);
    const auto back = read_manifest(dir / "manifest.json");
    EXPECT_EQ(back.param_names, kParams);
    EXPECT_EQ(back.partition_ids(), std::vector<int>{3});
    EXPECT_EQ(read_slices(back, 3), small_dataset());
    EXPECT_THROW(read_slices(back, 4), Error);

    fs::remove(dir / "partition_3.csv");
    EXPECT_THROW(read_manifest(dir / "manifest.json"), Error);
    fs::remove_all(dir);
}
