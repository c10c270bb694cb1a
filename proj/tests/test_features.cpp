#include <flarebench/features.hpp>
#include <oracle/oracles.hpp>

#include <gtest/gtest.h>

using namespace flarebench;

namespace {

const std::vector<double> kOneToFive = {1, 2, 3, 4, 5};

std::vector<std::uint8_t> mask(std::initializer_list<int> bits)
{
    return std::vector<std::uint8_t>(bits.begin(), bits.end());
}

MVTSSlice make_slice(std::size_t steps, std::size_t params, double base)
{
    MVTSSlice s;
    s.event_id = "e1";
    s.partition_id = 2;
    s.slice_index = 3;
    s.label = FlareClass::M;
    s.values = Grid<double>(steps, params);
    s.missing = Grid<std::uint8_t>(steps, params, 0);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t p = 0; p < params; ++p)
            s.values(t, p) = base + static_cast<double>(t * (p + 1));
    return s;
}

} // namespace

TEST(Features, StatsOfOneToFive)
{
    EXPECT_EQ(compute_stat(kOneToFive, StatKind::mean), 3.0);
    EXPECT_EQ(compute_stat(kOneToFive, StatKind::median), 3.0);
    EXPECT_EQ(compute_stat(kOneToFive, StatKind::last_value), 5.0);
    EXPECT_NEAR(compute_stat(kOneToFive, StatKind::skewness), 0.0, 1e-12);
    EXPECT_NEAR(compute_stat(kOneToFive, StatKind::stddev), 1.5811388300841898, 1e-12);
    EXPECT_NEAR(compute_stat(kOneToFive, StatKind::kurtosis), -1.3, 1e-12);
}

TEST(Features, EvenLengthMedian)
{
    const std::vector<double> v = {4, 1, 3, 2};
    EXPECT_EQ(compute_stat(v, StatKind::median), 2.5);
}

TEST(Features, ConstantSeries)
{
    const std::vector<double> c(17, 0.1);
    EXPECT_EQ(compute_stat(c, StatKind::mean), 0.1);
    EXPECT_EQ(compute_stat(c, StatKind::median), 0.1);
    EXPECT_EQ(compute_stat(c, StatKind::stddev), 0.0);
    EXPECT_EQ(compute_stat(c, StatKind::skewness), 0.0);
    EXPECT_EQ(compute_stat(c, StatKind::kurtosis), 0.0);
}

TEST(Features, EmptySeriesIsAnError) { EXPECT_THROW(compute_stat({}, StatKind::mean), Error); }

TEST(Features, AgreesWithTwoPassReference)
{
    Rng rng = make_rng(7);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = oracle::uniform_int(rng, 2, 80);
        const double shift = 20 * oracle::uniform01(rng) - 10;
        std::vector<double> xs(n);
        for (double& x : xs)
            x = shift + oracle::uniform01(rng) * oracle::uniform01(rng) * 4;
        const auto ref = oracle::two_pass_moments(xs);
        EXPECT_NEAR(compute_stat(xs, StatKind::mean), ref.mean, 1e-12);
        EXPECT_NEAR(compute_stat(xs, StatKind::stddev), ref.stddev, 1e-12);
        EXPECT_NEAR(compute_stat(xs, StatKind::skewness), ref.skewness, 1e-9);
        EXPECT_NEAR(compute_stat(xs, StatKind::kurtosis), ref.kurtosis, 1e-9);
    }
}

TEST(Features, SkewnessIsOdd)
{
    Rng rng = make_rng(8);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> xs(30), neg(30);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double u = oracle::uniform01(rng);
            xs[i] = u * u * u;
            neg[i] = -xs[i];
        }
        EXPECT_NEAR(compute_stat(neg, StatKind::skewness), -compute_stat(xs, StatKind::skewness), 1e-12);
    }
}

TEST(Features, Interpolation)
{
    const std::vector<double> a = {1, 0, 3};
    EXPECT_EQ(interpolate_missing(a, mask({0, 1, 0})), (std::vector<double>{1, 2, 3}));
    const std::vector<double> b = {0, 2, 4};
    EXPECT_EQ(interpolate_missing(b, mask({1, 0, 0})), (std::vector<double>{2, 2, 4}));
    const std::vector<double> c = {1, 0, 0, 4};
    EXPECT_EQ(interpolate_missing(c, mask({0, 1, 1, 0})), (std::vector<double>{1, 2, 3, 4}));
    const std::vector<double> d = {5, 6, 0};
    EXPECT_EQ(interpolate_missing(d, mask({0, 0, 1})), (std::vector<double>{5, 6, 6}));
    EXPECT_THROW(interpolate_missing(d, mask({1, 1, 1})), Error);
}

TEST(Features, ExtractionShapeAndOrder)
{
    const std::vector<MVTSSlice> slices = {make_slice(10, 24, 0.0)};
    std::vector<std::string> names;
    for (int i = 0; i < 24; ++i)
        names.push_back("q" + std::to_string(i));
    const auto params = ParamSelection::all_of(names);

    const auto all = extract_features(slices, FeatureSet::all(), params);
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0].features.size(), 144u);
    EXPECT_EQ(all[0].slice_uid, "2:e1:3");
    EXPECT_EQ(all[0].superclass, SuperClass::XM);
    EXPECT_EQ((*all[0].feature_names)[0], "q0_mean");
    EXPECT_EQ((*all[0].feature_names)[5], "q0_last");
    EXPECT_EQ((*all[0].feature_names)[6], "q1_mean");
    EXPECT_EQ(all[0].features[5], 9.0);  // last value of q0 = 9 * 1
    EXPECT_EQ(all[0].features[11], 18.0); // last value of q1 = 9 * 2

    const auto last = extract_features(slices, FeatureSet::last(), params);
    EXPECT_EQ(last[0].features.size(), 24u);

    // Projecting ALL onto LAST gives the directly extracted LAST columns.
    const auto projected = select_features(all, FeatureSet::last());
    EXPECT_EQ(projected[0].features, last[0].features);
    EXPECT_EQ(*projected[0].feature_names, *last[0].feature_names);
    EXPECT_THROW(select_features(last, FeatureSet::std_only()), Error);

    auto unnamed = last;
    unnamed[0].feature_names.reset();
    EXPECT_THROW(select_features(unnamed, FeatureSet::last()), Error);
}

TEST(Features, ConstantSliceHasZeroSpread)
{
    MVTSSlice s = make_slice(8, 2, 0.0);
    for (double& v : s.values.data())
        v = 3.5;
    const std::vector<MVTSSlice> one = {s};
    const auto r = extract_features(one, FeatureSet::four(), ParamSelection::all_of({"a", "b"}));
    // FOUR = stddev, skewness, kurtosis, median per parameter
    EXPECT_EQ(r[0].features, (std::vector<double>{0, 0, 0, 3.5, 0, 0, 0, 3.5}));
}

TEST(Features, MissingCellsAreRepairedBeforeStatistics)
{
    MVTSSlice s = make_slice(5, 1, 0.0); // 0,1,2,3,4
    s.missing(4, 0) = 1;
    s.values(4, 0) = 1e9;
    const std::vector<MVTSSlice> one = {s};
    const auto r = extract_features(one, FeatureSet::last(), ParamSelection::all_of({"a"}));
    EXPECT_EQ(r[0].features[0], 3.0);

    for (std::size_t t = 0; t < 5; ++t)
        s.missing(t, 0) = 1;
    const std::vector<MVTSSlice> bad = {s};
    try {
        (void)extract_features(bad, FeatureSet::last(), ParamSelection::all_of({"a"}));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("2:e1:3"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("parameter a"), std::string::npos);
    }
}

TEST(Features, SetParsing)
{
    EXPECT_EQ(FeatureSet::parse("FOUR").size(), 4u);
    EXPECT_EQ(FeatureSet::parse("ALL").size(), 6u);
    EXPECT_EQ(FeatureSet::parse("STD").kinds(), (std::vector<StatKind>{StatKind::stddev}));
    EXPECT_THROW(FeatureSet::parse("FIVE"), Error);
}
