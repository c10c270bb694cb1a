#pragma once

#include "core_types.hpp"
#include "features.hpp"
#include "metrics.hpp"
#include "normalize.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "svm.hpp"
#include "trial.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

namespace flarebench {

/// Feature records of every partition, keyed by partition id.
using PartitionData = std::map<int, std::vector<FeatureRecord>>;

class LeakageError : public Error
{
public:
    explicit LeakageError(const std::string& what) : Error(ErrorKind::leakage, what) {}
};

/// All ordered (train, test) pairs with train != test.
inline std::vector<std::pair<int, int>> multifold_matrix(std::span<const int> partitions)
{
    if (partitions.size() < 2)
        throw config_error("multifold evaluation needs at least two partitions");
    std::vector<std::pair<int, int>> pairs;
    for (int a : partitions)
        for (int b : partitions)
            if (a != b)
                pairs.emplace_back(a, b);
    return pairs;
}

/// k disjoint folds stratified by flare class; returns record indices per
/// fold. Each class is shuffled and dealt round-robin, continuing from the
/// fold where the previous class stopped, so fold sizes differ by at most
/// one both per class and overall.
template <typename Record>
std::vector<std::vector<std::size_t>> unifold_folds(std::span<const Record> records, int k, std::uint64_t seed)
{
    if (k < 2)
        throw config_error("unifold_folds: k must be at least 2");
    const auto folds = static_cast<std::size_t>(k);
    std::array<std::vector<std::size_t>, 5> by_class;
    for (std::size_t i = 0; i < records.size(); ++i)
        by_class[static_cast<std::size_t>(label_of(records[i]))].push_back(i);
    for (FlareClass c : kFlareClasses) {
        const auto n = by_class[static_cast<std::size_t>(c)].size();
        if (n > 0 && n < folds)
            throw config_error("unifold_folds: class " + to_string(c) + " has " + std::to_string(n)
                               + " records, fewer than k=" + std::to_string(k) + "; use fewer folds");
    }

    std::vector<std::vector<std::size_t>> out(folds);
    std::size_t next = 0;
    for (FlareClass c : kFlareClasses) {
        auto idx = by_class[static_cast<std::size_t>(c)];
        Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i : idx) {
            out[next].push_back(i);
            next = (next + 1) % folds;
        }
    }
    for (auto& f : out)
        std::sort(f.begin(), f.end());
    return out;
}

inline void check_disjoint(std::span<const FeatureRecord> train, std::span<const FeatureRecord> test)
{
    std::unordered_set<std::string> ids;
    ids.reserve(train.size());
    for (const auto& r : train)
        ids.insert(r.slice_uid);
    for (const auto& r : test)
        if (ids.count(r.slice_uid))
            throw LeakageError("record " + r.slice_uid + " appears in both training and test sets");
}

enum class SetRole { training, testing };

/// Records tagged with the role they play in a trial.
struct LabeledSet
{
    SetRole role = SetRole::training;
    std::vector<FeatureRecord> records;
};

/// Resampling is only defined for training data.
inline LabeledSet resample(const LabeledSet& set, const SamplingPlan& plan, std::uint64_t seed)
{
    if (set.role == SetRole::testing)
        throw LeakageError("refusing to resample a test set (" + to_string(plan.strategy) + ")");
    LabeledSet out;
    out.role = SetRole::training;
    out.records = execute_plan<FeatureRecord>(set.records, plan, seed);
    return out;
}

struct Design
{
    Grid<double> x;
    std::vector<int> y;
};

inline Design to_design(std::span<const FeatureRecord> records)
{
    Design d;
    const std::size_t width = records.empty() ? 0 : records.front().features.size();
    d.x = Grid<double>(records.size(), width);
    d.y.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].features.size() != width)
            throw data_error("record " + records[i].slice_uid + " has a different feature width");
        std::copy(records[i].features.begin(), records[i].features.end(),
                  d.x.data().begin() + static_cast<std::ptrdiff_t>(i * width));
        d.y.push_back(binary_label(records[i].label));
    }
    return d;
}

enum class TrialStage { select, normalize, resample, weights, train, evaluate };

inline std::string to_string(TrialStage s)
{
    switch (s) {
    case TrialStage::select: return "select";
    case TrialStage::normalize: return "normalize";
    case TrialStage::resample: return "resample";
    case TrialStage::weights: return "weights";
    case TrialStage::train: return "train";
    case TrialStage::evaluate: return "evaluate";
    }
    return "?";
}

class TrialError : public Error
{
public:
    TrialError(TrialStage stage, ErrorKind kind, const std::string& what)
        : Error(kind, "stage " + to_string(stage) + ": " + what), stage_(stage)
    {
    }
    TrialStage stage() const noexcept { return stage_; }

private:
    TrialStage stage_;
};

/// Training and test sets of one trial, before normalization.
struct TrialSplit
{
    LabeledSet train{SetRole::training, {}};
    LabeledSet test{SetRole::testing, {}};
};

inline const std::vector<FeatureRecord>& partition_records(const PartitionData& data, int pid)
{
    const auto it = data.find(pid);
    if (it == data.end() || it->second.empty())
        throw data_error("no feature records for partition " + std::to_string(pid));
    return it->second;
}

inline TrialSplit split_for(const TrialSpec& spec, const PartitionData& data)
{
    TrialSplit split;
    if (spec.unifold()) {
        const auto& all = partition_records(data, spec.train_partition);
        const auto folds = unifold_folds<FeatureRecord>(all, spec.folds, spec.seed);
        if (spec.repeat < 0 || spec.repeat >= spec.folds)
            throw config_error("unifold fold index out of range");
        std::vector<bool> held(all.size(), false);
        for (std::size_t i : folds[static_cast<std::size_t>(spec.repeat)])
            held[i] = true;
        for (std::size_t i = 0; i < all.size(); ++i)
            (held[i] ? split.test : split.train).records.push_back(all[i]);
    } else {
        split.train.records = partition_records(data, spec.train_partition);
        split.test.records = partition_records(data, spec.test_partition);
    }
    split.train.records = select_features(split.train.records, spec.feature_set);
    split.test.records = select_features(split.test.records, spec.feature_set);
    return split;
}

// Extrema come from whole partitions, never from resampled data.
inline std::pair<NormalizationStats, NormalizationStats> fit_for(const TrialSpec& spec, const PartitionData& data)
{
    const auto projected = [&](int pid) { return select_features(partition_records(data, pid), spec.feature_set); };
    switch (spec.normalization) {
    case NormPolicy::local: {
        const auto tr = projected(spec.train_partition);
        NormalizationStats a = fit_extrema(tr, NormScope::local);
        if (spec.unifold())
            return {a, a};
        const auto te = projected(spec.test_partition);
        return {a, fit_extrema(te, NormScope::local)};
    }
    case NormPolicy::global_pair: {
        std::vector<std::vector<FeatureRecord>> sets;
        sets.push_back(projected(spec.train_partition));
        if (!spec.unifold())
            sets.push_back(projected(spec.test_partition));
        std::vector<std::span<const FeatureRecord>> views(sets.begin(), sets.end());
        NormalizationStats st = fit_extrema(views, NormScope::global);
        return {st, st};
    }
    case NormPolicy::global_all: {
        std::vector<std::vector<FeatureRecord>> sets;
        for (const auto& [pid, recs] : data)
            sets.push_back(select_features(recs, spec.feature_set));
        std::vector<std::span<const FeatureRecord>> views(sets.begin(), sets.end());
        NormalizationStats st = fit_extrema(views, NormScope::global);
        return {st, st};
    }
    }
    throw config_error("unknown normalization policy");
}

/// normalize -> resample training only -> weights -> train -> evaluate on
/// the untouched test set. Any failure is rethrown as TrialError naming
/// the stage.
inline TrialResult run_trial(const TrialSpec& spec, const PartitionData& data, const SvmConfig& base)
{
    const auto started = std::chrono::steady_clock::now();
    TrialStage stage = TrialStage::select;
    try {
        TrialSplit split = split_for(spec, data);
        check_disjoint(split.train.records, split.test.records);
        const std::size_t test_size = split.test.records.size();

        stage = TrialStage::normalize;
        const auto [train_stats, test_stats] = fit_for(spec, data);
        apply_in_place(split.train.records, train_stats);
        apply_in_place(split.test.records, test_stats);

        stage = TrialStage::resample;
        if (spec.remedy.sampling != Strategy::NONE) {
            const SamplingPlan plan = make_plan(count_classes(split.train.records), spec.remedy.sampling);
            split.train = resample(split.train, plan, derive_seed(spec.seed, {0x73616d70ULL}));
        }
        check_disjoint(split.train.records, split.test.records);

        stage = TrialStage::weights;
        SvmConfig cfg = base;
        cfg.class_weights = spec.remedy.weights ? compute_weights(count_classes(split.train.records), *spec.remedy.weights)
                                                : ClassWeights::unit();

        stage = TrialStage::train;
        const Design train = to_design(split.train.records);
        const SvmModel model = flarebench::train(train.x, train.y, cfg);

        stage = TrialStage::evaluate;
        const Design test = to_design(split.test.records);
        std::vector<int> predicted(test.y.size());
        for (std::size_t i = 0; i < test.y.size(); ++i)
            predicted[i] = model.predict(std::span<const double>(test.x.data().data() + i * test.x.cols(), test.x.cols()));

        TrialResult r;
        r.spec = spec;
        r.cm = confusion(predicted, test.y);
        if (r.cm.total() != test_size)
            throw LeakageError("test confusion total differs from the test set size");
        r.scores = Scores::of(r.cm);
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return r;
    } catch (const TrialError&) {
        throw;
    } catch (const Error& e) {
        throw TrialError(stage, e.kind(), e.what());
    } catch (const std::exception& e) {
        throw TrialError(stage, ErrorKind::trial, e.what());
    }
}

struct TrialFailure
{
    TrialSpec spec;
    std::string stage;
    std::string message;
    ErrorKind kind = ErrorKind::trial;
};

struct TrialBatch
{
    std::vector<TrialResult> results;  // in spec order, failures omitted
    std::vector<TrialFailure> failures;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const TrialSpec&)>;

/// Runs independent trials on `jobs` workers; output order follows `specs`
/// regardless of scheduling.
inline TrialBatch run_trials(std::span<const TrialSpec> specs, const PartitionData& data, const SvmConfig& base,
                             int jobs = 1, const ProgressFn& progress = {})
{
    std::vector<std::optional<TrialResult>> slots(specs.size());
    std::vector<std::optional<TrialFailure>> failed(specs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    const auto worker = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            try {
                slots[i] = run_trial(specs[i], data, base);
            } catch (const TrialError& e) {
                failed[i] = TrialFailure{specs[i], to_string(e.stage()), e.what(), e.kind()};
            }
            const std::size_t d = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(d, specs.size(), specs[i]);
            }
        }
    };

    const int n = std::max(1, jobs);
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n; ++t)
            pool.emplace_back(worker);
    }

    TrialBatch batch;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (slots[i])
            batch.results.push_back(std::move(*slots[i]));
        if (failed[i])
            batch.failures.push_back(std::move(*failed[i]));
    }
    return batch;
}

/// Identifies which arm of an experiment a trial belongs to.
inline std::string series_label(const TrialSpec& s)
{
    return std::string(s.unifold() ? "unifold" : "multifold") + ":" + s.remedy.name() + ":"
        + to_string(s.normalization) + ":" + s.feature_set.name();
}

struct AggregateRow
{
    char experiment = 'Z';
    std::string series;
    int train_partition = 0;
    int test_partition = 0;
    MeanVar tss;
};

/// Mean and sample variance of TSS over repeats (or folds), per
/// (experiment, series, train, test); rows sorted by that key.
inline std::vector<AggregateRow> aggregate(std::span<const TrialResult> results)
{
    using Key = std::tuple<char, std::string, int, int>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : results)
        groups[{r.spec.experiment, series_label(r.spec), r.spec.train_partition, r.spec.test_partition}].push_back(
            r.scores.tss);
    std::vector<AggregateRow> rows;
    for (const auto& [key, values] : groups) {
        AggregateRow row;
        std::tie(row.experiment, row.series, row.train_partition, row.test_partition) = key;
        row.tss = mean_and_variance(values);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace flarebench
