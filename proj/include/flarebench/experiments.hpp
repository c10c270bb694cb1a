#pragma once

#include "cv_harness.hpp"
#include "rng.hpp"
#include "trial.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flarebench {

inline constexpr std::string_view kExperimentIds = "ZABCDEFG";

struct RunOptions
{
    std::uint64_t master_seed = 7;
    std::optional<Remedy> remedy;
    std::optional<NormPolicy> normalization;
    std::optional<FeatureSet> features;
    std::optional<int> repeats; // stochastic remedies only; default 10
    int folds = 10;
};

namespace detail {

// Seeds depend on (train, test, repeat) only, so arms of a comparison share
// the same random subsets.
inline std::uint64_t trial_seed(std::uint64_t master, int train, int test, int repeat)
{
    return derive_seed(master, {static_cast<std::uint64_t>(train), static_cast<std::uint64_t>(test),
                                static_cast<std::uint64_t>(repeat)});
}

struct Arm
{
    Remedy remedy;
    NormPolicy normalization = NormPolicy::global_pair;
    FeatureSet features = FeatureSet::last();
};

} // namespace detail

inline void validate_experiment_id(char id)
{
    if (kExperimentIds.find(id) == std::string_view::npos)
        throw config_error(std::string("unknown experiment '") + id + "' (expected one of Z A B C D E F G)");
}

/// Trial specs for one experiment over `partitions`.
inline std::vector<TrialSpec> build_experiment(char id, std::span<const int> partitions, const RunOptions& opt)
{
    using detail::Arm;
    validate_experiment_id(id);

    // Which dimension the experiment compares; overrides never touch it.
    enum class Varies { nothing, normalization, remedy, features };
    std::vector<Arm> arms;
    Varies varies = Varies::nothing;
    bool with_unifold = false;
    const Remedy weights = Remedy::weighted(WeightMode::ratio);
    switch (id) {
    case 'Z': arms = {{Remedy::none()}}; break;
    case 'A': arms = {{Remedy::resample(Strategy::US2)}}; break;
    case 'B': arms = {{Remedy::resample(Strategy::OS3)}}; break;
    case 'C': arms = {{weights}}; break;
    case 'D':
        arms = {{weights}};
        with_unifold = true;
        break;
    case 'E':
        arms = {{Remedy::none(), NormPolicy::global_pair}, {Remedy::none(), NormPolicy::local}};
        varies = Varies::normalization;
        break;
    case 'F':
        arms = {{Remedy::resample(Strategy::OS1)}, {Remedy::resample(Strategy::OS3)}};
        varies = Varies::remedy;
        break;
    case 'G':
        arms = {{Remedy::resample(Strategy::US2), NormPolicy::global_pair, FeatureSet::last()},
                {Remedy::resample(Strategy::US2), NormPolicy::global_pair, FeatureSet::std_only()},
                {Remedy::resample(Strategy::US2), NormPolicy::global_pair, FeatureSet::four()}};
        varies = Varies::features;
        break;
    }
    for (Arm& a : arms) {
        if (opt.remedy && varies != Varies::remedy)
            a.remedy = *opt.remedy;
        if (opt.normalization && varies != Varies::normalization)
            a.normalization = *opt.normalization;
        if (opt.features && varies != Varies::features)
            a.features = *opt.features;
    }

    const int stochastic_repeats = opt.repeats.value_or(10);
    std::vector<TrialSpec> specs;
    const auto make = [&](const Arm& arm, int train, int test, int repeat, std::uint64_t seed) {
        TrialSpec s;
        s.experiment = id;
        s.train_partition = train;
        s.test_partition = test;
        s.repeat = repeat;
        s.remedy = arm.remedy;
        s.normalization = arm.normalization;
        s.feature_set = arm.features;
        s.seed = seed;
        s.folds = opt.folds;
        return s;
    };

    if (with_unifold)
        for (const Arm& arm : arms)
            for (int p : partitions)
                for (int fold = 0; fold < opt.folds; ++fold)
                    specs.push_back(make(arm, p, p, fold, detail::trial_seed(opt.master_seed, p, p, 0)));

    for (const Arm& arm : arms) {
        const int repeats = arm.remedy.stochastic() ? stochastic_repeats : 1;
        for (const auto& [train, test] : multifold_matrix(partitions))
            for (int r = 0; r < repeats; ++r)
                specs.push_back(make(arm, train, test, r, detail::trial_seed(opt.master_seed, train, test, r)));
    }
    return specs;
}

inline std::vector<char> parse_experiment_list(std::string_view text)
{
    std::vector<char> ids;
    for (char c : text) {
        if (c == ',' || c == ' ')
            continue;
        validate_experiment_id(c);
        if (std::find(ids.begin(), ids.end(), c) == ids.end())
            ids.push_back(c);
    }
    if (ids.empty())
        throw config_error("no experiments selected");
    return ids;
}

} // namespace flarebench
