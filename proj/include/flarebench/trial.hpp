#pragma once

#include "features.hpp"
#include "metrics.hpp"
#include "normalize.hpp"
#include "sampling.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace flarebench {

/// Class-imbalance treatment applied to the training side of a trial.
struct Remedy
{
    Strategy sampling = Strategy::NONE;
    std::optional<WeightMode> weights;

    static Remedy none() { return {}; }
    static Remedy resample(Strategy s) { return {s, std::nullopt}; }
    static Remedy weighted(WeightMode m) { return {Strategy::NONE, m}; }

    bool stochastic() const noexcept { return sampling != Strategy::NONE; }

    std::string name() const
    {
        std::string s;
        if (sampling != Strategy::NONE)
            s = to_string(sampling);
        if (weights) {
            if (!s.empty())
                s += '+';
            s += "weights-" + to_string(*weights);
        }
        return s.empty() ? "none" : s;
    }

    static Remedy parse(std::string_view text)
    {
        Remedy r;
        if (text == "none")
            return r;
        std::string_view rest = text;
        const auto plus = rest.find('+');
        std::string_view head = rest.substr(0, plus);
        if (head.rfind("weights", 0) != 0) {
            r.sampling = parse_strategy(head);
            if (plus == std::string_view::npos)
                return r;
            rest.remove_prefix(plus + 1);
        }
        if (rest == "weights" || rest == "weights-ratio")
            r.weights = WeightMode::ratio;
        else if (rest == "weights-balanced")
            r.weights = WeightMode::balanced;
        else
            throw config_error("unknown remedy '" + std::string(text) + "'");
        return r;
    }

    bool operator==(const Remedy&) const = default;
};

/// How zero-one extrema are fitted for a trial.
enum class NormPolicy { global_pair, global_all, local };

inline std::string to_string(NormPolicy p)
{
    switch (p) {
    case NormPolicy::global_pair: return "global";
    case NormPolicy::global_all: return "global-all";
    case NormPolicy::local: return "local";
    }
    return "?";
}

inline NormPolicy parse_norm_policy(std::string_view s)
{
    if (s == "global")
        return NormPolicy::global_pair;
    if (s == "global-all")
        return NormPolicy::global_all;
    if (s == "local")
        return NormPolicy::local;
    throw config_error("unknown normalization '" + std::string(s) + "' (expected global, global-all or local)");
}

struct TrialSpec
{
    char experiment = 'Z';
    int train_partition = 1;
    int test_partition = 2;
    // Multifold: repetition index. Unifold (train == test): held-out fold index.
    int repeat = 0;
    Remedy remedy;
    NormPolicy normalization = NormPolicy::global_pair;
    FeatureSet feature_set = FeatureSet::last();
    std::uint64_t seed = 0;
    int folds = 10; // unifold only

    bool unifold() const noexcept { return train_partition == test_partition; }
};

struct TrialResult
{
    TrialSpec spec;
    ConfusionMatrix cm;
    Scores scores;
    double wall_seconds = 0; // not persisted
};

} // namespace flarebench
