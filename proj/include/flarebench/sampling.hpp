#pragma once

#include "core_types.hpp"
#include "rng.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flarebench {

enum class Strategy : std::uint8_t { NONE, US1, US2, US3, OS1, OS2, OS3, OS4 };

inline constexpr std::array<Strategy, 7> kResamplingStrategies = {
    Strategy::US1, Strategy::US2, Strategy::US3, Strategy::OS1, Strategy::OS2, Strategy::OS3, Strategy::OS4};

inline std::string to_string(Strategy s)
{
    switch (s) {
    case Strategy::NONE: return "NONE";
    case Strategy::US1: return "US1";
    case Strategy::US2: return "US2";
    case Strategy::US3: return "US3";
    case Strategy::OS1: return "OS1";
    case Strategy::OS2: return "OS2";
    case Strategy::OS3: return "OS3";
    case Strategy::OS4: return "OS4";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view s)
{
    for (Strategy st : {Strategy::NONE, Strategy::US1, Strategy::US2, Strategy::US3, Strategy::OS1,
                        Strategy::OS2, Strategy::OS3, Strategy::OS4})
        if (s == to_string(st))
            return st;
    if (s == "none")
        return Strategy::NONE;
    throw config_error("unknown sampling strategy '" + std::string(s) + "'");
}

// What a plan is allowed to do to each class.
enum class SampleAction : std::uint8_t { keep, under, over };

struct SamplingPlan
{
    Strategy strategy = Strategy::NONE;
    ClassCounts source;
    ClassCounts targets;
    std::array<SampleAction, 5> actions{}; // indexed by FlareClass value
    std::string base_note;

    SampleAction action(FlareClass c) const { return actions[static_cast<std::size_t>(c)]; }
};

namespace detail {

inline void set_action(SamplingPlan& p, FlareClass c, SampleAction a)
{
    p.actions[static_cast<std::size_t>(c)] = a;
}

// Splits `total` evenly; the first classes listed absorb the remainder.
inline void split_evenly(ClassCounts& t, std::size_t total, std::initializer_list<FlareClass> order)
{
    const std::size_t k = order.size();
    std::size_t i = 0;
    for (FlareClass c : order) {
        t[c] = total / k + (i < total % k ? 1 : 0);
        ++i;
    }
}

// Scales `classes` so they sum to exactly `total` while preserving their
// proportions: floor of the exact share, then one extra unit to the largest
// remainders (ties resolved by the listed order).
inline void scale_largest_remainder(ClassCounts& t, const ClassCounts& src, std::size_t total,
                                    std::initializer_list<FlareClass> order)
{
    std::size_t sum = 0;
    for (FlareClass c : order)
        sum += src[c];
    struct Share
    {
        FlareClass c;
        std::uint64_t rem;
        std::size_t rank;
    };
    std::vector<Share> shares;
    std::size_t assigned = 0;
    std::size_t rank = 0;
    for (FlareClass c : order) {
        const auto num = static_cast<unsigned __int128>(src[c]) * total;
        t[c] = static_cast<std::size_t>(num / sum);
        shares.push_back({c, static_cast<std::uint64_t>(num % sum), rank++});
        assigned += t[c];
    }
    std::stable_sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
        return a.rem != b.rem ? a.rem > b.rem : a.rank < b.rank;
    });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned)
        ++t[shares[i].c];
}

} // namespace detail

/// Target counts for one of the seven strategies; the two superclasses
/// always come out equal in size.
inline SamplingPlan make_plan(const ClassCounts& counts, Strategy strategy)
{
    using enum FlareClass;
    using detail::set_action;
    SamplingPlan p;
    p.strategy = strategy;
    p.source = counts;
    p.targets = counts;

    const std::size_t xm = counts.superclass(SuperClass::XM);
    const std::size_t cbn = counts.superclass(SuperClass::CBN);
    const auto require = [&](bool ok, const std::string& what) {
        if (!ok)
            throw config_error(to_string(strategy) + " infeasible: " + what);
    };

    switch (strategy) {
    case Strategy::NONE:
        p.base_note = "no resampling";
        break;
    case Strategy::US1:
        require(xm > 0 && cbn > 0, "both superclasses must be non-empty");
        p.base_note = "XM unchanged; CBN scaled with original proportions";
        detail::scale_largest_remainder(p.targets, counts, xm, {C, B, N});
        for (FlareClass c : {C, B, N})
            set_action(p, c, SampleAction::under);
        break;
    case Strategy::US2:
        require(counts[X] > 0, "base class X is empty");
        p.base_note = "base X";
        p.targets[M] = counts[X];
        detail::split_evenly(p.targets, 2 * counts[X], {C, B, N});
        for (FlareClass c : {M, C, B, N})
            set_action(p, c, SampleAction::under);
        break;
    case Strategy::US3:
        require(counts[M] > 0, "base class M is empty");
        p.base_note = "base M";
        p.targets[X] = counts[M];
        detail::split_evenly(p.targets, 2 * counts[M], {C, B, N});
        set_action(p, X, SampleAction::over);
        for (FlareClass c : {C, B, N})
            set_action(p, c, SampleAction::under);
        break;
    case Strategy::OS1:
        require(xm > 0 && cbn > 0, "both superclasses must be non-empty");
        p.base_note = "CBN unchanged; XM scaled with original proportions";
        detail::scale_largest_remainder(p.targets, counts, cbn, {X, M});
        set_action(p, X, SampleAction::over);
        set_action(p, M, SampleAction::over);
        break;
    case Strategy::OS2: {
        require(counts[C] > 0, "base class C is empty");
        require(xm > 0, "XM is empty");
        require(2 * counts[C] >= counts[B], "3|C| - (|C| + |B|) is negative");
        p.base_note = "C and B unchanged; N shrunk to 3|C| - (|C| + |B|)";
        p.targets[N] = 2 * counts[C] - counts[B];
        detail::scale_largest_remainder(p.targets, counts, 3 * counts[C], {X, M});
        set_action(p, N, SampleAction::under);
        set_action(p, X, SampleAction::over);
        set_action(p, M, SampleAction::over);
        break;
    }
    case Strategy::OS3:
        require(counts[C] > 0, "base class C is empty");
        p.base_note = "base C";
        p.targets[B] = counts[C];
        p.targets[N] = counts[C];
        detail::split_evenly(p.targets, 3 * counts[C], {X, M});
        set_action(p, B, SampleAction::under);
        set_action(p, N, SampleAction::under);
        set_action(p, X, SampleAction::over);
        set_action(p, M, SampleAction::over);
        break;
    case Strategy::OS4:
        require(counts[N] > 0, "base class N is empty");
        p.base_note = "base N";
        p.targets[C] = counts[N];
        p.targets[B] = counts[N];
        detail::split_evenly(p.targets, 3 * counts[N], {X, M});
        for (FlareClass c : {X, M, C, B})
            set_action(p, c, SampleAction::over);
        break;
    }

    for (FlareClass c : kFlareClasses) {
        const SampleAction a = p.action(c);
        if (a == SampleAction::under)
            require(p.targets[c] <= counts[c], "class " + to_string(c) + " would need " + std::to_string(p.targets[c])
                                                   + " records but only " + std::to_string(counts[c]) + " exist");
        if (a == SampleAction::over) {
            require(p.targets[c] >= counts[c], "class " + to_string(c) + " target is below its current size");
            require(p.targets[c] == 0 || counts[c] > 0, "cannot oversample empty class " + to_string(c));
        }
    }
    return p;
}

/// Applies `plan`: random subsets without replacement for undersampled
/// classes, originals plus replicas drawn with replacement for oversampled
/// ones. Output is grouped by class (X first), input order within a class.
template <typename Record>
std::vector<Record> execute_plan(std::span<const Record> records, const SamplingPlan& plan, std::uint64_t seed)
{
    std::array<std::vector<std::size_t>, 5> by_class;
    for (std::size_t i = 0; i < records.size(); ++i)
        by_class[static_cast<std::size_t>(label_of(records[i]))].push_back(i);

    std::vector<Record> out;
    out.reserve(plan.targets.total());
    for (FlareClass c : kFlareClasses) {
        const auto& idx = by_class[static_cast<std::size_t>(c)];
        const std::size_t target = plan.targets[c];
        const SampleAction action = plan.action(c);
        Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));

        if (action == SampleAction::keep && target != idx.size())
            throw Error(ErrorKind::trial, "execute_plan: class " + to_string(c) + " must be kept but plan targets "
                                              + std::to_string(target) + " of " + std::to_string(idx.size()));
        if (action == SampleAction::under && target > idx.size())
            throw Error(ErrorKind::trial, "execute_plan: cannot undersample class " + to_string(c) + " to "
                                              + std::to_string(target) + " from " + std::to_string(idx.size()));
        if (action == SampleAction::over && target < idx.size())
            throw Error(ErrorKind::trial, "execute_plan: cannot oversample class " + to_string(c) + " to "
                                              + std::to_string(target) + " from " + std::to_string(idx.size()));

        if (target <= idx.size()) {
            std::vector<std::size_t> chosen;
            chosen.reserve(target);
            std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), target, rng);
            for (std::size_t i : chosen)
                out.push_back(records[i]);
        } else {
            for (std::size_t i : idx)
                out.push_back(records[i]);
            std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
            for (std::size_t k = idx.size(); k < target; ++k)
                out.push_back(records[idx[pick(rng)]]);
        }
    }
    return out;
}

enum class WeightMode { balanced, ratio };

inline std::string to_string(WeightMode m) { return m == WeightMode::balanced ? "balanced" : "ratio"; }

inline WeightMode parse_weight_mode(std::string_view s)
{
    if (s == "balanced")
        return WeightMode::balanced;
    if (s == "ratio")
        return WeightMode::ratio;
    throw config_error("unknown weight mode '" + std::string(s) + "'");
}

struct ClassWeights
{
    double xm = 1.0;
    double cbn = 1.0;
    WeightMode mode = WeightMode::balanced;

    double of(SuperClass s) const noexcept { return s == SuperClass::XM ? xm : cbn; }
    double of_label(int y) const noexcept { return y > 0 ? xm : cbn; }

    static ClassWeights unit() { return {}; }
};

// balanced: w_j = n / (k * n_j) with k = 2 superclasses.
// ratio:    w_XM = |CBN| / |XM|, w_CBN = 1.
inline ClassWeights compute_weights(const ClassCounts& counts, WeightMode mode)
{
    const double xm = static_cast<double>(counts.superclass(SuperClass::XM));
    const double cbn = static_cast<double>(counts.superclass(SuperClass::CBN));
    if (xm == 0 || cbn == 0)
        throw Error(ErrorKind::trial, "compute_weights: both superclasses must be non-empty");
    ClassWeights w;
    w.mode = mode;
    if (mode == WeightMode::balanced) {
        const double n = xm + cbn;
        w.xm = n / (2.0 * xm);
        w.cbn = n / (2.0 * cbn);
    } else {
        w.xm = cbn / xm;
        w.cbn = 1.0;
    }
    return w;
}

} // namespace flarebench
