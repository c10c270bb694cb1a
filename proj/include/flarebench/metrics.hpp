#pragma once

#include "core_types.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flarebench {

/// Binary confusion counts; positive is the XM superclass.
struct ConfusionMatrix
{
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

    ConfusionMatrix scaled(std::uint64_t m) const noexcept { return {tp * m, fp * m, tn * m, fn * m}; }

    bool operator==(const ConfusionMatrix&) const = default;
};

class MetricError : public Error
{
public:
    explicit MetricError(const std::string& measure, const std::string& why)
        : Error(ErrorKind::trial, measure + " undefined: " + why), measure_(measure)
    {
    }
    const std::string& measure() const noexcept { return measure_; }

private:
    std::string measure_;
};

// Labels are +1 (XM) / -1 (CBN).
inline ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth)
{
    if (predicted.size() != truth.size())
        throw Error(ErrorKind::trial, "confusion: " + std::to_string(predicted.size()) + " predictions for "
                                          + std::to_string(truth.size()) + " truths");
    if (predicted.empty())
        throw Error(ErrorKind::trial, "confusion: no samples");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] > 0;
        const bool t = truth[i] > 0;
        if (p && t)
            ++cm.tp;
        else if (p)
            ++cm.fp;
        else if (t)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

namespace detail {

inline double ratio(std::uint64_t num, std::uint64_t den, const char* measure, const char* why)
{
    if (den == 0)
        throw MetricError(measure, why);
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace detail

inline double recall(const ConfusionMatrix& cm)
{
    return detail::ratio(cm.tp, cm.tp + cm.fn, "recall", "no positive samples");
}

inline double precision(const ConfusionMatrix& cm)
{
    return detail::ratio(cm.tp, cm.tp + cm.fp, "precision", "no positive predictions");
}

inline double accuracy(const ConfusionMatrix& cm)
{
    return detail::ratio(cm.tp + cm.tn, cm.total(), "accuracy", "empty confusion matrix");
}

/// True skill statistic: recall minus false-alarm rate.
inline double tss(const ConfusionMatrix& cm)
{
    if (cm.tp + cm.fn == 0)
        throw MetricError("TSS", "no positive samples");
    if (cm.fp + cm.tn == 0)
        throw MetricError("TSS", "no negative samples");
    return recall(cm) - static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tn);
}

/// Heidke skill score.
inline double hss(const ConfusionMatrix& cm)
{
    const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
    const double tn = static_cast<double>(cm.tn), fn = static_cast<double>(cm.fn);
    const double den = (tp + fn) * (fn + tn) + (tp + fp) * (fp + tn);
    if (den == 0)
        throw MetricError("HSS", "zero denominator");
    return 2.0 * (tp * tn - fn * fp) / den;
}

inline double f1(const ConfusionMatrix& cm)
{
    const std::uint64_t den = 2 * cm.tp + cm.fp + cm.fn;
    return detail::ratio(2 * cm.tp, den, "f1", "no positive samples or predictions");
}

/// All scores of one matrix; a measure whose denominator vanishes is NaN.
struct Scores
{
    double tss = 0, hss = 0, accuracy = 0, precision = 0, recall = 0, f1 = 0;

    static Scores of(const ConfusionMatrix& cm)
    {
        const auto guarded = [&](double (*fn)(const ConfusionMatrix&)) {
            try {
                return fn(cm);
            } catch (const MetricError&) {
                return std::nan("");
            }
        };
        return {guarded(flarebench::tss), guarded(flarebench::hss), guarded(flarebench::accuracy),
                guarded(flarebench::precision), guarded(flarebench::recall), guarded(flarebench::f1)};
    }
};

struct MeanVar
{
    double mean = 0;
    double variance = 0; // sample variance, 0 for a single value
    std::size_t n = 0;
};

// Welford's update; a constant input gives exactly zero variance.
inline MeanVar mean_and_variance(std::span<const double> xs)
{
    MeanVar mv;
    double m2 = 0;
    for (double x : xs) {
        ++mv.n;
        const double delta = x - mv.mean;
        mv.mean += delta / static_cast<double>(mv.n);
        m2 += delta * (x - mv.mean);
    }
    if (mv.n > 1)
        mv.variance = m2 / static_cast<double>(mv.n - 1);
    return mv;
}

} // namespace flarebench
