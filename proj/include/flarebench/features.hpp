#pragma once

#include "core_types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flarebench {

// Declaration order is the canonical order inside a feature vector.
enum class StatKind : std::uint8_t { mean, stddev, skewness, kurtosis, median, last_value };

inline constexpr std::array<StatKind, 6> kStatKinds = {
    StatKind::mean, StatKind::stddev, StatKind::skewness,
    StatKind::kurtosis, StatKind::median, StatKind::last_value};

constexpr std::string_view stat_name(StatKind k) noexcept
{
    switch (k) {
    case StatKind::mean: return "mean";
    case StatKind::stddev: return "stddev";
    case StatKind::skewness: return "skewness";
    case StatKind::kurtosis: return "kurtosis";
    case StatKind::median: return "median";
    case StatKind::last_value: return "last";
    }
    return "?";
}

/// A non-empty subset of statistics, always iterated in canonical order.
class FeatureSet
{
public:
    FeatureSet(std::string name, std::initializer_list<StatKind> kinds) : name_(std::move(name))
    {
        for (StatKind k : kinds)
            mask_ |= bit(k);
        if (mask_ == 0)
            throw config_error("feature set '" + name_ + "' is empty");
    }

    static FeatureSet last() { return {"LAST", {StatKind::last_value}}; }
    static FeatureSet std_only() { return {"STD", {StatKind::stddev}}; }
    static FeatureSet four()
    {
        return {"FOUR", {StatKind::median, StatKind::stddev, StatKind::skewness, StatKind::kurtosis}};
    }
    static FeatureSet all()
    {
        return {"ALL", {StatKind::mean, StatKind::stddev, StatKind::skewness,
                        StatKind::kurtosis, StatKind::median, StatKind::last_value}};
    }

    static FeatureSet parse(std::string_view name)
    {
        if (name == "LAST") return last();
        if (name == "STD") return std_only();
        if (name == "FOUR") return four();
        if (name == "ALL") return all();
        throw config_error("unknown feature set '" + std::string(name) + "' (expected LAST, STD, FOUR or ALL)");
    }

    const std::string& name() const noexcept { return name_; }
    bool contains(StatKind k) const noexcept { return (mask_ & bit(k)) != 0; }

    std::vector<StatKind> kinds() const
    {
        std::vector<StatKind> out;
        for (StatKind k : kStatKinds)
            if (contains(k))
                out.push_back(k);
        return out;
    }

    std::size_t size() const noexcept { return kinds().size(); }

    bool operator==(const FeatureSet& o) const noexcept { return mask_ == o.mask_; }

private:
    static constexpr std::uint8_t bit(StatKind k) noexcept
    {
        return static_cast<std::uint8_t>(1u << static_cast<unsigned>(k));
    }

    std::string name_;
    std::uint8_t mask_ = 0;
};

inline std::string feature_column_name(std::string_view param, StatKind k)
{
    std::string s(param);
    s += '_';
    s += stat_name(k);
    return s;
}

// Interior gaps are filled linearly between the nearest valid neighbours;
// leading and trailing gaps take the nearest valid value.
inline std::vector<double> interpolate_missing(std::span<const double> series,
                                               std::span<const std::uint8_t> missing)
{
    if (series.size() != missing.size())
        throw data_error("interpolate_missing: series and mask lengths differ");

    std::vector<double> out(series.begin(), series.end());
    std::ptrdiff_t prev = -1;
    const auto n = static_cast<std::ptrdiff_t>(series.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (missing[i])
            continue;
        if (prev < 0) {
            for (std::ptrdiff_t j = 0; j < i; ++j)
                out[j] = series[i];
        } else if (i - prev > 1) {
            const double span = static_cast<double>(i - prev);
            for (std::ptrdiff_t j = prev + 1; j < i; ++j) {
                const double t = static_cast<double>(j - prev) / span;
                out[j] = series[prev] + t * (series[i] - series[prev]);
            }
        }
        prev = i;
    }
    if (prev < 0)
        throw data_error("interpolate_missing: every value of the series is missing");
    for (std::ptrdiff_t j = prev + 1; j < n; ++j)
        out[j] = series[prev];
    return out;
}

namespace detail {

struct Moments
{
    double n = 0;
    double mean = 0;
    double m2 = 0; // sums of powers of deviations
    double m3 = 0;
    double m4 = 0;
};

// Single-pass central-moment accumulation (Terriberry's update).
inline Moments accumulate_moments(std::span<const double> xs) noexcept
{
    Moments m;
    for (double x : xs) {
        const double n1 = m.n;
        m.n += 1;
        const double delta = x - m.mean;
        const double delta_n = delta / m.n;
        const double delta_n2 = delta_n * delta_n;
        const double term1 = delta * delta_n * n1;
        m.mean += delta_n;
        m.m4 += term1 * delta_n2 * (m.n * m.n - 3 * m.n + 3) + 6 * delta_n2 * m.m2 - 4 * delta_n * m.m3;
        m.m3 += term1 * delta_n * (m.n - 2) - 3 * delta_n * m.m2;
        m.m2 += term1;
    }
    return m;
}

inline double median_of(std::span<const double> xs)
{
    std::vector<double> v(xs.begin(), xs.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1)
        return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return lower + (upper - lower) / 2;
}

} // namespace detail

// Sample standard deviation (n-1); population-moment skewness and excess
// kurtosis, both 0 when the series has no spread.
inline double compute_stat(std::span<const double> series, StatKind kind)
{
    if (series.empty())
        throw data_error("compute_stat: empty series");

    switch (kind) {
    case StatKind::last_value:
        return series.back();
    case StatKind::median:
        return detail::median_of(series);
    default:
        break;
    }

    const detail::Moments m = detail::accumulate_moments(series);
    switch (kind) {
    case StatKind::mean:
        return m.mean;
    case StatKind::stddev:
        return m.n < 2 ? 0.0 : std::sqrt(m.m2 / (m.n - 1));
    case StatKind::skewness: {
        const double pm2 = m.m2 / m.n;
        if (pm2 <= 0)
            return 0.0;
        return (m.m3 / m.n) / std::pow(pm2, 1.5);
    }
    case StatKind::kurtosis: {
        const double pm2 = m.m2 / m.n;
        if (pm2 <= 0)
            return 0.0;
        return (m.m4 / m.n) / (pm2 * pm2) - 3.0;
    }
    default:
        return 0.0;
    }
}

/// Which raw parameters feed the feature vector, by column index and name.
struct ParamSelection
{
    std::vector<std::size_t> indices;
    std::vector<std::string> names;

    static ParamSelection all_of(const std::vector<std::string>& param_names)
    {
        ParamSelection sel;
        sel.names = param_names;
        for (std::size_t i = 0; i < param_names.size(); ++i)
            sel.indices.push_back(i);
        return sel;
    }
};

inline FeatureNames make_feature_names(const ParamSelection& params, const FeatureSet& set)
{
    auto names = std::make_shared<std::vector<std::string>>();
    for (const auto& p : params.names)
        for (StatKind k : set.kinds())
            names->push_back(feature_column_name(p, k));
    return names;
}

/// One record per slice; parameters major, statistics minor.
inline std::vector<FeatureRecord> extract_features(std::span<const MVTSSlice> slices,
                                                   const FeatureSet& set,
                                                   const ParamSelection& params)
{
    if (params.indices.size() != params.names.size() || params.indices.empty())
        throw config_error("extract_features: parameter selection is empty or inconsistent");

    const FeatureNames names = make_feature_names(params, set);
    const std::vector<StatKind> kinds = set.kinds();

    std::vector<FeatureRecord> out;
    out.reserve(slices.size());
    std::vector<double> column;
    std::vector<std::uint8_t> mask;
    for (const MVTSSlice& s : slices) {
        if (s.missing.rows() != s.values.rows() || s.missing.cols() != s.values.cols())
            throw data_error("slice " + make_slice_uid(s.partition_id, s.event_id, s.slice_index)
                             + ": missing-mask shape differs from values");
        FeatureRecord rec;
        rec.slice_uid = make_slice_uid(s.partition_id, s.event_id, s.slice_index);
        rec.event_id = s.event_id;
        rec.partition_id = s.partition_id;
        rec.slice_index = s.slice_index;
        rec.label = s.label;
        rec.superclass = to_superclass(s.label);
        rec.feature_names = names;
        rec.features.reserve(names->size());

        for (std::size_t pi = 0; pi < params.indices.size(); ++pi) {
            const std::size_t col = params.indices[pi];
            if (col >= s.n_params())
                throw data_error("slice " + rec.slice_uid + ": parameter index out of range");
            column.resize(s.steps());
            mask.resize(s.steps());
            bool any_missing = false;
            for (std::size_t t = 0; t < s.steps(); ++t) {
                column[t] = s.values(t, col);
                mask[t] = s.missing(t, col);
                any_missing = any_missing || mask[t];
            }
            if (any_missing) {
                try {
                    column = interpolate_missing(column, mask);
                } catch (const Error& e) {
                    throw data_error("slice " + rec.slice_uid + ", parameter " + params.names[pi] + ": "
                                     + e.what());
                }
            }
            for (StatKind k : kinds)
                rec.features.push_back(compute_stat(column, k));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

/// Keeps only the columns of `set` from records extracted with a superset.
inline std::vector<FeatureRecord> select_features(std::span<const FeatureRecord> records,
                                                  const FeatureSet& set)
{
    if (records.empty())
        return {};
    if (!records.front().feature_names)
        throw data_error("select_features: record " + records.front().slice_uid + " carries no feature names");
    const auto& have = *records.front().feature_names;
    const auto stat_suffix = [](std::string_view col) {
        const auto pos = col.rfind('_');
        return pos == std::string_view::npos ? std::string_view{} : col.substr(pos + 1);
    };

    std::vector<std::size_t> keep;
    auto names = std::make_shared<std::vector<std::string>>();
    std::vector<bool> seen(kStatKinds.size(), false);
    for (std::size_t i = 0; i < have.size(); ++i) {
        for (StatKind k : set.kinds()) {
            if (stat_suffix(have[i]) == stat_name(k)) {
                keep.push_back(i);
                names->push_back(have[i]);
                seen[static_cast<std::size_t>(k)] = true;
            }
        }
    }
    for (StatKind k : set.kinds())
        if (!seen[static_cast<std::size_t>(k)])
            throw data_error("feature set " + set.name() + " needs statistic '" + std::string(stat_name(k))
                             + "' which was not extracted");

    std::vector<FeatureRecord> out;
    out.reserve(records.size());
    for (const FeatureRecord& r : records) {
        if (r.features.size() != have.size())
            throw data_error("select_features: record " + r.slice_uid + " has a different feature width");
        FeatureRecord copy = r;
        copy.features.clear();
        for (std::size_t i : keep)
            copy.features.push_back(r.features[i]);
        copy.feature_names = names;
        out.push_back(std::move(copy));
    }
    return out;
}

} // namespace flarebench
