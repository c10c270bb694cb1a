#pragma once

#include "core_types.hpp"
#include "text_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace flarebench {

enum class NormScope { global, local };

inline std::string to_string(NormScope s) { return s == NormScope::global ? "global" : "local"; }

inline NormScope parse_norm_scope(std::string_view s)
{
    if (s == "global")
        return NormScope::global;
    if (s == "local")
        return NormScope::local;
    throw config_error("unknown normalization '" + std::string(s) + "' (expected global or local)");
}

/// Per-column extrema for zero-one scaling.
struct NormalizationStats
{
    std::vector<double> min;
    std::vector<double> max;
    NormScope scope = NormScope::global;
    int local_partition = 0; // meaningful for local scope only
    std::string fitted_on;   // e.g. "partitions 1,3"

    std::size_t columns() const noexcept { return min.size(); }
};

namespace detail {

inline std::string partitions_descriptor(const std::vector<int>& pids)
{
    std::string s = "partitions ";
    for (std::size_t i = 0; i < pids.size(); ++i) {
        if (i)
            s += ',';
        s += std::to_string(pids[i]);
    }
    return s;
}

} // namespace detail

/// Fits column extrema over the union of `groups`. Local scope expects a
/// single partition's records.
inline NormalizationStats fit_extrema(std::span<const std::span<const FeatureRecord>> groups, NormScope scope)
{
    NormalizationStats st;
    st.scope = scope;
    std::vector<int> pids;
    std::size_t width = 0;
    bool first = true;
    for (auto group : groups) {
        for (const FeatureRecord& r : group) {
            if (first) {
                width = r.features.size();
                st.min.assign(width, std::numeric_limits<double>::infinity());
                st.max.assign(width, -std::numeric_limits<double>::infinity());
                first = false;
            }
            if (r.features.size() != width)
                throw data_error("fit_extrema: record " + r.slice_uid + " has a different feature width");
            for (std::size_t c = 0; c < width; ++c) {
                st.min[c] = std::min(st.min[c], r.features[c]);
                st.max[c] = std::max(st.max[c], r.features[c]);
            }
            if (std::find(pids.begin(), pids.end(), r.partition_id) == pids.end())
                pids.push_back(r.partition_id);
        }
    }
    if (first)
        throw data_error("fit_extrema: no records to fit");
    std::sort(pids.begin(), pids.end());
    if (scope == NormScope::local) {
        if (pids.size() != 1)
            throw config_error("fit_extrema: local scope must be fitted on exactly one partition");
        st.local_partition = pids.front();
    }
    st.fitted_on = detail::partitions_descriptor(pids);
    return st;
}

inline NormalizationStats fit_extrema(std::span<const FeatureRecord> records, NormScope scope)
{
    const std::span<const FeatureRecord> one[] = {records};
    return fit_extrema(std::span<const std::span<const FeatureRecord>>(one), scope);
}

// (x - min) / (max - min); a flat column maps to 0. Values outside the
// fitted range are kept as they are, so they can leave [0, 1].
inline void apply_in_place(std::span<FeatureRecord> records, const NormalizationStats& st)
{
    for (FeatureRecord& r : records) {
        if (r.features.size() != st.columns())
            throw data_error("normalize: record " + r.slice_uid + " has " + std::to_string(r.features.size())
                             + " columns, stats cover " + std::to_string(st.columns()));
        for (std::size_t c = 0; c < st.columns(); ++c) {
            const double range = st.max[c] - st.min[c];
            r.features[c] = range > 0 ? (r.features[c] - st.min[c]) / range : 0.0;
        }
    }
}

inline std::vector<FeatureRecord> apply(std::span<const FeatureRecord> records, const NormalizationStats& st)
{
    std::vector<FeatureRecord> out(records.begin(), records.end());
    apply_in_place(out, st);
    return out;
}

// Sidecar text format:
//   scope=<global|local>
//   partition=<id>
//   fitted_on=<descriptor>
//   columns=<n>
//   <min>,<max>            one line per column
inline void write_stats(std::ostream& os, const NormalizationStats& st)
{
    os << "scope=" << to_string(st.scope) << '\n'
       << "partition=" << st.local_partition << '\n'
       << "fitted_on=" << st.fitted_on << '\n'
       << "columns=" << st.columns() << '\n';
    for (std::size_t c = 0; c < st.columns(); ++c) {
        text::put_real(os, st.min[c]);
        os << ',';
        text::put_real(os, st.max[c]);
        os << '\n';
    }
}

inline NormalizationStats read_stats(std::istream& is)
{
    NormalizationStats st;
    std::string line;
    const auto value_of = [&](std::string_view key) {
        if (!std::getline(is, line) || line.rfind(std::string(key) + "=", 0) != 0)
            throw data_error("normalization stats: expected '" + std::string(key) + "='");
        return line.substr(key.size() + 1);
    };
    st.scope = parse_norm_scope(value_of("scope"));
    st.local_partition = std::stoi(value_of("partition"));
    st.fitted_on = value_of("fitted_on");
    const std::size_t n = std::stoul(value_of("columns"));
    for (std::size_t c = 0; c < n; ++c) {
        if (!std::getline(is, line))
            throw data_error("normalization stats: truncated at column " + std::to_string(c));
        const auto comma = line.find(',');
        double lo = 0, hi = 0;
        if (comma == std::string::npos
            || std::from_chars(line.data(), line.data() + comma, lo).ec != std::errc{}
            || std::from_chars(line.data() + comma + 1, line.data() + line.size(), hi).ec != std::errc{})
            throw data_error("normalization stats: malformed column line " + std::to_string(c));
        if (lo > hi)
            throw data_error("normalization stats: min > max at column " + std::to_string(c));
        st.min.push_back(lo);
        st.max.push_back(hi);
    }
    return st;
}

} // namespace flarebench
