#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flarebench {

// Error categories map onto CLI exit codes.
enum class ErrorKind { config, data, trial, leakage };

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::config, what}; }
inline Error data_error(const std::string& what) { return {ErrorKind::data, what}; }

// GOES flare classes; enumerator order is flare strength (N weakest).
enum class FlareClass : std::uint8_t { N = 0, B = 1, C = 2, M = 3, X = 4 };

enum class SuperClass : std::uint8_t { XM, CBN };

// Display order, strongest first.
inline constexpr std::array<FlareClass, 5> kFlareClasses = {
    FlareClass::X, FlareClass::M, FlareClass::C, FlareClass::B, FlareClass::N};

constexpr SuperClass to_superclass(FlareClass c) noexcept
{
    return (c == FlareClass::X || c == FlareClass::M) ? SuperClass::XM : SuperClass::CBN;
}

// +1 for the rare (XM) side, -1 otherwise.
constexpr int binary_label(FlareClass c) noexcept
{
    return to_superclass(c) == SuperClass::XM ? 1 : -1;
}

constexpr char to_char(FlareClass c) noexcept
{
    switch (c) {
    case FlareClass::X: return 'X';
    case FlareClass::M: return 'M';
    case FlareClass::C: return 'C';
    case FlareClass::B: return 'B';
    case FlareClass::N: return 'N';
    }
    return '?';
}

inline std::string to_string(FlareClass c) { return std::string(1, to_char(c)); }

inline std::string to_string(SuperClass s) { return s == SuperClass::XM ? "XM" : "CBN"; }

inline std::optional<FlareClass> parse_flare_class(std::string_view s) noexcept
{
    if (s.size() != 1)
        return std::nullopt;
    switch (s[0]) {
    case 'X': return FlareClass::X;
    case 'M': return FlareClass::M;
    case 'C': return FlareClass::C;
    case 'B': return FlareClass::B;
    case 'N': case 'A': return FlareClass::N;
    default: return std::nullopt;
    }
}

inline std::optional<SuperClass> parse_superclass(std::string_view s) noexcept
{
    if (s == "XM")
        return SuperClass::XM;
    if (s == "CBN")
        return SuperClass::CBN;
    return std::nullopt;
}

/// Dense row-major matrix.
template <typename T>
class Grid
{
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<T>& data() const noexcept { return data_; }
    std::vector<T>& data() noexcept { return data_; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// One sliding-window cut of an event's multivariate series.
struct MVTSSlice
{
    std::string event_id;
    int partition_id = 1;
    int slice_index = 0;
    FlareClass label = FlareClass::N;
    Grid<double> values;        // steps x params
    Grid<std::uint8_t> missing; // same shape; 1 marks a missing cell

    std::size_t steps() const noexcept { return values.rows(); }
    std::size_t n_params() const noexcept { return values.cols(); }

    bool operator==(const MVTSSlice&) const = default;
};

inline std::string make_slice_uid(int partition_id, std::string_view event_id, int slice_index)
{
    std::string uid = std::to_string(partition_id);
    uid += ':';
    uid += event_id;
    uid += ':';
    uid += std::to_string(slice_index);
    return uid;
}

using FeatureNames = std::shared_ptr<const std::vector<std::string>>;

struct FeatureRecord
{
    std::string slice_uid;
    std::string event_id;
    int partition_id = 1;
    int slice_index = 0;
    FlareClass label = FlareClass::N;
    SuperClass superclass = SuperClass::CBN;
    std::vector<double> features;
    FeatureNames feature_names;

    bool operator==(const FeatureRecord& o) const
    {
        const bool names_equal = feature_names == o.feature_names
            || (feature_names && o.feature_names && *feature_names == *o.feature_names);
        return slice_uid == o.slice_uid && event_id == o.event_id
            && partition_id == o.partition_id && slice_index == o.slice_index
            && label == o.label && superclass == o.superclass && features == o.features
            && names_equal;
    }
};

constexpr FlareClass label_of(FlareClass c) noexcept { return c; }
inline FlareClass label_of(const MVTSSlice& s) noexcept { return s.label; }
inline FlareClass label_of(const FeatureRecord& r) noexcept { return r.label; }

struct ClassCounts
{
    std::array<std::size_t, 5> by_class{}; // indexed by underlying FlareClass value

    std::size_t& operator[](FlareClass c) { return by_class[static_cast<std::size_t>(c)]; }
    std::size_t operator[](FlareClass c) const { return by_class[static_cast<std::size_t>(c)]; }

    std::size_t superclass(SuperClass s) const noexcept
    {
        std::size_t n = 0;
        for (FlareClass c : kFlareClasses)
            if (to_superclass(c) == s)
                n += by_class[static_cast<std::size_t>(c)];
        return n;
    }

    std::size_t total() const noexcept
    {
        std::size_t n = 0;
        for (auto v : by_class)
            n += v;
        return n;
    }

    static ClassCounts of(std::size_t x, std::size_t m, std::size_t c, std::size_t b, std::size_t n)
    {
        ClassCounts cc;
        cc[FlareClass::X] = x;
        cc[FlareClass::M] = m;
        cc[FlareClass::C] = c;
        cc[FlareClass::B] = b;
        cc[FlareClass::N] = n;
        return cc;
    }

    bool operator==(const ClassCounts&) const = default;
};

template <typename Range>
ClassCounts count_classes(const Range& items)
{
    ClassCounts counts;
    for (const auto& item : items)
        ++counts[label_of(item)];
    return counts;
}

} // namespace flarebench
