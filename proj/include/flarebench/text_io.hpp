#pragma once

#include "core_types.hpp"

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace flarebench::text {

// 17 significant digits in scientific notation; round-trips every double.
inline void put_real(std::string& out, double v)
{
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
    out.append(buf, r.ptr);
}

inline void put_real(std::ostream& os, double v)
{
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
    os.write(buf, r.ptr - buf);
}

inline std::string real_string(double v)
{
    std::string s;
    put_real(s, v);
    return s;
}

inline double get_real(std::string_view s, const std::string& where)
{
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw data_error(where + ": not a number '" + std::string(s) + "'");
    return v;
}

template <typename Int>
Int get_int(std::string_view s, const std::string& where)
{
    Int v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw data_error(where + ": not an integer '" + std::string(s) + "'");
    return v;
}

inline void split(std::string_view line, char sep, std::vector<std::string_view>& cells)
{
    cells.clear();
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    for (;;) {
        const auto pos = line.find(sep);
        cells.push_back(line.substr(0, pos));
        if (pos == std::string_view::npos)
            return;
        line.remove_prefix(pos + 1);
    }
}

inline std::string where(const std::string& file, std::size_t line)
{
    return file + ":" + std::to_string(line);
}

} // namespace flarebench::text
