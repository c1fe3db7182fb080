#pragma once

#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace tse {

inline std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> out;
    size_t begin = 0;
    while (true) {
        size_t pos = line.find(delim, begin);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(begin));
            return out;
        }
        out.emplace_back(line.substr(begin, pos - begin));
        begin = pos + 1;
    }
}

inline std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string join(const std::vector<std::string>& parts, char delim) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += delim;
        out += parts[i];
    }
    return out;
}

/// Deterministic numeric formatting for table output ("%.6g": no locale, no
/// trailing zero noise).
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace tse
