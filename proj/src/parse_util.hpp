#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace certlab::detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

inline double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    if (text == "inf" || text == "+inf" || text == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("cannot parse '" + std::string(text) + "' as a number for " + std::string(what));
    }
    return v;
}

// "k1=v1,k2=v2" -> map; duplicate keys rejected.
inline std::map<std::string, std::string, std::less<>> parse_key_values(std::string_view s) {
    std::map<std::string, std::string, std::less<>> out;
    if (trim(s).empty()) return out;
    for (auto item : split(s, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("expected key=value, got '" + std::string(item) + "'");
        }
        auto key = std::string(trim(item.substr(0, eq)));
        if (!out.emplace(key, std::string(trim(item.substr(eq + 1)))).second) {
            throw std::invalid_argument("duplicate key '" + key + "'");
        }
    }
    return out;
}

}  // namespace certlab::detail
