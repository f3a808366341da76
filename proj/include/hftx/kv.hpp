#pragma once

// Line-oriented `section.key = value` text format shared by the catalog and
// run-config files. Numbers are parsed and printed without locale.

#include "hftx/error.hpp"

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hftx {

struct KvEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Parses the whole text. Blank lines and `#` comments are skipped; duplicate
/// keys are rejected.
inline std::vector<KvEntry> parse_kv(std::string_view text) {
    std::vector<KvEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected `key = value`");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key");
        if (value.empty()) throw ParseError(line_no, "empty value for `" + std::string(key) + "`");
        for (const auto& e : out) {
            if (e.key == key) {
                throw ParseError(line_no, "duplicate key `" + std::string(key) + "` (first on line " +
                                              std::to_string(e.line) + ")");
            }
        }
        out.push_back({std::string(key), std::string(value), line_no});
    }
    return out;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open `" + path + "`");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline double parse_double(std::string_view s, std::size_t line = 0) {
    s = detail::trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(line, "not a number: `" + std::string(s) + "`");
    }
    return v;
}

inline long parse_int(std::string_view s, std::size_t line = 0) {
    s = detail::trim(s);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError(line, "not an integer: `" + std::string(s) + "`");
    }
    return v;
}

/// Comma-separated list of numbers.
inline std::vector<double> parse_double_list(std::string_view s, std::size_t line = 0) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto item = s.substr(pos, comma == std::string_view::npos ? s.size() - pos : comma - pos);
        out.push_back(parse_double(item, line));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// Fixed significant-digit scientific-ish format for CSV and report columns.
inline std::string format_g(double v, int digits = 10) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
    return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return std::string(buf, ptr);
}

}  // namespace hftx
