#include "ibdwb/value.hpp"

#include <charconv>
#include <cstdio>

namespace ibdwb {

std::string ColumnType::to_string() const {
    switch (base) {
    case Base::Integer: return "INTEGER";
    case Base::Double: return "DOUBLE";
    case Base::Varchar: return "VARCHAR(" + std::to_string(length) + ")";
    }
    return "?";
}

std::optional<ColumnType> ColumnType::parse(std::string_view text) {
    if (text == "INTEGER") return integer();
    if (text == "DOUBLE") return real();
    if (text.rfind("VARCHAR(", 0) == 0 && text.back() == ')') {
        std::string_view digits = text.substr(8, text.size() - 9);
        uint32_t n = 0;
        auto [ptr, ec] = std::from_chars(digits.begin(), digits.end(), n);
        if (ec != std::errc() || ptr != digits.end() || n < 1 || n > 65535) return std::nullopt;
        return varchar(n);
    }
    return std::nullopt;
}

std::string Value::render() const {
    if (is_null()) return "NULL";
    if (is_integer()) return std::to_string(as_integer());
    if (is_real()) return format_double(as_real());
    if (is_boolean()) return as_boolean() ? "1" : "0";
    return as_text();
}

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string double_literal_text(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

std::string sql_quote(std::string_view text) {
    std::string out;
    out.reserve(text.size() + 2);
    out.push_back('\'');
    for (char c : text) {
        out.push_back(c);
        if (c == '\'') out.push_back('\'');
    }
    out.push_back('\'');
    return out;
}

} // namespace ibdwb
