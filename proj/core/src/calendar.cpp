#include "tbp/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "tbp/errors.hpp"

namespace tbp {

namespace {

int parse_int_field(const std::string& text, std::size_t pos, std::size_t len,
                    const char* what) {
    int value = 0;
    const char* first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc{} || ptr != first + len) {
        throw Error(std::string("malformed ") + what + ": " + text);
    }
    return value;
}

}  // namespace

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date Date::parse(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw Error("malformed date: " + text);
    }
    Date d;
    d.year = parse_int_field(text, 0, 4, "date");
    d.month = parse_int_field(text, 5, 2, "date");
    d.day = parse_int_field(text, 8, 2, "date");
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
        throw Error("date out of range: " + text);
    }
    return d;
}

YearMonth YearMonth::next() const {
    if (month == 12) return {year + 1, 1};
    return {year, month + 1};
}

std::string YearMonth::to_string() const {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
}

YearMonth YearMonth::parse(const std::string& text) {
    if (text.size() != 7 || text[4] != '-') {
        throw Error("malformed month: " + text);
    }
    YearMonth ym;
    ym.year = parse_int_field(text, 0, 4, "month");
    ym.month = parse_int_field(text, 5, 2, "month");
    if (ym.month < 1 || ym.month > 12) {
        throw Error("month out of range: " + text);
    }
    return ym;
}

}  // namespace tbp
