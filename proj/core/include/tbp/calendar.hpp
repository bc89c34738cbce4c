#pragma once

#include <compare>
#include <cstddef>
#include <string>

namespace tbp {

// Calendar day, ISO `YYYY-MM-DD`.
struct Date {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31

    auto operator<=>(const Date&) const = default;

    std::string to_string() const;
    static Date parse(const std::string& text);  // throws Error on malformed input
};

// Calendar month, formatted `YYYY-MM`.
struct YearMonth {
    int year = 0;
    int month = 0;  // 1..12

    auto operator<=>(const YearMonth&) const = default;

    // Months since year 0; difference of indices = month distance.
    long index() const { return static_cast<long>(year) * 12 + (month - 1); }
    YearMonth next() const;

    std::string to_string() const;
    static YearMonth parse(const std::string& text);
    static YearMonth of(const Date& d) { return {d.year, d.month}; }
};

// Half-open index range [begin, end) into a month axis.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool empty() const { return end <= begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }

    auto operator<=>(const IndexRange&) const = default;
};

}  // namespace tbp
