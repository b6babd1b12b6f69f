#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stockcast {

/// Proleptic Gregorian calendar date.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

    /// Strict `YYYY-MM-DD`; rejects out-of-range months and days.
    static std::optional<Date> parse(std::string_view text);
    std::string to_string() const;
};

/// Daily closing prices of one stock, indexed by trading-day position.
///
/// A loaded series satisfies: dates strictly increasing, values finite and
/// positive, at least two points. The struct itself does not enforce this so
/// that `validate_series` can inspect arbitrary data.
struct TimeSeries {
    std::string symbol;
    std::vector<Date> dates;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    bool operator==(const TimeSeries&) const = default;
};

struct ValidationIssue {
    std::size_t row = 0;  // 0-based data row (header excluded)
    std::string reason;

    bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
    std::size_t row_count = 0;
    std::size_t dropped_rows = 0;
    std::vector<ValidationIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
};

struct LoadedSeries {
    TimeSeries series;
    ValidationReport report;
};

/// Ticker symbols of the ten-stock reference corpus.
inline constexpr std::array<std::string_view, 10> kReferenceSymbols = {
    "ACC",  "AXISBANK", "BHARTIARTL", "CIPLA",  "HCLTECH",
    "HDFC", "INFY",     "JSWSTEEL",   "MARUTI", "ULTRACEMCO"};

/// Parses a `date,close` CSV (extra columns ignored). Invalid rows are dropped
/// and listed in the report; the result is sorted by date.
/// Throws FileNotFound, EmptySeries (< 2 valid rows) or DuplicateDate.
LoadedSeries load_series_with_report(const std::filesystem::path& path, std::string symbol);
LoadedSeries parse_series_csv(std::istream& in, std::string symbol);

TimeSeries load_series(const std::filesystem::path& path, std::string symbol);

/// `<data_dir>/<symbol>.csv`
std::filesystem::path series_path(const std::filesystem::path& data_dir, std::string_view symbol);

/// Checks every TimeSeries invariant. Never throws.
ValidationReport validate_series(const TimeSeries& ts);

/// Writes the canonical `date,close` form; values use shortest round-trip formatting.
void write_canonical_csv(const TimeSeries& ts, std::ostream& out);

}  // namespace stockcast
