#include "stockcast/ingest.hpp"

#include "stockcast/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace stockcast {

namespace {

bool is_leap(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return month == 2 && is_leap(year) ? 29 : kDays[month - 1];
}

std::optional<int> parse_digits(std::string_view text) {
    int value = 0;
    for (char c : text) {
        if (c < '0' || c > '9') return std::nullopt;
        value = value * 10 + (c - '0');
    }
    return value;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\"");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\"");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::optional<double> parse_price(std::string_view text) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

}  // namespace

std::optional<Date> Date::parse(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    const auto y = parse_digits(text.substr(0, 4));
    const auto m = parse_digits(text.substr(5, 2));
    const auto d = parse_digits(text.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    if (*m < 1 || *m > 12 || *d < 1 || *d > days_in_month(*y, *m)) return std::nullopt;
    return Date{*y, *m, *d};
}

std::string Date::to_string() const {
    return fmt::format("{:04d}-{:02d}-{:02d}", year, month, day);
}

LoadedSeries parse_series_csv(std::istream& in, std::string symbol) {
    std::string line;
    if (!std::getline(in, line)) {
        throw EmptySeries("series '" + symbol + "': missing header row");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

    const auto header = split_fields(line);
    std::optional<std::size_t> date_col;
    std::optional<std::size_t> close_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = lower(header[i]);
        if (name == "date" && !date_col) date_col = i;
        if (name == "close" && !close_col) close_col = i;
    }
    if (!date_col || !close_col) {
        throw EmptySeries("series '" + symbol + "': header must contain 'date' and 'close' columns");
    }

    struct Row {
        Date date;
        double close;
        std::size_t row;
    };
    std::vector<Row> rows;
    LoadedSeries result;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        const std::size_t this_row = row++;
        const auto need = std::max(*date_col, *close_col);
        if (fields.size() <= need) {
            result.report.issues.push_back({this_row, "missing column"});
            continue;
        }
        const auto date = Date::parse(fields[*date_col]);
        if (!date) {
            result.report.issues.push_back({this_row, "unparsable date"});
            continue;
        }
        const auto close = parse_price(fields[*close_col]);
        if (!close || !std::isfinite(*close)) {
            result.report.issues.push_back({this_row, "non-numeric price"});
            continue;
        }
        if (*close <= 0.0) {
            result.report.issues.push_back({this_row, "non-positive price"});
            continue;
        }
        rows.push_back({*date, *close, this_row});
    }
    result.report.row_count = row;
    result.report.dropped_rows = result.report.issues.size();

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].date == rows[i - 1].date) {
            throw DuplicateDate(fmt::format("series '{}': duplicate date {} (rows {} and {})", symbol,
                                            rows[i].date.to_string(), rows[i - 1].row, rows[i].row));
        }
    }
    if (rows.size() < 2) {
        throw EmptySeries(fmt::format("series '{}': {} valid rows, need at least 2", symbol, rows.size()));
    }

    result.series.symbol = std::move(symbol);
    result.series.dates.reserve(rows.size());
    result.series.values.reserve(rows.size());
    for (const auto& r : rows) {
        result.series.dates.push_back(r.date);
        result.series.values.push_back(r.close);
    }
    return result;
}

LoadedSeries load_series_with_report(const std::filesystem::path& path, std::string symbol) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("cannot open series file: " + path.string());
    return parse_series_csv(in, std::move(symbol));
}

TimeSeries load_series(const std::filesystem::path& path, std::string symbol) {
    return load_series_with_report(path, std::move(symbol)).series;
}

std::filesystem::path series_path(const std::filesystem::path& data_dir, std::string_view symbol) {
    return data_dir / (std::string(symbol) + ".csv");
}

ValidationReport validate_series(const TimeSeries& ts) {
    ValidationReport report;
    report.row_count = std::max(ts.dates.size(), ts.values.size());
    if (ts.dates.size() != ts.values.size()) {
        report.issues.push_back({std::min(ts.dates.size(), ts.values.size()), "dates and values differ in length"});
    }
    if (report.row_count < 2) {
        report.issues.push_back({0, "fewer than 2 points"});
    }
    for (std::size_t i = 1; i < ts.dates.size(); ++i) {
        if (ts.dates[i] == ts.dates[i - 1]) {
            report.issues.push_back({i, "duplicate date " + ts.dates[i].to_string()});
        } else if (ts.dates[i] < ts.dates[i - 1]) {
            report.issues.push_back({i, "date out of order " + ts.dates[i].to_string()});
        }
    }
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
        if (!std::isfinite(ts.values[i])) {
            report.issues.push_back({i, "non-finite price"});
        } else if (ts.values[i] <= 0.0) {
            report.issues.push_back({i, "non-positive price"});
        }
    }
    return report;
}

void write_canonical_csv(const TimeSeries& ts, std::ostream& out) {
    out << "date,close\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out << ts.dates[i].to_string() << ',' << fmt::format("{}", ts.values[i]) << '\n';
    }
}

}  // namespace stockcast
