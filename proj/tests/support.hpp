#pragma once

#include "stockcast/ingest.hpp"
#include "stockcast/windowing.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

namespace test_support {

using stockcast::Date;

// Predictors with closed-form behavior.
struct EchoModel final : stockcast::Predictor {
    std::size_t w;
    explicit EchoModel(std::size_t w_) : w(w_) {}
    std::size_t input_arity() const override { return w; }
    std::size_t output_arity() const override { return 1; }
    std::vector<double> predict(std::span<const double> x) const override { return {x.back()}; }
};

struct SumModel final : stockcast::Predictor {
    std::size_t w;
    explicit SumModel(std::size_t w_) : w(w_) {}
    std::size_t input_arity() const override { return w; }
    std::size_t output_arity() const override { return 1; }
    std::vector<double> predict(std::span<const double> x) const override {
        return {std::accumulate(x.begin(), x.end(), 0.0)};
    }
};

// Broadcasts the window mean to `h` outputs and counts its invocations.
struct MeanModel final : stockcast::Predictor {
    std::size_t w, h;
    mutable std::size_t calls = 0;
    MeanModel(std::size_t w_, std::size_t h_) : w(w_), h(h_) {}
    std::size_t input_arity() const override { return w; }
    std::size_t output_arity() const override { return h; }
    std::vector<double> predict(std::span<const double> x) const override {
        ++calls;
        return std::vector<double>(h, std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()));
    }
};

struct ConstantModel final : stockcast::Predictor {
    std::size_t w, h;
    double value;
    ConstantModel(std::size_t w_, std::size_t h_, double v) : w(w_), h(h_), value(v) {}
    std::size_t input_arity() const override { return w; }
    std::size_t output_arity() const override { return h; }
    std::vector<double> predict(std::span<const double>) const override { return std::vector<double>(h, value); }
};

// Calendar day after `d` (leap years handled).
inline Date next_day(Date d) {
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
    const int len = d.month == 2 && leap ? 29 : days[d.month - 1];
    if (++d.day > len) {
        d.day = 1;
        if (++d.month > 12) {
            d.month = 1;
            ++d.year;
        }
    }
    return d;
}

inline std::vector<Date> consecutive_dates(Date start, std::size_t n) {
    std::vector<Date> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(start);
        start = next_day(start);
    }
    return out;
}

// Geometric random walk on consecutive calendar days.
inline stockcast::TimeSeries random_walk(const std::string& symbol, Date start, std::size_t n, std::uint64_t seed,
                                         double vol = 0.012) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0003, vol);
    stockcast::TimeSeries ts;
    ts.symbol = symbol;
    ts.dates = consecutive_dates(start, n);
    double p = 100.0;
    for (std::size_t i = 0; i < n; ++i) {
        p *= std::exp(step(rng));
        ts.values.push_back(p);
    }
    return ts;
}

inline void write_series_csv(const std::filesystem::path& path, const stockcast::TimeSeries& ts) {
    std::ofstream out(path);
    stockcast::write_canonical_csv(ts, out);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("stockcast-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace test_support
