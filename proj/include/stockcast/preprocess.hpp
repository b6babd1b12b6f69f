#pragma once

#include "stockcast/ingest.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace stockcast {

/// Min-max scaler; `max > min` always holds for a fitted scaler.
struct Scaler {
    double min = 0.0;
    double max = 1.0;

    bool operator==(const Scaler&) const = default;
};

enum class ScalerScope { Train, Full };

std::string_view to_string(ScalerScope scope);
ScalerScope parse_scaler_scope(std::string_view text);

struct SplitSeries {
    TimeSeries train;
    TimeSeries test;
    Date cutoff;
};

inline constexpr Date kDefaultCutoff{2017, 1, 1};

/// Train gets every point dated on or before `cutoff`. Throws EmptyPartition.
SplitSeries split_by_date(const TimeSeries& ts, Date cutoff);

/// Throws DegenerateRange when all values are equal (or fewer than two are given).
Scaler fit_scaler(std::span<const double> train_values);

std::vector<double> scale(const Scaler& s, std::span<const double> x);
std::vector<double> inverse_scale(const Scaler& s, std::span<const double> y);

}  // namespace stockcast
