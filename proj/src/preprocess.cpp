#include "stockcast/preprocess.hpp"

#include "stockcast/errors.hpp"

#include <algorithm>
#include <string>

namespace stockcast {

std::string_view to_string(ScalerScope scope) {
    return scope == ScalerScope::Train ? "train" : "full";
}

ScalerScope parse_scaler_scope(std::string_view text) {
    if (text == "train") return ScalerScope::Train;
    if (text == "full") return ScalerScope::Full;
    throw InvalidConfig("scaler_scope must be 'train' or 'full', got '" + std::string(text) + "'");
}

SplitSeries split_by_date(const TimeSeries& ts, Date cutoff) {
    const auto boundary = std::upper_bound(ts.dates.begin(), ts.dates.end(), cutoff);
    const auto n_train = static_cast<std::size_t>(boundary - ts.dates.begin());
    if (n_train == 0 || n_train == ts.size()) {
        throw EmptyPartition("cutoff " + cutoff.to_string() + " leaves an empty " +
                             (n_train == 0 ? "train" : "test") + " partition for '" + ts.symbol + "'");
    }
    SplitSeries out;
    out.cutoff = cutoff;
    out.train.symbol = ts.symbol;
    out.test.symbol = ts.symbol;
    out.train.dates.assign(ts.dates.begin(), boundary);
    out.train.values.assign(ts.values.begin(), ts.values.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.dates.assign(boundary, ts.dates.end());
    out.test.values.assign(ts.values.begin() + static_cast<std::ptrdiff_t>(n_train), ts.values.end());
    return out;
}

Scaler fit_scaler(std::span<const double> train_values) {
    if (train_values.size() < 2) throw DegenerateRange("scaler needs at least two values");
    const auto [lo, hi] = std::minmax_element(train_values.begin(), train_values.end());
    if (!(*hi > *lo)) throw DegenerateRange("all values equal; min-max range is zero");
    return Scaler{*lo, *hi};
}

std::vector<double> scale(const Scaler& s, std::span<const double> x) {
    const double range = s.max - s.min;
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [&](double v) { return (v - s.min) / range; });
    return out;
}

std::vector<double> inverse_scale(const Scaler& s, std::span<const double> y) {
    const double range = s.max - s.min;
    std::vector<double> out(y.size());
    std::transform(y.begin(), y.end(), out.begin(), [&](double v) { return v * range + s.min; });
    return out;
}

}  // namespace stockcast
