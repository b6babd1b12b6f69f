#include "stockcast/evaluation.hpp"

#include "stockcast/errors.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stockcast {

LossInterval loss_interval(std::span<const double> run_errors) {
    if (run_errors.size() < 2) {
        throw TooFewRuns(fmt::format("loss interval needs at least 2 runs, got {}", run_errors.size()));
    }
    double sum = 0.0;
    for (double e : run_errors) {
        if (!std::isfinite(e)) throw std::invalid_argument("loss interval over non-finite run error");
        sum += e;
    }
    const double n = static_cast<double>(run_errors.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double e : run_errors) ss += (e - mean) * (e - mean);
    return {mean, std::sqrt(ss / (n - 1.0)), run_errors.size()};
}

std::string_view to_string(DmLoss loss) {
    return loss == DmLoss::Squared ? "squared" : "absolute";
}

std::string_view to_string(DmVariant variant) {
    return variant == DmVariant::Harvey ? "harvey" : "normal";
}

DmLoss parse_dm_loss(std::string_view text) {
    if (text == "squared") return DmLoss::Squared;
    if (text == "absolute") return DmLoss::Absolute;
    throw InvalidConfig("DM loss must be 'squared' or 'absolute', got '" + std::string(text) + "'");
}

DmVariant parse_dm_variant(std::string_view text) {
    if (text == "harvey") return DmVariant::Harvey;
    if (text == "normal") return DmVariant::Normal;
    throw InvalidConfig("DM variant must be 'harvey' or 'normal', got '" + std::string(text) + "'");
}

DmReport dm_test(std::span<const double> errors_a, std::span<const double> errors_b, std::size_t h,
                 const DmOptions& options) {
    if (errors_a.size() != errors_b.size()) {
        throw ArityMismatch(fmt::format("DM error sequences differ in length ({} vs {})", errors_a.size(),
                                        errors_b.size()));
    }
    const std::size_t T = errors_a.size();
    if (h == 0 || T <= std::max<std::size_t>(h, 4)) {
        throw TooFewObservations(fmt::format("DM test needs T > max(h, 4); got T={} h={}", T, h));
    }

    std::vector<double> d(T);
    for (std::size_t t = 0; t < T; ++t) {
        if (options.loss == DmLoss::Squared) {
            d[t] = errors_a[t] * errors_a[t] - errors_b[t] * errors_b[t];
        } else {
            d[t] = std::abs(errors_a[t]) - std::abs(errors_b[t]);
        }
    }
    const double n = static_cast<double>(T);
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= n;

    // biased (1/T) autocovariances of the loss differential
    const auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = lag; t < T; ++t) s += (d[t] - mean) * (d[t - lag] - mean);
        return s / n;
    };

    DmReport report;
    report.h = h;
    report.n_obs = T;
    const double gamma0 = autocov(0);
    if (!(gamma0 > 0.0)) {
        report.degenerate = true;
        report.statistic = std::numeric_limits<double>::quiet_NaN();
        report.p_value = 1.0;
        return report;
    }
    double long_run = gamma0;
    for (std::size_t k = 1; k < h; ++k) long_run += 2.0 * autocov(k);
    if (!(long_run > 0.0)) {
        long_run = gamma0;
        report.variance_fallback = true;
    }

    const double dm = mean / std::sqrt(long_run / n);
    if (options.variant == DmVariant::Harvey) {
        const double hd = static_cast<double>(h);
        const double correction = std::sqrt((n + 1.0 - 2.0 * hd + hd * (hd - 1.0) / n) / n);
        report.statistic = dm * correction;
        const boost::math::students_t dist(n - 1.0);
        report.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(report.statistic)));
    } else {
        report.statistic = dm;
        report.p_value = std::erfc(std::abs(dm) / std::sqrt(2.0));
    }
    report.p_value = std::clamp(report.p_value, 0.0, 1.0);
    return report;
}

std::array<ModelPair, 5> dm_pairs(ForecastMode mode) {
    using K = ModelKind;
    if (mode == ForecastMode::Single) {
        return {{{K::Mlp, K::Cnn}, {K::Lstm, K::Gru}, {K::Mlp, K::Lstm}, {K::Lstm, K::Cnn}, {K::Cnn, K::Gru}}};
    }
    return {{{K::Mlp, K::Cnn}, {K::Lstm, K::Gru}, {K::Mlp, K::Lstm}, {K::Lstm, K::Cnn}, {K::Mlp, K::Gru}}};
}

std::string pair_label(const ModelPair& pair) {
    return fmt::format("{}-{}", to_string(pair.first), to_string(pair.second));
}

std::vector<PairReport> pairwise_dm_matrix(const std::map<ModelKind, std::vector<double>>& per_model_errors,
                                           std::size_t h, ForecastMode mode, const DmOptions& options) {
    std::vector<PairReport> out;
    for (const auto& pair : dm_pairs(mode)) {
        const auto a = per_model_errors.find(pair.first);
        const auto b = per_model_errors.find(pair.second);
        if (a == per_model_errors.end() || b == per_model_errors.end()) {
            throw MalformedInput("DM pair " + pair_label(pair) + " is missing a model's errors");
        }
        out.push_back({pair, dm_test(a->second, b->second, h, options)});
    }
    return out;
}

bool Ranking::above(ModelKind a, ModelKind b) const {
    for (const auto& v : verdicts) {
        const bool matches = (v.pair.first == a && v.pair.second == b) || (v.pair.first == b && v.pair.second == a);
        if (matches && v.winner == a) return true;
    }
    return false;
}

Ranking majority_vote_ranking(const std::vector<std::vector<PairReport>>& per_stock, double alpha) {
    Ranking ranking;
    for (const auto& stock : per_stock) {
        for (const auto& pr : stock) {
            auto it = std::find_if(ranking.verdicts.begin(), ranking.verdicts.end(),
                                   [&](const PairVerdict& v) { return v.pair == pr.pair; });
            if (it == ranking.verdicts.end()) {
                ranking.verdicts.push_back({pr.pair, 0, 0, 0, std::nullopt});
                it = std::prev(ranking.verdicts.end());
            }
            ++it->stocks;
            const auto& r = pr.report;
            if (r.degenerate || !(r.p_value < alpha)) continue;
            if (r.statistic < 0.0) {
                ++it->first_wins;
            } else if (r.statistic > 0.0) {
                ++it->second_wins;
            }
        }
    }
    for (auto& v : ranking.verdicts) {
        if (2 * v.first_wins > v.stocks) {
            v.winner = v.pair.first;
        } else if (2 * v.second_wins > v.stocks) {
            v.winner = v.pair.second;
        }
    }
    return ranking;
}

}  // namespace stockcast
