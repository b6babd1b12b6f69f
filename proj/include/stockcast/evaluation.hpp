#pragma once

#include "stockcast/models.hpp"
#include "stockcast/windowing.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stockcast {

/// Sample mean and (n-1) standard deviation of per-run test errors.
struct LossInterval {
    double mean = 0.0;
    double std = 0.0;
    std::size_t n_runs = 0;
};

/// Throws TooFewRuns for fewer than two values, std::invalid_argument on non-finite input.
LossInterval loss_interval(std::span<const double> run_errors);

enum class DmLoss { Squared, Absolute };
/// Harvey: small-sample corrected statistic against t(T-1). Normal: raw statistic against N(0,1).
enum class DmVariant { Harvey, Normal };

std::string_view to_string(DmLoss loss);
std::string_view to_string(DmVariant variant);
DmLoss parse_dm_loss(std::string_view text);
DmVariant parse_dm_variant(std::string_view text);

struct DmOptions {
    DmLoss loss = DmLoss::Squared;
    DmVariant variant = DmVariant::Harvey;
};

struct DmReport {
    /// Negative when the first error sequence has the smaller loss. NaN if degenerate.
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t h = 1;
    std::size_t n_obs = 0;
    /// The loss differential has no variance: the forecasts are indistinguishable.
    bool degenerate = false;
    /// The long-run variance was non-positive and gamma_0 was used instead.
    bool variance_fallback = false;
};

/// Diebold-Mariano test on aligned forecast errors. Requires T > max(h, 4)
/// (TooFewObservations) and equal lengths (ArityMismatch).
DmReport dm_test(std::span<const double> errors_a, std::span<const double> errors_b, std::size_t h,
                 const DmOptions& options = {});

using ModelPair = std::pair<ModelKind, ModelKind>;

/// Column order of the single-step and multi-step significance tables.
std::array<ModelPair, 5> dm_pairs(ForecastMode mode);
std::string pair_label(const ModelPair& pair);

struct PairReport {
    ModelPair pair;
    DmReport report;
};

/// One report per table pair, in table order. Throws MalformedInput when a
/// required model is missing.
std::vector<PairReport> pairwise_dm_matrix(const std::map<ModelKind, std::vector<double>>& per_model_errors,
                                           std::size_t h, ForecastMode mode, const DmOptions& options = {});

struct PairVerdict {
    ModelPair pair;
    std::size_t first_wins = 0;
    std::size_t second_wins = 0;
    std::size_t stocks = 0;
    /// Set when one side wins significantly on strictly more than half of the stocks.
    std::optional<ModelKind> winner;
};

struct Ranking {
    std::vector<PairVerdict> verdicts;

    /// True when `a` is ranked above `b` by a majority verdict.
    bool above(ModelKind a, ModelKind b) const;
};

/// A significant win on a stock needs p < alpha and the favourable sign.
Ranking majority_vote_ranking(const std::vector<std::vector<PairReport>>& per_stock, double alpha);

}  // namespace stockcast
