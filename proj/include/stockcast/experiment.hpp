#pragma once

#include "stockcast/evaluation.hpp"
#include "stockcast/ingest.hpp"
#include "stockcast/models.hpp"
#include "stockcast/preprocess.hpp"
#include "stockcast/windowing.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stockcast {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    bool shuffle = true;
    std::size_t origin_stride = 1;
    ScalerScope scaler_scope = ScalerScope::Train;
    /// Redraw an initialization that is dead (see `is_dead`) before or after training.
    bool redraw_dead_init = true;
    std::size_t max_init_redraws = 16;

    /// Throws InvalidConfig when epochs, batch_size, origin_stride or lr are out of range.
    void validate() const;
};

struct TrainResult {
    /// Mean per-sample training loss of each epoch.
    std::vector<double> loss_history;
    /// MSE over all training samples with the final parameters.
    double final_train_mse = 0.0;
};

/// Mini-batch Adam on MSE. Batch gradients are averaged over the batch; the
/// sample order is reshuffled every epoch from `cfg.seed`. Throws NonFiniteLoss
/// as soon as a batch loss is NaN or infinite.
TrainResult train(Model& model, std::span<const Sample> samples, const TrainConfig& cfg);

/// True when some output is exactly zero on every sample (a relu unit that is
/// off everywhere never trains) or the summed gradient vanishes in every coordinate.
bool is_dead(const Model& model, std::span<const Sample> samples);

/// Builds the model for `seed`. With `cfg.redraw_dead_init`, a model whose
/// gradient vanishes is redrawn from seeds derived from `seed`, and output units
/// that are zero on every sample get their incoming weights redrawn; each loop
/// is capped at `cfg.max_init_redraws`. The number of redraws is stored in `redraws`.
Model build_trainable_model(const ArchSpec& spec, std::uint64_t seed, std::span<const Sample> samples,
                            const TrainConfig& cfg, std::size_t* redraws = nullptr);

struct TrainedModel {
    Model model;
    TrainResult result;
    std::size_t redraws = 0;
};

/// Builds (as `build_trainable_model`) and trains the model for `seed`. With
/// `cfg.redraw_dead_init`, a model that is dead after training is rebuilt from
/// the next derived seed and trained again, at most `cfg.max_init_redraws` times.
TrainedModel train_from_seed(const ArchSpec& spec, std::uint64_t seed, std::span<const Sample> samples,
                             const TrainConfig& cfg);

struct EvalResult {
    double test_mse = 0.0;
    std::vector<ForecastTrace> traces;
};

/// Rolling-origin forecasts over `test_values` (already normalized). Throws WindowTooLarge.
EvalResult evaluate_run(const Model& model, std::span<const double> test_values, std::size_t w, std::size_t h,
                        Strategy strategy, std::size_t origin_stride = 1);

/// Normalized train/test partitions of one stock.
struct PreparedSeries {
    std::string symbol;
    Scaler scaler;
    std::vector<double> train;
    std::vector<double> test;
};

PreparedSeries prepare_series(const TimeSeries& ts, Date cutoff, ScalerScope scope);

struct CellSpec {
    std::string stock;
    ModelKind model = ModelKind::Mlp;
    std::size_t w = 3;
    std::size_t h = 1;
    Strategy strategy = Strategy::Direct;
    Overrides overrides;
};

struct RunResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    std::size_t init_redraws = 0;
    double final_train_mse = 0.0;
    double test_mse = 0.0;
    std::vector<double> loss_history;
    std::vector<ForecastTrace> traces;
};

/// Trains one seeded model for a cell and scores it on the stock's test partition.
/// Failures (divergence, unusable windows) are captured in the result.
RunResult execute_run(const CellSpec& cell, const PreparedSeries& series, const TrainConfig& cfg,
                      std::uint64_t seed);

struct CellResult {
    CellSpec spec;
    std::vector<RunResult> runs;
    /// Over the successful runs; std is NaN with fewer than two of them.
    LossInterval interval;
    std::size_t failed_runs = 0;
};

struct GridSpec {
    std::vector<std::string> stocks;
    std::vector<ModelKind> models;
    std::vector<std::size_t> windows;
    std::vector<std::size_t> horizons;
    Strategy strategy = Strategy::Direct;
    std::map<ModelKind, Overrides> overrides;

    std::vector<CellSpec> cells() const;
};

/// Called after each finished run with (completed, total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/// Every cell gets `n_runs` runs with seeds master_seed + i. Runs execute on a
/// pool of `jobs` threads; results do not depend on scheduling.
std::vector<CellResult> run_grid(const GridSpec& grid, const std::map<std::string, PreparedSeries>& series,
                                 const TrainConfig& cfg, std::size_t n_runs, std::uint64_t master_seed,
                                 std::size_t jobs = 1, const ProgressFn& progress = {});

/// Aggregates finished runs into a cell result.
CellResult summarize_cell(CellSpec spec, std::vector<RunResult> runs);

}  // namespace stockcast
