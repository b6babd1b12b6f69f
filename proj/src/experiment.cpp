#include "stockcast/experiment.hpp"

#include "stockcast/errors.hpp"
#include "stockcast/optim.hpp"
#include "stockcast/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace stockcast {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348'5546'464cULL;
constexpr std::uint64_t kRedrawStream = 0x5245'4452'4157ULL;

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidConfig("epochs must be at least 1");
    if (batch_size < 1) throw InvalidConfig("batch_size must be at least 1");
    if (origin_stride < 1) throw InvalidConfig("origin_stride must be at least 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidConfig("lr must be a positive finite number");
}

namespace {

std::vector<std::size_t> silent_outputs(const Model& model, std::span<const Sample> samples) {
    std::vector<bool> silent(model.output_arity(), !samples.empty());
    for (const auto& s : samples) {
        const auto y = model.predict(s.input);
        for (std::size_t j = 0; j < y.size(); ++j) silent[j] = silent[j] && y[j] == 0.0;
    }
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < silent.size(); ++j) {
        if (silent[j]) out.push_back(j);
    }
    return out;
}

bool gradient_vanishes(const Model& model, std::span<const Sample> samples) {
    ParamSet grads = model.params().zeros_like();
    for (const auto& s : samples) model.accumulate_gradient(s.input, s.target, grads);
    for (const auto& entry : grads) {
        for (double g : entry.second.data()) {
            if (g != 0.0) return false;
        }
    }
    return true;
}

// Redraws the incoming output weights of units that are zero on every sample.
std::size_t revive_silent_outputs(Model& model, std::span<const Sample> samples, Rng& rng, std::size_t rounds) {
    if (!model.params().contains("out.W")) return 0;
    Tensor& weight = model.params().get("out.W");
    const std::size_t fan_in = weight.dim(1);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::size_t redrawn = 0;
    for (std::size_t round = 0; round < rounds; ++round) {
        const auto silent = silent_outputs(model, samples);
        if (silent.empty()) break;
        for (const auto j : silent) {
            for (std::size_t k = 0; k < fan_in; ++k) weight.at(j, k) = rng.uniform(-bound, bound);
            ++redrawn;
        }
    }
    return redrawn;
}

std::size_t redraw_dead_start(Model& model, const ArchSpec& spec, std::span<const Sample> samples,
                              const TrainConfig& cfg, Rng& redraw) {
    std::size_t n = 0;
    while (n < cfg.max_init_redraws && gradient_vanishes(model, samples)) {
        model = build_model(spec, redraw.next());
        ++n;
    }
    return n + revive_silent_outputs(model, samples, redraw, cfg.max_init_redraws);
}

}  // namespace

bool is_dead(const Model& model, std::span<const Sample> samples) {
    return !silent_outputs(model, samples).empty() || gradient_vanishes(model, samples);
}

Model build_trainable_model(const ArchSpec& spec, std::uint64_t seed, std::span<const Sample> samples,
                            const TrainConfig& cfg, std::size_t* redraws) {
    Rng redraw = Rng(seed).split(kRedrawStream);
    Model model = build_model(spec, seed);
    std::size_t n = 0;
    if (cfg.redraw_dead_init) n = redraw_dead_start(model, spec, samples, cfg, redraw);
    if (redraws) *redraws = n;
    return model;
}

TrainedModel train_from_seed(const ArchSpec& spec, std::uint64_t seed, std::span<const Sample> samples,
                             const TrainConfig& cfg) {
    Rng redraw = Rng(seed).split(kRedrawStream);
    Model model = build_model(spec, seed);
    std::size_t n = 0;
    for (std::size_t restart = 0;; ++restart) {
        if (cfg.redraw_dead_init) n += redraw_dead_start(model, spec, samples, cfg, redraw);
        auto result = train(model, samples, cfg);
        if (!cfg.redraw_dead_init || restart >= cfg.max_init_redraws || !is_dead(model, samples)) {
            return {std::move(model), std::move(result), n};
        }
        model = build_model(spec, redraw.next());
        ++n;
    }
}

TrainResult train(Model& model, std::span<const Sample> samples, const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw InvalidConfig("training needs at least one sample");

    Rng shuffle_rng = Rng(cfg.seed).split(kShuffleStream);
    OptimizerState opt = make_adam_state(model.params(), AdamConfig{cfg.lr});
    ParamSet grads = model.params().zeros_like();
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.loss_history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            grads.fill(0.0);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& s = samples[order[i]];
                batch_loss += model.accumulate_gradient(s.input, s.target, grads);
            }
            if (!std::isfinite(batch_loss)) {
                throw NonFiniteLoss(fmt::format("{} diverged at epoch {} (batch starting at {}): loss {}",
                                                to_string(model.kind()), epoch + 1, start, batch_loss));
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (auto& entry : grads) {
                for (auto& g : entry.second.data()) g *= inv;
            }
            adam_step(model.params(), grads, opt);
            epoch_loss += batch_loss;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(samples.size()));
    }

    double total = 0.0;
    for (const auto& s : samples) {
        const auto pred = model.predict(s.input);
        for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - s.target[i]) * (pred[i] - s.target[i]);
    }
    result.final_train_mse = total / static_cast<double>(samples.size() * model.output_arity());
    if (!std::isfinite(result.final_train_mse)) {
        throw NonFiniteLoss(fmt::format("{} produced a non-finite final train MSE", to_string(model.kind())));
    }
    return result;
}

EvalResult evaluate_run(const Model& model, std::span<const double> test_values, std::size_t w, std::size_t h,
                        Strategy strategy, std::size_t origin_stride) {
    EvalResult r;
    r.traces = rolling_test_forecast(model, test_values, w, h, strategy, origin_stride);
    r.test_mse = traces_mse(r.traces);
    return r;
}

PreparedSeries prepare_series(const TimeSeries& ts, Date cutoff, ScalerScope scope) {
    const auto split = split_by_date(ts, cutoff);
    PreparedSeries p;
    p.symbol = ts.symbol;
    p.scaler = fit_scaler(scope == ScalerScope::Train ? std::span<const double>(split.train.values)
                                                      : std::span<const double>(ts.values));
    p.train = scale(p.scaler, split.train.values);
    p.test = scale(p.scaler, split.test.values);
    return p;
}

std::vector<CellSpec> GridSpec::cells() const {
    std::vector<CellSpec> out;
    for (const auto& stock : stocks) {
        for (const auto model : models) {
            const auto ov = overrides.find(model);
            for (const auto w : windows) {
                for (const auto h : horizons) {
                    out.push_back({stock, model, w, h, strategy, ov == overrides.end() ? Overrides{} : ov->second});
                }
            }
        }
    }
    return out;
}

RunResult execute_run(const CellSpec& cell, const PreparedSeries& series, const TrainConfig& cfg,
                      std::uint64_t seed) {
    RunResult run;
    run.seed = seed;
    try {
        const std::size_t model_h = cell.strategy == Strategy::Direct ? cell.h : 1;
        const auto samples = make_direct_samples(series.train, cell.w, model_h);
        TrainConfig run_cfg = cfg;
        run_cfg.seed = seed;
        auto trained = train_from_seed({cell.model, cell.w, model_h, cell.overrides}, seed, samples, run_cfg);
        auto eval = evaluate_run(trained.model, series.test, cell.w, cell.h, cell.strategy, cfg.origin_stride);
        run.init_redraws = trained.redraws;
        run.final_train_mse = trained.result.final_train_mse;
        run.loss_history = std::move(trained.result.loss_history);
        run.test_mse = eval.test_mse;
        run.traces = std::move(eval.traces);
    } catch (const Error& e) {
        run.failed = true;
        run.error = e.what();
    }
    return run;
}

CellResult summarize_cell(CellSpec spec, std::vector<RunResult> runs) {
    CellResult cell;
    cell.spec = std::move(spec);
    std::vector<double> errors;
    for (const auto& r : runs) {
        if (r.failed) {
            ++cell.failed_runs;
        } else {
            errors.push_back(r.test_mse);
        }
    }
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (errors.size() >= 2) {
        cell.interval = loss_interval(errors);
    } else if (errors.size() == 1) {
        cell.interval = {errors.front(), nan, 1};
    } else {
        cell.interval = {nan, nan, 0};
    }
    cell.runs = std::move(runs);
    return cell;
}

std::vector<CellResult> run_grid(const GridSpec& grid, const std::map<std::string, PreparedSeries>& series,
                                 const TrainConfig& cfg, std::size_t n_runs, std::uint64_t master_seed,
                                 std::size_t jobs, const ProgressFn& progress) {
    cfg.validate();
    if (n_runs == 0) throw InvalidConfig("n_runs must be at least 1");
    const auto cells = grid.cells();
    for (const auto& c : cells) {
        if (!series.count(c.stock)) throw MissingDataFile("no prepared series for stock '" + c.stock + "'");
    }

    const std::size_t total = cells.size() * n_runs;
    std::vector<RunResult> runs(total);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    const auto worker = [&] {
        for (std::size_t task = next++; task < total; task = next++) {
            const auto& cell = cells[task / n_runs];
            runs[task] = execute_run(cell, series.at(cell.stock), cfg, master_seed + task % n_runs);
            const std::size_t finished = ++done;
            if (progress) {
                const std::lock_guard lock(progress_mutex);
                progress(finished, total);
            }
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, total));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    std::vector<CellResult> results;
    results.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<RunResult> cell_runs(std::make_move_iterator(runs.begin() + static_cast<std::ptrdiff_t>(c * n_runs)),
                                         std::make_move_iterator(runs.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_runs)));
        results.push_back(summarize_cell(cells[c], std::move(cell_runs)));
    }
    return results;
}

}  // namespace stockcast
