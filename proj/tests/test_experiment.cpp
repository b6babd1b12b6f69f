#include "stockcast/errors.hpp"
#include "stockcast/experiment.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace stockcast;

namespace {

std::vector<Sample> constant_target_samples(std::size_t n, std::size_t w, double target) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Sample> out(n);
    for (auto& s : out) {
        s.input.resize(w);
        for (auto& v : s.input) v = u(rng);
        s.target = {target};
    }
    return out;
}

Model echo_model() {
    Model m = build_mlp(1, 1, 0, {{"hidden", "1"}, {"output_activation", "linear"}});
    m.params().fill(0.0);
    m.params().get("dense1.W")[0] = 1.0;
    m.params().get("out.W")[0] = 1.0;
    return m;
}

Model constant_model(std::size_t w, std::size_t h, double value) {
    Model m = build_mlp(w, h, 0, {{"output_activation", "linear"}});
    m.params().fill(0.0);
    for (auto& v : m.params().get("out.b").data()) v = value;
    return m;
}

PreparedSeries synthetic_series(const std::string& symbol, std::uint64_t seed) {
    const auto ts = test_support::random_walk(symbol, {2016, 7, 1}, 260, seed);
    return prepare_series(ts, kDefaultCutoff, ScalerScope::Train);
}

TrainConfig quick_config() {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    return cfg;
}

}  // namespace

TEST_CASE("MLP fits a constant target") {
    const auto samples = constant_target_samples(512, 3, 0.5);
    TrainConfig cfg;
    cfg.epochs = 200;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Model m = build_trainable_model({ModelKind::Mlp, 3, 1, {}}, seed, samples, cfg);
        const auto result = train(m, samples, cfg);
        CHECK(result.final_train_mse < 1e-4);
        CHECK(result.loss_history.size() == 200);
        CHECK(result.loss_history.back() < result.loss_history.front());
        CHECK(m.predict(samples[0].input)[0] == doctest::Approx(0.5).epsilon(0.02));
    }
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    Model m = build_mlp(3, 1);
    const auto samples = constant_target_samples(4, 3, 0.5);
    CHECK_THROWS_AS(train(m, samples, cfg), InvalidConfig);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = {};
    cfg.lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = {};
    cfg.origin_stride = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}

TEST_CASE("train preconditions and divergence") {
    TrainConfig cfg = quick_config();
    Model m = build_mlp(3, 1);
    CHECK_THROWS_AS(train(m, std::vector<Sample>{}, cfg), Error);
    CHECK_THROWS_AS(train(m, constant_target_samples(4, 2, 0.5), cfg), ArityMismatch);

    Model lin = build_mlp(3, 1, 0, {{"output_activation", "linear"}});
    CHECK_THROWS_AS(train(lin, constant_target_samples(8, 3, 1e300), cfg), NonFiniteLoss);
}

TEST_CASE("training is deterministic") {
    const auto samples = constant_target_samples(50, 4, 0.3);
    TrainConfig cfg = quick_config();
    cfg.epochs = 10;
    for (const auto kind : kAllModelKinds) {
        const ArchSpec spec{kind, 4, 1, kind == ModelKind::Gru || kind == ModelKind::Lstm
                                            ? Overrides{{"hidden", "8,4"}}
                                            : Overrides{}};
        Model a = build_trainable_model(spec, 5, samples, cfg);
        Model b = build_trainable_model(spec, 5, samples, cfg);
        const auto ra = train(a, samples, cfg);
        const auto rb = train(b, samples, cfg);
        CHECK(ra.loss_history == rb.loss_history);
        CHECK(a.params() == b.params());
        for (double l : ra.loss_history) {
            CHECK(std::isfinite(l));
            CHECK(l >= 0.0);
        }
    }
}

TEST_CASE("dead initializations are redrawn") {
    const auto samples = constant_target_samples(32, 3, 0.5);
    Model dead = build_mlp(3, 1);
    dead.params().get("out.b")[0] = -50.0;
    CHECK(is_dead(dead, samples));
    CHECK_FALSE(is_dead(build_mlp(3, 1, 0, {{"output_activation", "linear"}}), samples));

    auto wide = constant_target_samples(32, 3, 0.5);
    for (auto& s : wide) s.target.assign(28, 0.5);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Model partial = build_trainable_model({ModelKind::Mlp, 3, 28, {}}, seed, wide, TrainConfig{});
        CHECK_FALSE(is_dead(partial, wide));
        partial.params().get("out.b")[5] = -50.0;
        CHECK(is_dead(partial, wide));
    }

    std::size_t total_redraws = 0;
    TrainConfig cfg;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        std::size_t redraws = 0;
        const Model m = build_trainable_model({ModelKind::Mlp, 3, 1, {}}, seed, samples, cfg, &redraws);
        CHECK_FALSE(is_dead(m, samples));
        CHECK((redraws == 0) == (m.params() == build_mlp(3, 1, seed).params()));
        total_redraws += redraws;
    }
    CHECK(total_redraws > 0);

    cfg.redraw_dead_init = false;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        std::size_t redraws = 7;
        const Model m = build_trainable_model({ModelKind::Mlp, 3, 1, {}}, seed, samples, cfg, &redraws);
        CHECK(redraws == 0);
        CHECK(m.params() == build_mlp(3, 1, seed).params());
    }
}

TEST_CASE("runs that die during training are redrawn") {
    const auto samples = constant_target_samples(64, 3, 0.5);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.lr = 5.0;
    cfg.max_init_redraws = 4;
    const ArchSpec spec{ModelKind::Mlp, 3, 1, {}};
    const auto trained = train_from_seed(spec, 0, samples, cfg);
    CHECK(trained.redraws >= 1);
    CHECK((trained.redraws >= 4 || !is_dead(trained.model, samples)));
    const auto again = train_from_seed(spec, 0, samples, cfg);
    CHECK(again.redraws == trained.redraws);
    CHECK(again.model.params() == trained.model.params());

    cfg.redraw_dead_init = false;
    const auto kept = train_from_seed(spec, 0, samples, cfg);
    CHECK(kept.redraws == 0);
    CHECK(is_dead(kept.model, samples));

    cfg = {};
    cfg.epochs = 3;
    const auto healthy = train_from_seed(spec, 1, samples, cfg);
    Model direct = build_trainable_model(spec, 1, samples, cfg);
    const auto direct_result = train(direct, samples, cfg);
    CHECK(healthy.result.loss_history == direct_result.loss_history);
}

TEST_CASE("evaluate_run examples") {
    const std::vector<double> flat(40, 0.7);
    const auto echo = evaluate_run(echo_model(), flat, 1, 1, Strategy::Direct);
    CHECK(echo.test_mse == 0.0);
    for (const auto& t : echo.traces) CHECK(t.predictions == std::vector<double>{0.7});
    const auto echo_iter = evaluate_run(echo_model(), flat, 1, 5, Strategy::Iterative);
    CHECK(echo_iter.test_mse == 0.0);
    for (const auto& t : echo_iter.traces) CHECK(t.predictions == std::vector<double>(5, 0.7));

    const std::vector<double> zeros(30, 0.0);
    CHECK(evaluate_run(constant_model(3, 1, 0.5), zeros, 3, 1, Strategy::Direct).test_mse == 0.25);
    CHECK(evaluate_run(constant_model(3, 4, 0.5), zeros, 3, 4, Strategy::Direct).test_mse == 0.25);

    CHECK_THROWS_AS(evaluate_run(constant_model(3, 1, 0.5), std::vector<double>(3, 0.0), 3, 1, Strategy::Direct),
                    WindowTooLarge);
    CHECK_THROWS_AS(evaluate_run(constant_model(3, 1, 0.5), std::vector<double>(2, 0.0), 3, 1, Strategy::Direct),
                    WindowTooLarge);
}

TEST_CASE("test MSE is the mean of equal-length per-trace MSEs") {
    const auto series = synthetic_series("AAA", 4);
    const Model m = build_mlp(5, 3, 2);
    for (const std::size_t stride : {1u, 3u}) {
        const auto r = evaluate_run(m, series.test, 5, 3, Strategy::Direct, stride);
        double acc = 0.0;
        for (const auto& t : r.traces) {
            REQUIRE(t.predictions.size() == 3);
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) s += std::pow(t.predictions[i] - t.targets[i], 2);
            acc += s / 3.0;
        }
        CHECK(r.test_mse == doctest::Approx(acc / static_cast<double>(r.traces.size())).epsilon(1e-12));
    }
    const auto dense = evaluate_run(m, series.test, 5, 3, Strategy::Direct, 1);
    const auto sparse = evaluate_run(m, series.test, 5, 3, Strategy::Direct, 3);
    CHECK(sparse.traces.size() == (dense.traces.size() + 2) / 3);
}

TEST_CASE("prepare_series scales by the training range") {
    const auto ts = test_support::random_walk("AAA", {2016, 7, 1}, 260, 9);
    const auto p = prepare_series(ts, kDefaultCutoff, ScalerScope::Train);
    CHECK(p.train.size() == 185);
    CHECK(p.test.size() == 75);
    CHECK(*std::min_element(p.train.begin(), p.train.end()) == 0.0);
    CHECK(*std::max_element(p.train.begin(), p.train.end()) == 1.0);
    const auto full = prepare_series(ts, kDefaultCutoff, ScalerScope::Full);
    CHECK(full.scaler.min <= p.scaler.min);
    CHECK(full.scaler.max >= p.scaler.max);
}

TEST_CASE("grid cell counts") {
    GridSpec single;
    single.stocks = {"A", "B", "C", "D", "E", "F", "G", "H", "I", "J"};
    single.models = {std::begin(kAllModelKinds), std::end(kAllModelKinds)};
    single.windows = {3, 5, 7, 9, 11, 13, 15};
    single.horizons = {1};
    CHECK(single.cells().size() * 5 == 1400);

    GridSpec multi = single;
    multi.windows = {30, 60, 90};
    multi.horizons = {7, 14, 21, 28};
    CHECK(multi.cells().size() * 5 == 2400);
    CHECK(multi.cells().front().w == 30);
    CHECK(multi.cells()[1].h == 14);

    multi.overrides[ModelKind::Cnn] = {{"pool", "3"}};
    for (const auto& c : multi.cells()) CHECK(c.overrides.empty() == (c.model != ModelKind::Cnn));
}

TEST_CASE("run_grid is independent of scheduling and execution order") {
    std::map<std::string, PreparedSeries> series;
    series["AAA"] = synthetic_series("AAA", 1);
    series["BBB"] = synthetic_series("BBB", 2);
    GridSpec grid;
    grid.stocks = {"AAA", "BBB"};
    grid.models = {ModelKind::Mlp, ModelKind::Cnn};
    grid.windows = {3, 5};
    grid.horizons = {1};
    const auto cfg = quick_config();

    std::size_t last_done = 0, reported_total = 0;
    const auto serial = run_grid(grid, series, cfg, 3, 10, 1, [&](std::size_t done, std::size_t total) {
        last_done = done;
        reported_total = total;
    });
    CHECK(last_done == 24);
    CHECK(reported_total == 24);
    const auto parallel = run_grid(grid, series, cfg, 3, 10, 4);
    REQUIRE(serial.size() == 8);
    REQUIRE(parallel.size() == 8);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].spec.stock == parallel[i].spec.stock);
        CHECK(serial[i].interval.mean == parallel[i].interval.mean);
        CHECK(serial[i].interval.std == parallel[i].interval.std);
        REQUIRE(serial[i].runs.size() == 3);
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(serial[i].runs[r].seed == 10 + r);
            CHECK(serial[i].runs[r].test_mse == parallel[i].runs[r].test_mse);
            CHECK(serial[i].runs[r].loss_history == parallel[i].runs[r].loss_history);
        }
    }

    // runs executed one at a time in reverse, then aggregated
    const auto cells = grid.cells();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::vector<RunResult> runs(3);
        for (std::size_t r = 3; r-- > 0;) runs[r] = execute_run(cells[i], series.at(cells[i].stock), cfg, 10 + r);
        const auto cell = summarize_cell(cells[i], runs);
        CHECK(cell.interval.mean == serial[i].interval.mean);
        CHECK(cell.interval.std == serial[i].interval.std);
    }
}

TEST_CASE("failed runs are captured per cell") {
    std::map<std::string, PreparedSeries> series;
    series["AAA"] = synthetic_series("AAA", 1);
    GridSpec grid;
    grid.stocks = {"AAA"};
    grid.models = {ModelKind::Mlp};
    grid.windows = {3, 100};
    grid.horizons = {1};
    const auto cells = run_grid(grid, series, quick_config(), 2, 0, 2);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].failed_runs == 0);
    CHECK(cells[0].interval.n_runs == 2);
    CHECK(cells[1].failed_runs == 2);
    CHECK(cells[1].interval.n_runs == 0);
    CHECK(cells[1].runs[0].failed);
    CHECK_FALSE(cells[1].runs[0].error.empty());

    std::vector<RunResult> mixed(2);
    mixed[0].test_mse = 0.01;
    mixed[1].failed = true;
    const auto one = summarize_cell({}, mixed);
    CHECK(one.failed_runs == 1);
    CHECK(one.interval.mean == 0.01);
    CHECK(std::isnan(one.interval.std));
}
