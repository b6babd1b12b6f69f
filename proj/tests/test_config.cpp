#include "stockcast/config.hpp"
#include "stockcast/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace stockcast;

namespace {

ParseError parse_error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("expected a ParseError for: " << text);
    return ParseError(0, "", "");
}

bool echo_has(const ExperimentConfig& cfg, const std::string& line) {
    const auto echo = config_echo(cfg);
    return std::find(echo.begin(), echo.end(), line) != echo.end();
}

}  // namespace

TEST_CASE("minimal config materializes defaults") {
    const auto cfg = parse_config_text("data_dir = prices\nstocks = ACC\n");
    CHECK(cfg.data_dir == "prices");
    CHECK(cfg.stocks == std::vector<std::string>{"ACC"});
    CHECK(cfg.cutoff == Date{2017, 1, 1});
    CHECK(cfg.mode == ForecastMode::Single);
    CHECK(cfg.windows == std::vector<std::size_t>{3, 5, 7, 9, 11, 13, 15});
    CHECK(cfg.horizons == std::vector<std::size_t>{1});
    CHECK(cfg.n_runs == 5);
    CHECK(cfg.strategy == Strategy::Direct);
    CHECK(cfg.models.size() == 4);
    CHECK(cfg.train.epochs == 100);
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.train.lr == 1e-3);
    CHECK(cfg.train.shuffle);
    CHECK(cfg.train.scaler_scope == ScalerScope::Train);
    CHECK(cfg.grid().cells().size() == 28);

    CHECK(echo_has(cfg, "cutoff=2017-01-01"));
    CHECK(echo_has(cfg, "windows=3,5,7,9,11,13,15"));
    CHECK(echo_has(cfg, "n_runs=5"));
    CHECK(echo_has(cfg, "epochs=100"));
    CHECK(echo_has(cfg, "lr=0.001"));
    CHECK(echo_has(cfg, "loss_interval_std=sample(n-1)"));

    const auto all = parse_config_text("");
    CHECK(all.stocks.size() == 10);
    CHECK(all.stocks.front() == "ACC");
}

TEST_CASE("multi mode defaults") {
    const auto cfg = parse_config_text("mode = multi\n");
    CHECK(cfg.windows == std::vector<std::size_t>{30, 60, 90});
    CHECK(cfg.horizons == std::vector<std::size_t>{7, 14, 21, 28});
    CHECK(cfg.strategy == Strategy::Direct);
    CHECK(cfg.grid().cells().size() * cfg.n_runs == 2400);
}

TEST_CASE("settings and comments are parsed") {
    const auto cfg = parse_config_text(
        "# experiment\n"
        "\n"
        "  mode = multi  \n"
        "windows = 30\n"
        "horizons = 7, 14\n"
        "strategy = iterative\n"
        "models = mlp, LSTM\n"
        "n_runs = 3\n"
        "epochs = 7\n"
        "lr = 0.0005\n"
        "shuffle = false\n"
        "origin_stride = 7\n"
        "scaler_scope = full\n"
        "master_seed = 99\n"
        "cutoff = 2016-06-30\n"
        "arch.lstm.hidden = 32,16\n"
        "arch.mlp.output_activation = linear\n",
        "/base");
    CHECK(cfg.horizons == std::vector<std::size_t>{7, 14});
    CHECK(cfg.strategy == Strategy::Iterative);
    CHECK(cfg.models == std::vector<ModelKind>{ModelKind::Mlp, ModelKind::Lstm});
    CHECK(cfg.n_runs == 3);
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.train.lr == 0.0005);
    CHECK_FALSE(cfg.train.shuffle);
    CHECK(cfg.train.origin_stride == 7);
    CHECK(cfg.train.scaler_scope == ScalerScope::Full);
    CHECK(cfg.master_seed == 99);
    CHECK(cfg.cutoff == Date{2016, 6, 30});
    CHECK(cfg.overrides.at(ModelKind::Lstm).at("hidden") == "32,16");
    CHECK(cfg.resolved_data_dir() == std::filesystem::path("/base/data"));
    CHECK(cfg.resolved_output_dir() == std::filesystem::path("/base/results"));
    CHECK(echo_has(cfg, "arch.LSTM.hidden=32,16"));
}

TEST_CASE("config errors name the field and line") {
    const auto unknown = parse_error_of("stocks = ACC\nwindow = 3\n");
    CHECK(unknown.field() == "window");
    CHECK(unknown.line() == 2);
    CHECK(std::string(unknown.what()).find("window") != std::string::npos);

    CHECK(parse_error_of("epochs = 10\nepochs = 20\n").line() == 2);
    CHECK(parse_error_of("epochs = ten\n").field() == "epochs");
    CHECK(parse_error_of("epochs = 0\n").field() == "epochs");
    CHECK(parse_error_of("lr = -1\n").field() == "lr");
    CHECK(parse_error_of("mode = weekly\n").field() == "mode");
    CHECK(parse_error_of("cutoff = 2017/01/01\n").field() == "cutoff");
    CHECK(parse_error_of("models = mlp, rnn\n").field() == "models");
    CHECK(parse_error_of("models = mlp, mlp\n").field() == "models");
    CHECK(parse_error_of("stocks = ACC, ACC\n").field() == "stocks");
    CHECK(parse_error_of("windows = 3, 0\n").field() == "windows");
    CHECK(parse_error_of("horizons = 7\n").field() == "horizons");
    CHECK(parse_error_of("shuffle = maybe\n").field() == "shuffle");
    CHECK(parse_error_of("epochs\n").line() == 1);

    const auto arch = parse_error_of("stocks = ACC\narch.mlp.hiden = 8,8\n");
    CHECK(arch.line() == 2);
    CHECK(arch.field() == "arch.mlp.hiden");
    CHECK(parse_error_of("arch.cnn.auto_kernel = false\nwindows = 3\n").field() == "arch.cnn.auto_kernel");
    CHECK(parse_error_of("arch.rnn.hidden = 8\n").field() == "arch.rnn.hidden");
}

TEST_CASE("parse_config checks files") {
    test_support::TempDir dir;
    CHECK_THROWS_AS(parse_config(dir / "absent.cfg"), FileNotFound);

    std::filesystem::create_directories(dir / "data");
    test_support::write_series_csv(dir / "data/AAA.csv",
                                   test_support::random_walk("AAA", {2016, 12, 1}, 60, 1));
    test_support::write_text(dir / "run.cfg", "stocks = AAA, BBB\n");
    try {
        parse_config(dir / "run.cfg");
        FAIL("expected MissingDataFile");
    } catch (const MissingDataFile& e) {
        CHECK(std::string(e.what()).find("BBB") != std::string::npos);
        CHECK(std::string(e.what()).find("AAA") == std::string::npos);
    }
    test_support::write_text(dir / "run.cfg", "stocks = AAA\n");
    const auto cfg = parse_config(dir / "run.cfg");
    CHECK(cfg.resolved_data_dir() == dir.path() / "data");
}
