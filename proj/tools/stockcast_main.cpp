#include "stockcast/commands.hpp"
#include "stockcast/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <thread>

int main(int argc, char** argv) {
    using namespace stockcast;

    CLI::App app{"stockcast: windowed stock forecasting with MLP, CNN, GRU and LSTM models"};
    app.require_subcommand(1);

    std::filesystem::path config_path;
    RunOptions run_opts;
    run_opts.jobs = std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "train and evaluate the configured grid");
    run->add_option("--config,-c", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("--jobs,-j", run_opts.jobs, "worker threads")->check(CLI::PositiveNumber);
    auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides the config file)");
    run->add_flag("--all-traces", run_opts.all_traces, "emit forecast traces for every seed");

    DmCommandOptions dm_opts;
    std::string mode = "single", loss = "squared", variant = "harvey";
    std::filesystem::path dm_out;
    double alpha = 0.0;
    std::size_t window = 0;
    auto* dm = app.add_subcommand("dm", "pairwise Diebold-Mariano tests from a per-run errors CSV");
    dm->add_option("--errors,-e", dm_opts.errors, "errors.csv written by 'run'")->required()->check(CLI::ExistingFile);
    dm->add_option("--mode", mode, "single or multi (selects the model pairs)")
        ->check(CLI::IsMember({"single", "multi"}));
    auto* alpha_opt = dm->add_option("--alpha", alpha, "significance level (default 0.0001 single, 0.001 multi)");
    auto* out_opt = dm->add_option("--out,-o", dm_out, "output CSV (stdout if omitted)");
    dm->add_option("--loss", loss, "loss differential")->check(CLI::IsMember({"squared", "absolute"}));
    dm->add_option("--variant", variant, "harvey (t reference) or normal")->check(CLI::IsMember({"harvey", "normal"}));
    auto* window_opt = dm->add_option("--window,-w", window, "only use cells with this backcast window");

    std::string fault_target;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every layer and model");
    // hidden test hook
    gradcheck->add_option("--inject-fault", fault_target)->group("")->check(CLI::IsMember({"dense"}));

    std::filesystem::path validate_config;
    auto* validate = app.add_subcommand("validate-data", "check the configured stock files");
    validate->add_option("--config,-c", validate_config, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (*seed_opt) run_opts.seed = seed;
            return cmd_run(config_path, run_opts, std::cout, std::cerr);
        }
        if (*dm) {
            dm_opts.mode = parse_forecast_mode(mode);
            dm_opts.dm = {parse_dm_loss(loss), parse_dm_variant(variant)};
            if (*alpha_opt) dm_opts.alpha = alpha;
            if (*out_opt) dm_opts.out = dm_out;
            if (*window_opt) dm_opts.window = window;
            return cmd_dm(dm_opts, std::cout, std::cerr);
        }
        if (*gradcheck) return cmd_gradcheck(std::cout, fault_target == "dense");
        if (*validate) return cmd_validate_data(validate_config, std::cout, std::cerr);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
