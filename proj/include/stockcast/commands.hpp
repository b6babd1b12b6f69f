#pragma once

#include "stockcast/config.hpp"
#include "stockcast/evaluation.hpp"
#include "stockcast/experiment.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stockcast {

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string results_csv(const ExperimentConfig& cfg, const std::vector<CellResult>& cells);
std::string errors_csv(const ExperimentConfig& cfg, const std::vector<CellResult>& cells);
/// Best seed per cell (lowest test MSE) unless `all_runs`.
nlohmann::json traces_json(const ExperimentConfig& cfg, const std::vector<CellResult>& cells,
                           const std::map<std::string, PreparedSeries>& series, bool all_runs);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    bool all_traces = false;
};

/// Loads data, runs the grid and writes results.csv, errors.csv and traces.json
/// into the configured output directory. Returns 0 iff no cell had a failed run.
int cmd_run(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& out,
            std::ostream& err);

/// One row of the per-run errors CSV.
struct ErrorRecord {
    std::string stock;
    ModelKind model = ModelKind::Mlp;
    std::size_t w = 0;
    std::size_t h = 0;
    std::uint64_t seed = 0;
    std::size_t origin = 0;
    std::size_t step = 0;
    double abs_error = 0.0;
};

/// Parses an errors CSV written by `cmd_run`. Throws MalformedInput.
std::vector<ErrorRecord> parse_errors_csv(std::istream& in);

/// DM rows for one (stock, w, h) cell group.
struct DmGroup {
    std::string stock;
    std::size_t w = 0;
    std::size_t h = 0;
    std::vector<PairReport> reports;
};

/// Averages each model's absolute errors over seeds at every (origin, step),
/// concatenates them in origin-then-step order and runs the mode's five pairs.
/// Throws MalformedInput when series are missing or misaligned.
std::vector<DmGroup> dm_from_errors(const std::vector<ErrorRecord>& records, ForecastMode mode,
                                    const DmOptions& options, std::optional<std::size_t> window = {});

std::string dm_csv(const std::vector<DmGroup>& groups, ForecastMode mode, double alpha, const DmOptions& options);

/// Significance level used when none is given: 1e-4 single-step, 1e-3 multi-step.
double default_alpha(ForecastMode mode);

struct DmCommandOptions {
    std::filesystem::path errors;
    std::optional<std::filesystem::path> out;
    ForecastMode mode = ForecastMode::Single;
    std::optional<double> alpha;
    DmOptions dm;
    std::optional<std::size_t> window;
};

int cmd_dm(const DmCommandOptions& options, std::ostream& out, std::ostream& err);

/// Runs the gradient-check suite and prints one line per check plus the worst
/// relative error per layer kind. `inject_dense_fault` corrupts the dense backward.
int cmd_gradcheck(std::ostream& out, bool inject_dense_fault = false);

/// Loads every configured stock and reports row counts, dropped rows and split sizes.
int cmd_validate_data(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

}  // namespace stockcast
