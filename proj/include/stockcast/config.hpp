#pragma once

#include "stockcast/experiment.hpp"
#include "stockcast/ingest.hpp"
#include "stockcast/models.hpp"
#include "stockcast/windowing.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stockcast {

/// Fully materialized experiment configuration.
///
/// The file format is one `key = value` pair per line; blank lines and lines
/// starting with `#` are ignored. Lists are comma-separated. Architecture
/// overrides use `arch.<model>.<key> = value`, e.g. `arch.cnn.kernel_size = 2`.
struct ExperimentConfig {
    std::filesystem::path data_dir = "data";
    std::vector<std::string> stocks;
    Date cutoff = kDefaultCutoff;
    ForecastMode mode = ForecastMode::Single;
    std::vector<std::size_t> windows;
    std::vector<std::size_t> horizons;
    Strategy strategy = Strategy::Direct;
    std::vector<ModelKind> models;
    std::size_t n_runs = 5;
    TrainConfig train;
    std::uint64_t master_seed = 0;
    std::filesystem::path output_dir = "results";
    std::map<ModelKind, Overrides> overrides;

    /// Directory relative paths are resolved against (the config file's directory).
    std::filesystem::path base_dir;

    std::filesystem::path resolved_data_dir() const;
    std::filesystem::path resolved_output_dir() const;
    GridSpec grid() const;
};

/// Parses config text. Stock files are not checked. Throws ParseError.
ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});

/// Reads and parses a config file, then checks that every stock file exists.
/// Throws FileNotFound, ParseError or MissingDataFile.
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Throws MissingDataFile naming every absent stock file.
void check_data_files(const ExperimentConfig& cfg);

/// `key=value` lines for every setting, defaults included, in a fixed order.
std::vector<std::string> config_echo(const ExperimentConfig& cfg);

}  // namespace stockcast
