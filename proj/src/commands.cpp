#include "stockcast/commands.hpp"

#include "stockcast/errors.hpp"
#include "stockcast/gradcheck_suite.hpp"
#include "stockcast/ingest.hpp"
#include "stockcast/preprocess.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace stockcast {

namespace {

constexpr std::string_view kResultsHeader = "stock,model,w,h,strategy,mean_mse,std_mse,n_runs,failed_runs";
constexpr std::string_view kErrorsHeader = "stock,model,w,h,seed,origin,step,abs_error_norm";

std::string echo_header(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& line : config_echo(cfg)) out += "# " + line + "\n";
    return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

template <typename T>
T field_as(std::string_view text, std::size_t line_no, std::string_view name) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw MalformedInput(fmt::format("errors CSV line {}: bad {} '{}'", line_no, name, text));
    }
    return value;
}

std::string format_double(double v) {
    return fmt::format("{}", v);
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw Error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string results_csv(const ExperimentConfig& cfg, const std::vector<CellResult>& cells) {
    std::string out = echo_header(cfg);
    out += kResultsHeader;
    out += '\n';
    for (const auto& c : cells) {
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", c.spec.stock, to_string(c.spec.model), c.spec.w, c.spec.h,
                           to_string(c.spec.strategy), format_double(c.interval.mean),
                           format_double(c.interval.std), c.interval.n_runs, c.failed_runs);
    }
    return out;
}

std::string errors_csv(const ExperimentConfig& cfg, const std::vector<CellResult>& cells) {
    std::string out = echo_header(cfg);
    out += kErrorsHeader;
    out += '\n';
    for (const auto& c : cells) {
        const auto prefix = fmt::format("{},{},{},{}", c.spec.stock, to_string(c.spec.model), c.spec.w, c.spec.h);
        for (const auto& run : c.runs) {
            if (run.failed) continue;
            for (const auto& t : run.traces) {
                for (std::size_t s = 0; s < t.predictions.size(); ++s) {
                    out += fmt::format("{},{},{},{},{}\n", prefix, run.seed, t.origin, s + 1,
                                       format_double(std::abs(t.predictions[s] - t.targets[s])));
                }
            }
        }
    }
    return out;
}

nlohmann::json traces_json(const ExperimentConfig& cfg, const std::vector<CellResult>& cells,
                           const std::map<std::string, PreparedSeries>& series, bool all_runs) {
    nlohmann::json doc;
    doc["config"] = config_echo(cfg);
    doc["values"] = "normalized";
    doc["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json cell = {
            {"stock", c.spec.stock},
            {"model", to_string(c.spec.model)},
            {"w", c.spec.w},
            {"h", c.spec.h},
            {"strategy", to_string(c.spec.strategy)},
        };
        const auto& scaler = series.at(c.spec.stock).scaler;
        cell["scaler"] = {{"min", scaler.min}, {"max", scaler.max}};

        const RunResult* best = nullptr;
        for (const auto& r : c.runs) {
            if (!r.failed && (!best || r.test_mse < best->test_mse)) best = &r;
        }
        cell["runs"] = nlohmann::json::array();
        for (const auto& r : c.runs) {
            if (r.failed || (!all_runs && &r != best)) continue;
            nlohmann::json run = {{"seed", r.seed}, {"test_mse", r.test_mse}, {"final_train_mse", r.final_train_mse},
                                  {"init_redraws", r.init_redraws}};
            run["traces"] = nlohmann::json::array();
            for (const auto& t : r.traces) run["traces"].push_back(to_json(t));
            cell["runs"].push_back(std::move(run));
        }
        doc["cells"].push_back(std::move(cell));
    }
    return doc;
}

int cmd_run(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& out,
            std::ostream& err) {
    ExperimentConfig cfg;
    std::map<std::string, PreparedSeries> prepared;
    try {
        cfg = parse_config(config_path);
        if (options.seed) cfg.master_seed = *options.seed;
        for (const auto& stock : cfg.stocks) {
            const auto ts = load_series(series_path(cfg.resolved_data_dir(), stock), stock);
            prepared.emplace(stock, prepare_series(ts, cfg.cutoff, cfg.train.scaler_scope));
        }
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    }

    const auto grid = cfg.grid();
    const std::size_t total = grid.cells().size() * cfg.n_runs;
    fmt::print(err, "running {} cells x {} runs on {} thread(s)\n", grid.cells().size(), cfg.n_runs,
               std::max<std::size_t>(1, options.jobs));
    const std::size_t step = std::max<std::size_t>(1, total / 20);
    const auto progress = [&](std::size_t done, std::size_t all) {
        if (done % step == 0 || done == all) fmt::print(err, "  {}/{} runs\n", done, all);
    };
    const auto cells = run_grid(grid, prepared, cfg.train, cfg.n_runs, cfg.master_seed, options.jobs, progress);

    const auto dir = cfg.resolved_output_dir();
    try {
        std::filesystem::create_directories(dir);
        write_file_atomic(dir / "results.csv", results_csv(cfg, cells));
        write_file_atomic(dir / "errors.csv", errors_csv(cfg, cells));
        write_file_atomic(dir / "traces.json", traces_json(cfg, cells, prepared, options.all_traces).dump() + "\n");
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    }

    std::size_t failed_cells = 0;
    for (const auto& c : cells) {
        fmt::print(out, "{:<12} {:<4} w={:<3} h={:<3} mse={:.7f} (+-{:.7f})", c.spec.stock, to_string(c.spec.model),
                   c.spec.w, c.spec.h, c.interval.mean, c.interval.std);
        if (c.failed_runs > 0) {
            ++failed_cells;
            fmt::print(out, "  [{} failed run(s)]", c.failed_runs);
        }
        fmt::print(out, "\n");
    }
    if (failed_cells > 0) {
        fmt::print(err, "{} cell(s) had failed runs:\n", failed_cells);
        for (const auto& c : cells) {
            for (const auto& r : c.runs) {
                if (r.failed) {
                    fmt::print(err, "  {} {} w={} h={} seed={}: {}\n", c.spec.stock, to_string(c.spec.model),
                               c.spec.w, c.spec.h, r.seed, r.error);
                }
            }
        }
        return 1;
    }
    fmt::print(out, "wrote {}\n", dir.generic_string());
    return 0;
}

std::vector<ErrorRecord> parse_errors_csv(std::istream& in) {
    std::vector<ErrorRecord> records;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != kErrorsHeader) {
                throw MalformedInput(fmt::format("errors CSV line {}: expected header '{}'", line_no, kErrorsHeader));
            }
            header_seen = true;
            continue;
        }
        const auto f = split_fields(line);
        if (f.size() != 8) {
            throw MalformedInput(fmt::format("errors CSV line {}: expected 8 fields, got {}", line_no, f.size()));
        }
        ErrorRecord r;
        r.stock = std::string(f[0]);
        try {
            r.model = parse_model_kind(f[1]);
        } catch (const Error&) {
            throw MalformedInput(fmt::format("errors CSV line {}: unknown model '{}'", line_no, f[1]));
        }
        r.w = field_as<std::size_t>(f[2], line_no, "w");
        r.h = field_as<std::size_t>(f[3], line_no, "h");
        r.seed = field_as<std::uint64_t>(f[4], line_no, "seed");
        r.origin = field_as<std::size_t>(f[5], line_no, "origin");
        r.step = field_as<std::size_t>(f[6], line_no, "step");
        r.abs_error = field_as<double>(f[7], line_no, "abs_error_norm");
        if (r.stock.empty() || r.step == 0 || r.step > r.h || !std::isfinite(r.abs_error)) {
            throw MalformedInput(fmt::format("errors CSV line {}: inconsistent record", line_no));
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw MalformedInput("errors CSV has no data rows");
    return records;
}

std::vector<DmGroup> dm_from_errors(const std::vector<ErrorRecord>& records, ForecastMode mode,
                                    const DmOptions& options, std::optional<std::size_t> window) {
    using Key = std::tuple<std::string, std::size_t, std::size_t>;
    using Point = std::pair<std::size_t, std::size_t>;
    struct Sum {
        double total = 0.0;
        std::size_t n = 0;
    };
    std::vector<Key> order;
    std::map<Key, std::map<ModelKind, std::map<Point, Sum>>> groups;
    for (const auto& r : records) {
        if (window && r.w != *window) continue;
        Key key{r.stock, r.w, r.h};
        auto [it, fresh] = groups.try_emplace(key);
        if (fresh) order.push_back(key);
        auto& s = it->second[r.model][{r.origin, r.step}];
        s.total += r.abs_error;
        ++s.n;
    }
    if (order.empty()) throw MalformedInput("no error records match the requested window");

    std::vector<DmGroup> out;
    for (const auto& key : order) {
        const auto& [stock, w, h] = key;
        const auto& by_model = groups.at(key);
        std::map<ModelKind, std::vector<double>> series;
        const std::map<Point, Sum>* reference = nullptr;
        for (const auto& [model, points] : by_model) {
            if (reference) {
                const bool aligned = std::equal(points.begin(), points.end(), reference->begin(), reference->end(),
                                                [](const auto& a, const auto& b) { return a.first == b.first; });
                if (!aligned) {
                    throw MalformedInput(fmt::format("{} w={} h={}: {} errors are not aligned with the other models",
                                                     stock, w, h, to_string(model)));
                }
            }
            const bool complete = std::all_of(points.begin(), points.end(),
                                              [&](const auto& p) { return p.second.n == points.begin()->second.n; });
            if (!complete) {
                throw MalformedInput(fmt::format("{} w={} h={}: {} errors are missing for some seeds", stock, w, h,
                                                 to_string(model)));
            }
            reference = &points;
            auto& seq = series[model];
            seq.reserve(points.size());
            for (const auto& [point, s] : points) seq.push_back(s.total / static_cast<double>(s.n));
        }
        try {
            out.push_back({stock, w, h, pairwise_dm_matrix(series, h, mode, options)});
        } catch (const Error& e) {
            throw MalformedInput(fmt::format("{} w={} h={}: {}", stock, w, h, e.what()));
        }
    }
    return out;
}

double default_alpha(ForecastMode mode) {
    return mode == ForecastMode::Single ? 1e-4 : 1e-3;
}

std::string dm_csv(const std::vector<DmGroup>& groups, ForecastMode mode, double alpha, const DmOptions& options) {
    std::string out;
    out += fmt::format("# alpha={}\n", alpha);
    out += fmt::format("# mode={}\n", to_string(mode));
    out += fmt::format("# loss={}\n", to_string(options.loss));
    out += fmt::format("# variant={}\n", to_string(options.variant));
    out += "# error_series=seed-averaged absolute error per (origin, step), origin-major order\n";
    out += "# sign=negative statistic means the first model of the pair has the smaller loss\n";
    out += "stock,pair,statistic,p_value,w,h,T,variant,degenerate,variance_fallback\n";
    for (const auto& g : groups) {
        for (const auto& pr : g.reports) {
            const auto& r = pr.report;
            out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", g.stock, pair_label(pr.pair),
                               format_double(r.statistic), format_double(r.p_value), g.w, g.h, r.n_obs,
                               to_string(options.variant), r.degenerate ? 1 : 0, r.variance_fallback ? 1 : 0);
        }
    }
    return out;
}

int cmd_dm(const DmCommandOptions& options, std::ostream& out, std::ostream& err) {
    const double alpha = options.alpha.value_or(default_alpha(options.mode));
    std::vector<DmGroup> groups;
    try {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfig("alpha must lie in (0, 1)");
        std::ifstream in(options.errors, std::ios::binary);
        if (!in) throw FileNotFound("cannot open errors file " + options.errors.string());
        groups = dm_from_errors(parse_errors_csv(in), options.mode, options.dm, options.window);
        const auto csv = dm_csv(groups, options.mode, alpha, options.dm);
        if (options.out) {
            write_file_atomic(*options.out, csv);
        } else {
            out << csv;
        }
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    }

    // one majority vote per (w, h) across stocks
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (const auto& g : groups) {
        if (std::find(cells.begin(), cells.end(), std::pair{g.w, g.h}) == cells.end()) cells.emplace_back(g.w, g.h);
    }
    auto& report = options.out ? out : err;
    for (const auto& [w, h] : cells) {
        std::vector<std::vector<PairReport>> per_stock;
        for (const auto& g : groups) {
            if (g.w == w && g.h == h) per_stock.push_back(g.reports);
        }
        const auto ranking = majority_vote_ranking(per_stock, alpha);
        fmt::print(report, "majority vote w={} h={} over {} stock(s), alpha={}:\n", w, h, per_stock.size(), alpha);
        for (const auto& v : ranking.verdicts) {
            const auto winner = v.winner ? std::string(to_string(*v.winner)) + " better" : std::string("tie");
            fmt::print(report, "  {:<9} {:<11} ({} {}, {} {}, of {})\n", pair_label(v.pair), winner,
                       to_string(v.pair.first), v.first_wins, to_string(v.pair.second), v.second_wins, v.stocks);
        }
    }
    return 0;
}

int cmd_gradcheck(std::ostream& out, bool inject_dense_fault) {
    SuiteOptions opts;
    opts.corrupt_dense_backward = inject_dense_fault;
    const auto checks = run_gradcheck_suite(opts);
    bool ok = true;
    fmt::print(out, "{:<10} {:>12} {:>9} {:>7} {:>6}  status\n", "check", "max_rel_err", "tolerance", "coords",
               "kinks");
    for (const auto& c : checks) {
        ok = ok && c.passed;
        fmt::print(out, "{:<10} {:>12.3e} {:>9.0e} {:>7} {:>6}  {}", c.name, c.result.max_rel_error, c.tolerance,
                   c.result.checked, c.result.kinks, c.passed ? "ok" : "FAIL");
        if (!c.passed) fmt::print(out, " (worst at {}[{}])", c.result.worst_param, c.result.worst_index);
        fmt::print(out, "\n");
    }
    fmt::print(out, "{}\n", ok ? "all gradient checks passed" : "gradient check FAILED");
    return ok ? 0 : 1;
}

int cmd_validate_data(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    try {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw FileNotFound("cannot open config file " + config_path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        cfg = parse_config_text(buf.str(), config_path.parent_path());
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    }

    const std::size_t max_w = *std::max_element(cfg.windows.begin(), cfg.windows.end());
    const std::size_t max_h = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
    const std::size_t train_h = cfg.strategy == Strategy::Direct ? max_h : 1;
    bool ok = true;
    for (const auto& stock : cfg.stocks) {
        const auto path = series_path(cfg.resolved_data_dir(), stock);
        try {
            const auto loaded = load_series_with_report(path, stock);
            const auto split = split_by_date(loaded.series, cfg.cutoff);
            fmt::print(out, "{:<12} rows={} dropped={} train={} test={} first={} last={}\n", stock,
                       loaded.report.row_count, loaded.report.dropped_rows, split.train.size(), split.test.size(),
                       loaded.series.dates.front().to_string(), loaded.series.dates.back().to_string());
            for (const auto& issue : loaded.report.issues) {
                fmt::print(out, "  row {}: {}\n", issue.row, issue.reason);
            }
            if (split.train.size() < max_w + train_h || split.test.size() < max_w + max_h) {
                ok = false;
                fmt::print(out, "  too short for w={} h={}\n", max_w, max_h);
            }
            (void)fit_scaler(split.train.values);
        } catch (const Error& e) {
            ok = false;
            fmt::print(out, "{:<12} ERROR {}\n", stock, e.what());
        }
    }
    return ok ? 0 : 1;
}

}  // namespace stockcast
