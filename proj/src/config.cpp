#include "stockcast/config.hpp"

#include "stockcast/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace stockcast {

namespace {

const std::vector<std::size_t> kSingleWindows = {3, 5, 7, 9, 11, 13, 15};
const std::vector<std::size_t> kMultiWindows = {30, 60, 90};
const std::vector<std::size_t> kMultiHorizons = {7, 14, 21, 28};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                   : comma - start));
        if (!piece.empty()) out.emplace_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::optional<bool> parse_bool(std::string_view text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    return std::nullopt;
}

std::string join(const auto& items, const auto& fmt_item) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += ',';
        out += fmt_item(item);
    }
    return out;
}

struct Entry {
    int line = 0;
    std::string value;
};

class Parser {
public:
    Parser(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    int line_of(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    const Entry* take(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        throw ParseError(line_of(key), key, message);
    }

    std::size_t positive(const std::string& key, std::size_t fallback) {
        const Entry* e = take(key);
        if (!e) return fallback;
        const auto v = parse_number<std::size_t>(e->value);
        if (!v || *v == 0) fail(key, "expected a positive integer, got '" + e->value + "'");
        return *v;
    }

    std::vector<std::size_t> positive_list(const std::string& key, const std::vector<std::size_t>& fallback) {
        const Entry* e = take(key);
        if (!e) return fallback;
        std::vector<std::size_t> out;
        for (const auto& piece : split_list(e->value)) {
            const auto v = parse_number<std::size_t>(piece);
            if (!v || *v == 0) fail(key, "expected positive integers, got '" + piece + "'");
            if (std::find(out.begin(), out.end(), *v) != out.end()) fail(key, "duplicate value " + piece);
            out.push_back(*v);
        }
        if (out.empty()) fail(key, "list must not be empty");
        return out;
    }

    template <typename F>
    auto enumerated(const std::string& key, decltype(std::declval<F>()(std::string_view{})) fallback, F parse) {
        const Entry* e = take(key);
        if (!e) return fallback;
        try {
            return parse(std::string_view(e->value));
        } catch (const Error& err) {
            fail(key, err.what());
        }
    }

    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& [key, entry] : entries_) {
            if (!used_.count(key)) out.push_back(key);
        }
        return out;
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }

private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

std::map<std::string, Entry> tokenize(std::string_view text) {
    std::map<std::string, Entry> entries;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        const auto line = trim(raw);
        if (!line.empty() && line.front() != '#') {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError(line_no, std::string(line), "expected 'key = value'");
            }
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty()) throw ParseError(line_no, "", "missing key before '='");
            if (entries.count(key)) {
                throw ParseError(line_no, key, fmt::format("duplicate field (first set on line {})", entries[key].line));
            }
            entries[key] = {line_no, value};
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return entries;
}

bool is_known_key(const std::string& key) {
    static const std::set<std::string> known = {
        "data_dir", "stocks",         "cutoff",        "mode",          "windows",      "horizons",
        "strategy", "models",         "n_runs",        "epochs",        "batch_size",   "lr",
        "shuffle",  "origin_stride",  "scaler_scope",  "master_seed",   "output_dir",
        "redraw_dead_init"};
    return known.count(key) > 0;
}

}  // namespace

std::filesystem::path ExperimentConfig::resolved_data_dir() const {
    return data_dir.is_absolute() ? data_dir : base_dir / data_dir;
}

std::filesystem::path ExperimentConfig::resolved_output_dir() const {
    return output_dir.is_absolute() ? output_dir : base_dir / output_dir;
}

GridSpec ExperimentConfig::grid() const {
    return {stocks, models, windows, horizons, strategy, overrides};
}

ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
    Parser p(tokenize(text));
    for (const auto& [key, entry] : p.entries()) {
        if (!is_known_key(key) && key.rfind("arch.", 0) != 0) {
            throw ParseError(entry.line, key, "unknown field");
        }
    }

    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    if (const Entry* e = p.take("data_dir")) {
        if (e->value.empty()) p.fail("data_dir", "must not be empty");
        cfg.data_dir = e->value;
    }
    if (const Entry* e = p.take("output_dir")) {
        if (e->value.empty()) p.fail("output_dir", "must not be empty");
        cfg.output_dir = e->value;
    }
    if (const Entry* e = p.take("stocks")) {
        cfg.stocks = split_list(e->value);
        if (cfg.stocks.empty()) p.fail("stocks", "list must not be empty");
        std::set<std::string> seen;
        for (const auto& s : cfg.stocks) {
            if (!seen.insert(s).second) p.fail("stocks", "duplicate stock " + s);
        }
    } else {
        cfg.stocks.assign(kReferenceSymbols.begin(), kReferenceSymbols.end());
    }
    if (const Entry* e = p.take("cutoff")) {
        const auto d = Date::parse(e->value);
        if (!d) p.fail("cutoff", "expected YYYY-MM-DD, got '" + e->value + "'");
        cfg.cutoff = *d;
    }

    cfg.mode = p.enumerated("mode", ForecastMode::Single, parse_forecast_mode);
    cfg.strategy = p.enumerated("strategy", Strategy::Direct, parse_strategy);
    const bool single = cfg.mode == ForecastMode::Single;
    cfg.windows = p.positive_list("windows", single ? kSingleWindows : kMultiWindows);
    cfg.horizons = p.positive_list("horizons", single ? std::vector<std::size_t>{1} : kMultiHorizons);
    if (single && cfg.horizons != std::vector<std::size_t>{1}) {
        p.fail("horizons", "single mode forecasts one step; horizons must be 1");
    }

    if (const Entry* e = p.take("models")) {
        for (const auto& piece : split_list(e->value)) {
            ModelKind kind{};
            try {
                kind = parse_model_kind(piece);
            } catch (const Error& err) {
                p.fail("models", err.what());
            }
            if (std::find(cfg.models.begin(), cfg.models.end(), kind) != cfg.models.end()) {
                p.fail("models", "duplicate model " + piece);
            }
            cfg.models.push_back(kind);
        }
        if (cfg.models.empty()) p.fail("models", "list must not be empty");
    } else {
        cfg.models.assign(std::begin(kAllModelKinds), std::end(kAllModelKinds));
    }

    cfg.n_runs = p.positive("n_runs", cfg.n_runs);
    cfg.train.epochs = p.positive("epochs", cfg.train.epochs);
    cfg.train.batch_size = p.positive("batch_size", cfg.train.batch_size);
    cfg.train.origin_stride = p.positive("origin_stride", cfg.train.origin_stride);
    if (const Entry* e = p.take("lr")) {
        const auto v = parse_number<double>(e->value);
        if (!v || !(*v > 0.0)) p.fail("lr", "expected a positive number, got '" + e->value + "'");
        cfg.train.lr = *v;
    }
    if (const Entry* e = p.take("shuffle")) {
        const auto v = parse_bool(e->value);
        if (!v) p.fail("shuffle", "expected true or false, got '" + e->value + "'");
        cfg.train.shuffle = *v;
    }
    if (const Entry* e = p.take("redraw_dead_init")) {
        const auto v = parse_bool(e->value);
        if (!v) p.fail("redraw_dead_init", "expected true or false, got '" + e->value + "'");
        cfg.train.redraw_dead_init = *v;
    }
    cfg.train.scaler_scope = p.enumerated("scaler_scope", ScalerScope::Train, parse_scaler_scope);
    if (const Entry* e = p.take("master_seed")) {
        const auto v = parse_number<std::uint64_t>(e->value);
        if (!v) p.fail("master_seed", "expected a non-negative integer, got '" + e->value + "'");
        cfg.master_seed = *v;
    }

    std::map<ModelKind, std::pair<int, std::string>> first_override;
    for (const auto& key : p.unused()) {
        // arch.<model>.<key>
        const auto second_dot = key.find('.', 5);
        if (second_dot == std::string::npos || second_dot + 1 == key.size()) {
            p.fail(key, "expected arch.<model>.<key>");
        }
        ModelKind kind{};
        try {
            kind = parse_model_kind(key.substr(5, second_dot - 5));
        } catch (const Error& err) {
            p.fail(key, err.what());
        }
        const std::string name = key.substr(second_dot + 1);
        if (cfg.overrides[kind].count(name)) p.fail(key, "override set twice");
        cfg.overrides[kind][name] = p.take(key)->value;
        auto [it, fresh] = first_override.try_emplace(kind, p.line_of(key), key);
        if (!fresh && p.line_of(key) < it->second.first) it->second = {p.line_of(key), key};
    }

    // Surface bad override keys and unusable windows now rather than mid-run.
    const std::size_t model_h = cfg.strategy == Strategy::Direct ? cfg.horizons.front() : 1;
    for (const auto& [kind, ov] : cfg.overrides) {
        for (const auto w : cfg.windows) {
            try {
                (void)build_model({kind, w, model_h, ov}, 0);
            } catch (const Error& err) {
                const auto& [line, key] = first_override.at(kind);
                throw ParseError(line, key, err.what());
            }
        }
    }
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto cfg = parse_config_text(buf.str(), path.parent_path());
    check_data_files(cfg);
    return cfg;
}

void check_data_files(const ExperimentConfig& cfg) {
    std::vector<std::string> missing;
    for (const auto& stock : cfg.stocks) {
        const auto path = series_path(cfg.resolved_data_dir(), stock);
        if (!std::filesystem::is_regular_file(path)) missing.push_back(path.string());
    }
    if (!missing.empty()) {
        throw MissingDataFile(fmt::format("missing stock file{}: {}", missing.size() > 1 ? "s" : "",
                                          join(missing, [](const std::string& s) { return s; })));
    }
}

std::vector<std::string> config_echo(const ExperimentConfig& cfg) {
    const auto sizes = [](const std::vector<std::size_t>& v) {
        return join(v, [](std::size_t x) { return std::to_string(x); });
    };
    std::vector<std::string> out = {
        "data_dir=" + cfg.data_dir.generic_string(),
        "stocks=" + join(cfg.stocks, [](const std::string& s) { return s; }),
        "cutoff=" + cfg.cutoff.to_string(),
        fmt::format("mode={}", to_string(cfg.mode)),
        "windows=" + sizes(cfg.windows),
        "horizons=" + sizes(cfg.horizons),
        fmt::format("strategy={}", to_string(cfg.strategy)),
        "models=" + join(cfg.models, [](ModelKind k) { return std::string(to_string(k)); }),
        fmt::format("n_runs={}", cfg.n_runs),
        fmt::format("epochs={}", cfg.train.epochs),
        fmt::format("batch_size={}", cfg.train.batch_size),
        fmt::format("lr={}", cfg.train.lr),
        fmt::format("shuffle={}", cfg.train.shuffle),
        fmt::format("origin_stride={}", cfg.train.origin_stride),
        fmt::format("scaler_scope={}", to_string(cfg.train.scaler_scope)),
        fmt::format("redraw_dead_init={}", cfg.train.redraw_dead_init),
        fmt::format("master_seed={}", cfg.master_seed),
        "output_dir=" + cfg.output_dir.generic_string(),
        "optimizer=adam(beta1=0.9,beta2=0.999,eps=1e-08)",
        "loss_interval_std=sample(n-1)",
    };
    for (const auto& [kind, ov] : cfg.overrides) {
        for (const auto& [key, value] : ov) {
            out.push_back(fmt::format("arch.{}.{}={}", to_string(kind), key, value));
        }
    }
    return out;
}

}  // namespace stockcast
