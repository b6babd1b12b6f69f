#include "stockcast/windowing.hpp"

#include "stockcast/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <string>

namespace stockcast {

namespace {

void require_arity(const Predictor& model, std::size_t in, std::size_t out) {
    if (model.input_arity() != in || model.output_arity() != out) {
        throw ArityMismatch(fmt::format("model arity {}->{} but forecast requires {}->{}", model.input_arity(),
                                        model.output_arity(), in, out));
    }
}

std::vector<double> checked_predict(const Predictor& model, std::span<const double> window) {
    auto out = model.predict(window);
    if (out.size() != model.output_arity()) {
        throw ArityMismatch(fmt::format("model returned {} values, declared {}", out.size(), model.output_arity()));
    }
    return out;
}

}  // namespace

std::string_view to_string(Strategy s) {
    return s == Strategy::Direct ? "direct" : "iterative";
}

Strategy parse_strategy(std::string_view text) {
    if (text == "direct") return Strategy::Direct;
    if (text == "iterative") return Strategy::Iterative;
    throw InvalidConfig("strategy must be 'direct' or 'iterative', got '" + std::string(text) + "'");
}

std::string_view to_string(ForecastMode m) {
    return m == ForecastMode::Single ? "single" : "multi";
}

ForecastMode parse_forecast_mode(std::string_view text) {
    if (text == "single") return ForecastMode::Single;
    if (text == "multi") return ForecastMode::Multi;
    throw InvalidConfig("mode must be 'single' or 'multi', got '" + std::string(text) + "'");
}

std::vector<Sample> make_single_step_samples(std::span<const double> values, std::size_t w) {
    return make_direct_samples(values, w, 1);
}

std::vector<Sample> make_direct_samples(std::span<const double> values, std::size_t w, std::size_t h) {
    if (w == 0 || h == 0) throw WindowTooLarge("window and horizon must be positive");
    if (values.size() < w + h) {
        throw WindowTooLarge(fmt::format("series of length {} is too short for w={} h={}", values.size(), w, h));
    }
    const std::size_t count = values.size() - w - h + 1;
    std::vector<Sample> samples;
    samples.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto input = values.subspan(k, w);
        const auto target = values.subspan(k + w, h);
        samples.push_back({{input.begin(), input.end()}, {target.begin(), target.end()}});
    }
    return samples;
}

double single_step_forecast(const Predictor& model, std::span<const double> window) {
    require_arity(model, window.size(), 1);
    return checked_predict(model, window).front();
}

ForecastTrace iterative_forecast(const Predictor& model, std::span<const double> last_window, std::size_t h) {
    const std::size_t w = last_window.size();
    require_arity(model, w, 1);
    if (h == 0) throw ArityMismatch("iterative forecast horizon must be at least 1");

    // history = observed window followed by predictions; each step reads its last w entries
    std::vector<double> history(last_window.begin(), last_window.end());
    history.reserve(w + h);
    ForecastTrace trace;
    trace.origin = w;
    trace.predictions.reserve(h);
    for (std::size_t step = 0; step < h; ++step) {
        const std::span<const double> input(history.data() + step, w);
        const double next = checked_predict(model, input).front();
        history.push_back(next);
        trace.predictions.push_back(next);
    }
    return trace;
}

ForecastTrace direct_forecast(const Predictor& model, std::span<const double> window) {
    if (model.input_arity() != window.size()) {
        throw ArityMismatch(fmt::format("model input arity {} but window has {} values", model.input_arity(),
                                        window.size()));
    }
    ForecastTrace trace;
    trace.origin = window.size();
    trace.predictions = checked_predict(model, window);
    return trace;
}

std::vector<ForecastTrace> rolling_test_forecast(const Predictor& model, std::span<const double> test_values,
                                                 std::size_t w, std::size_t h, Strategy strategy,
                                                 std::size_t stride) {
    if (w == 0 || h == 0) throw WindowTooLarge("window and horizon must be positive");
    if (test_values.size() < w + h) {
        throw WindowTooLarge(
            fmt::format("test series of length {} is too short for w={} h={}", test_values.size(), w, h));
    }
    if (stride == 0) throw InvalidConfig("origin stride must be positive");
    if (strategy == Strategy::Direct) {
        require_arity(model, w, h);
    } else {
        require_arity(model, w, 1);
    }

    std::vector<ForecastTrace> traces;
    const std::size_t last_start = test_values.size() - w - h;
    for (std::size_t k = 0; k <= last_start; k += stride) {
        const auto window = test_values.subspan(k, w);
        auto trace = strategy == Strategy::Direct ? direct_forecast(model, window)
                                                  : iterative_forecast(model, window, h);
        trace.origin = k + w;
        const auto target = test_values.subspan(k + w, h);
        trace.targets.assign(target.begin(), target.end());
        traces.push_back(std::move(trace));
    }
    return traces;
}

double traces_mse(std::span<const ForecastTrace> traces) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& t : traces) {
        if (t.targets.size() != t.predictions.size()) {
            throw ArityMismatch("trace predictions and targets differ in length");
        }
        for (std::size_t i = 0; i < t.predictions.size(); ++i) {
            const double e = t.predictions[i] - t.targets[i];
            sum += e * e;
        }
        count += t.predictions.size();
    }
    if (count == 0) throw WindowTooLarge("no forecast pairs to score");
    return sum / static_cast<double>(count);
}

nlohmann::json to_json(const ForecastTrace& trace) {
    return {{"origin", trace.origin}, {"predictions", trace.predictions}, {"targets", trace.targets}};
}

}  // namespace stockcast
