#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace stockcast {

/// Backcast window `w` and forecast horizon `h` (1 for single-step).
struct WindowSpec {
    std::size_t w = 3;
    std::size_t h = 1;
};

/// Anything that maps a length-`input_arity()` window to `output_arity()` values.
///
/// `predict` must not mutate observable state: forecasts for distinct origins
/// may be evaluated concurrently on one instance.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::size_t input_arity() const = 0;
    virtual std::size_t output_arity() const = 0;
    virtual std::vector<double> predict(std::span<const double> window) const = 0;
};

struct Sample {
    std::vector<double> input;
    std::vector<double> target;

    bool operator==(const Sample&) const = default;
};

struct ForecastTrace {
    /// Number of observed points preceding the first prediction, counted from the
    /// start of the evaluated sequence (the 1-based position of the last observed point).
    std::size_t origin = 0;
    std::vector<double> predictions;
    /// Observed values aligned with `predictions`; empty when unknown.
    std::vector<double> targets;
};

enum class Strategy { Direct, Iterative };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

/// Single-step (h = 1) or multi-step experiments.
enum class ForecastMode { Single, Multi };

std::string_view to_string(ForecastMode m);
ForecastMode parse_forecast_mode(std::string_view text);

/// n - w samples; sample k maps x[k..k+w) to x[k+w]. Throws WindowTooLarge if n <= w.
std::vector<Sample> make_single_step_samples(std::span<const double> values, std::size_t w);

/// n - w - h + 1 samples; sample k maps x[k..k+w) to x[k+w..k+w+h). Throws WindowTooLarge.
std::vector<Sample> make_direct_samples(std::span<const double> values, std::size_t w, std::size_t h);

double single_step_forecast(const Predictor& model, std::span<const double> window);

/// Recursive forecast with a single-output model: each step sees the last `w`
/// values of observed-then-predicted history, so once `h > w` the inputs are
/// predictions only.
ForecastTrace iterative_forecast(const Predictor& model, std::span<const double> last_window, std::size_t h);

/// One model evaluation yields all `output_arity()` predictions.
ForecastTrace direct_forecast(const Predictor& model, std::span<const double> window);

/// Teacher-forced rolling origins over `test_values`, advancing by `stride`.
/// Every trace's input window consists of observed values only.
std::vector<ForecastTrace> rolling_test_forecast(const Predictor& model, std::span<const double> test_values,
                                                 std::size_t w, std::size_t h, Strategy strategy,
                                                 std::size_t stride = 1);

/// Mean squared error over every (prediction, target) pair of the traces.
double traces_mse(std::span<const ForecastTrace> traces);

nlohmann::json to_json(const ForecastTrace& trace);

}  // namespace stockcast
