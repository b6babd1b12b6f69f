#include "stockcast/gradcheck.hpp"

#include "stockcast/errors.hpp"
#include "stockcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stockcast {

namespace {

constexpr double kKinkTolerance = 1e-2;

GradCheckResult check_at(const Objective& f, ParamSet point, double eps) {
    ParamSet analytic = point.zeros_like();
    const double f0 = f(point, &analytic);
    if (!std::isfinite(f0)) throw NonFiniteGradient("objective is not finite at the check point");

    GradCheckResult r;
    for (auto& [name, tensor] : point) {
        const Tensor& grad = analytic.get(name);
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double saved = tensor[i];
            tensor[i] = saved + eps;
            const double f_plus = f(point, nullptr);
            tensor[i] = saved - eps;
            const double f_minus = f(point, nullptr);
            tensor[i] = saved;

            const double a = grad[i];
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            if (!std::isfinite(a) || !std::isfinite(numeric)) {
                throw NonFiniteGradient("non-finite gradient for " + name + "[" + std::to_string(i) + "]");
            }
            const double slope_fwd = (f_plus - f0) / eps;
            const double slope_bwd = (f0 - f_minus) / eps;
            const double scale = std::max({1.0, std::abs(slope_fwd), std::abs(slope_bwd)});
            if (std::abs(slope_fwd - slope_bwd) > kKinkTolerance * scale) {
                ++r.kinks;
                continue;
            }
            ++r.checked;
            const double abs_err = std::abs(a - numeric);
            const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-8});
            r.max_abs_error = std::max(r.max_abs_error, abs_err);
            if (rel_err > r.max_rel_error || r.worst_param.empty()) {
                r.max_rel_error = rel_err;
                r.worst_param = name;
                r.worst_index = i;
            }
        }
    }
    return r;
}

}  // namespace

GradCheckResult grad_check(const Objective& f, const ParamSet& params, const GradCheckOptions& options) {
    if (!(options.eps >= 1e-7 && options.eps <= 1e-3)) {
        throw std::invalid_argument("grad_check eps must lie in [1e-7, 1e-3]");
    }
    Rng rng(options.seed);
    ParamSet point = params;
    GradCheckResult result = check_at(f, point, options.eps);
    std::size_t resamples = 0;
    while (result.kinks > 0 && resamples < options.max_resamples) {
        ++resamples;
        point = params;
        for (auto& [name, tensor] : point) {
            for (std::size_t i = 0; i < tensor.size(); ++i) {
                tensor[i] += options.jitter * rng.uniform(-1.0, 1.0) * std::max(1.0, std::abs(tensor[i]));
            }
        }
        result = check_at(f, point, options.eps);
    }
    result.resamples = resamples;
    return result;
}

}  // namespace stockcast
