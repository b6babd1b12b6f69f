#pragma once

#include "stockcast/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace stockcast {

/// Scalar objective of a ParamSet. When `grads` is non-null it has the same
/// layout as `params`, arrives zeroed, and receives the analytic gradient.
using Objective = std::function<double(const ParamSet& params, ParamSet* grads)>;

struct GradCheckOptions {
    double eps = 1e-5;
    /// Retries at a jittered point when a coordinate straddles a kink.
    std::size_t max_resamples = 5;
    double jitter = 1e-2;
    std::uint64_t seed = 0x5eed;
};

struct GradCheckResult {
    /// Worst |a - n| / max(|a|, |n|, 1e-8) over checked coordinates.
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    /// Coordinates whose one-sided slopes disagree at the final point; excluded from the errors.
    std::size_t kinks = 0;
    std::size_t resamples = 0;
};

/// Central-difference check of the analytic gradient. A coordinate whose
/// forward and backward one-sided slopes disagree is treated as a
/// non-differentiable point: the whole check is rerun at a jittered point, up
/// to `max_resamples` times. Throws NonFiniteGradient on NaN/Inf and
/// std::invalid_argument when eps is outside [1e-7, 1e-3].
GradCheckResult grad_check(const Objective& f, const ParamSet& params, const GradCheckOptions& options = {});

}  // namespace stockcast
