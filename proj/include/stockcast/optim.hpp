#pragma once

#include "stockcast/tensor.hpp"

#include <cstdint>

namespace stockcast {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    std::uint64_t step = 0;
    ParamSet first_moment;
    ParamSet second_moment;
    AdamConfig config;
};

OptimizerState make_adam_state(const ParamSet& params, AdamConfig config = {});

/// Bias-corrected Adam update in place; throws ShapeMismatch when layouts differ.
void adam_step(ParamSet& params, const ParamSet& grads, OptimizerState& state);

}  // namespace stockcast
