#include "stockcast/optim.hpp"

#include "stockcast/errors.hpp"

#include <cmath>

namespace stockcast {

OptimizerState make_adam_state(const ParamSet& params, AdamConfig config) {
    return OptimizerState{0, params.zeros_like(), params.zeros_like(), config};
}

void adam_step(ParamSet& params, const ParamSet& grads, OptimizerState& state) {
    if (!params.same_layout(grads) || !params.same_layout(state.first_moment) ||
        !params.same_layout(state.second_moment)) {
        throw ShapeMismatch("adam_step: parameter, gradient and moment layouts differ");
    }
    const auto& cfg = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);

    auto p_it = params.begin();
    auto g_it = grads.begin();
    auto m_it = state.first_moment.begin();
    auto v_it = state.second_moment.begin();
    for (; p_it != params.end(); ++p_it, ++g_it, ++m_it, ++v_it) {
        Tensor& p = p_it->second;
        const Tensor& g = g_it->second;
        Tensor& m = m_it->second;
        Tensor& v = v_it->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

}  // namespace stockcast
