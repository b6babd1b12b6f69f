#include "stockcast/gradcheck_suite.hpp"

#include "stockcast/kernels.hpp"
#include "stockcast/models.hpp"
#include "stockcast/rng.hpp"

#include <array>

namespace stockcast {

namespace {

constexpr double kLinearTolerance = 1e-6;
constexpr double kSmoothTolerance = 1e-4;

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-scale, scale);
    return t;
}

SuiteCheck make_check(std::string name, const Objective& f, const ParamSet& params, double tolerance,
                      const SuiteOptions& options) {
    GradCheckOptions gc;
    gc.eps = options.eps;
    gc.seed = options.seed;
    SuiteCheck check;
    check.name = std::move(name);
    check.tolerance = tolerance;
    check.result = grad_check(f, params, gc);
    check.passed = check.result.max_rel_error < tolerance && check.result.checked > 0;
    return check;
}

GruParams gru_view(const ParamSet& p) {
    return {{&p.get("W_z"), &p.get("U_z"), &p.get("b_z")},
            {&p.get("W_r"), &p.get("U_r"), &p.get("b_r")},
            {&p.get("W_h"), &p.get("U_h"), &p.get("b_h")}};
}

GruGrads gru_view(ParamSet& g) {
    return {{&g.get("W_z"), &g.get("U_z"), &g.get("b_z")},
            {&g.get("W_r"), &g.get("U_r"), &g.get("b_r")},
            {&g.get("W_h"), &g.get("U_h"), &g.get("b_h")}};
}

LstmParams lstm_view(const ParamSet& p) {
    return {{&p.get("W_i"), &p.get("U_i"), &p.get("b_i")},
            {&p.get("W_f"), &p.get("U_f"), &p.get("b_f")},
            {&p.get("W_o"), &p.get("U_o"), &p.get("b_o")},
            {&p.get("W_g"), &p.get("U_g"), &p.get("b_g")}};
}

LstmGrads lstm_view(ParamSet& g) {
    return {{&g.get("W_i"), &g.get("U_i"), &g.get("b_i")},
            {&g.get("W_f"), &g.get("U_f"), &g.get("b_f")},
            {&g.get("W_o"), &g.get("U_o"), &g.get("b_o")},
            {&g.get("W_g"), &g.get("U_g"), &g.get("b_g")}};
}

void add_gates(ParamSet& p, std::initializer_list<const char*> gates, std::size_t in, std::size_t hid, Rng& rng) {
    for (const char* g : gates) {
        p.add(std::string("W_") + g, random_tensor({hid, in}, rng, 0.6));
        p.add(std::string("U_") + g, random_tensor({hid, hid}, rng, 0.6));
        p.add(std::string("b_") + g, random_tensor({hid}, rng, 0.3));
    }
}

constexpr std::size_t kSteps = 3;

std::array<std::string, kSteps> step_names() {
    return {"x1", "x2", "x3"};
}

SuiteCheck check_model(const char* name, const Model& model, Rng& rng, const SuiteOptions& options) {
    const Tensor input = random_tensor({model.input_arity()}, rng, 1.0);
    const Tensor target = random_tensor({model.output_arity()}, rng, 1.0);
    const Objective f = [&](const ParamSet& params, ParamSet* grads) {
        Model m = model;
        m.params() = params;
        if (grads) return m.accumulate_gradient(input.data(), target.data(), *grads);
        const auto pred = m.predict(input.data());
        return mse(Tensor::from_vector(pred), target);
    };
    return make_check(name, f, model.params(), kSmoothTolerance, options);
}

}  // namespace

std::vector<SuiteCheck> run_gradcheck_suite(const SuiteOptions& options) {
    Rng rng(options.seed);
    std::vector<SuiteCheck> checks;

    {  // dense, 4x3
        ParamSet p;
        p.add("x", random_tensor({3}, rng));
        p.add("W", random_tensor({4, 3}, rng));
        p.add("b", random_tensor({4}, rng));
        const Tensor target = random_tensor({4}, rng);
        const bool corrupt = options.corrupt_dense_backward;
        const Objective f = [target, corrupt](const ParamSet& q, ParamSet* g) {
            const Tensor y = dense(q.get("x"), q.get("W"), q.get("b"));
            if (g) {
                g->get("x") = dense_backward(q.get("x"), q.get("W"), mse_grad(y, target), g->get("W"), g->get("b"));
                if (corrupt) g->get("W")[0] += 0.05;
            }
            return mse(y, target);
        };
        checks.push_back(make_check("dense", f, p, kLinearTolerance, options));
    }
    {  // conv1d, 2 input channels
        ParamSet p;
        p.add("x", random_tensor({2, 9}, rng));
        p.add("K", random_tensor({3, 2, 3}, rng));
        p.add("b", random_tensor({3}, rng));
        const Tensor target = random_tensor({3, 7}, rng);
        const Objective f = [target](const ParamSet& q, ParamSet* g) {
            const Tensor y = conv1d(q.get("x"), q.get("K"), q.get("b"));
            if (g) g->get("x") = conv1d_backward(q.get("x"), q.get("K"), mse_grad(y, target), g->get("K"), g->get("b"));
            return mse(y, target);
        };
        checks.push_back(make_check("conv1d", f, p, kLinearTolerance, options));
    }
    {  // maxpool1d
        ParamSet p;
        p.add("x", random_tensor({3, 9}, rng));
        const Tensor target = random_tensor({3, 4}, rng);
        const Objective f = [target](const ParamSet& q, ParamSet* g) {
            const auto pooled = maxpool1d_with_indices(q.get("x"), 2);
            if (g) g->get("x") = maxpool1d_backward(q.get("x").shape(), pooled.argmax, mse_grad(pooled.output, target));
            return mse(pooled.output, target);
        };
        checks.push_back(make_check("maxpool1d", f, p, kLinearTolerance, options));
    }
    {  // relu
        ParamSet p;
        p.add("x", random_tensor({12}, rng));
        const Tensor target = random_tensor({12}, rng);
        const Objective f = [target](const ParamSet& q, ParamSet* g) {
            const Tensor y = relu(q.get("x"));
            if (g) g->get("x") = activation_backward(Activation::Relu, y, mse_grad(y, target));
            return mse(y, target);
        };
        checks.push_back(make_check("relu", f, p, kLinearTolerance, options));
    }
    {  // GRU cell unrolled over three steps
        constexpr std::size_t in = 3, hid = 4;
        ParamSet p;
        add_gates(p, {"z", "r", "h"}, in, hid, rng);
        for (const auto& name : step_names()) p.add(name, random_tensor({in}, rng));
        p.add("h0", random_tensor({hid}, rng, 0.5));
        const Tensor target = random_tensor({hid}, rng, 0.5);
        const Objective f = [target](const ParamSet& q, ParamSet* g) {
            const auto view = gru_view(q);
            std::array<GruCache, kSteps> caches;
            Tensor h = q.get("h0");
            const auto names = step_names();
            for (std::size_t t = 0; t < kSteps; ++t) h = gru_cell(q.get(names[t]), h, view, &caches[t]);
            if (g) {
                auto grads = gru_view(*g);
                Tensor dh = mse_grad(h, target);
                for (std::size_t t = kSteps; t-- > 0;) {
                    auto [dx, dh_prev] = gru_cell_backward(caches[t], view, dh, grads);
                    g->get(names[t]) = std::move(dx);
                    dh = std::move(dh_prev);
                }
                g->get("h0") = std::move(dh);
            }
            return mse(h, target);
        };
        checks.push_back(make_check("gru_cell", f, p, kSmoothTolerance, options));
    }
    {  // LSTM cell unrolled over three steps
        constexpr std::size_t in = 3, hid = 4;
        ParamSet p;
        add_gates(p, {"i", "f", "o", "g"}, in, hid, rng);
        for (const auto& name : step_names()) p.add(name, random_tensor({in}, rng));
        p.add("h0", random_tensor({hid}, rng, 0.5));
        p.add("c0", random_tensor({hid}, rng, 0.5));
        const Tensor target_h = random_tensor({hid}, rng, 0.5);
        const Tensor target_c = random_tensor({hid}, rng, 0.5);
        const Objective f = [target_h, target_c](const ParamSet& q, ParamSet* g) {
            const auto view = lstm_view(q);
            std::array<LstmCache, kSteps> caches;
            LstmState s{q.get("h0"), q.get("c0")};
            const auto names = step_names();
            for (std::size_t t = 0; t < kSteps; ++t) s = lstm_cell(q.get(names[t]), s, view, &caches[t]);
            if (g) {
                auto grads = lstm_view(*g);
                Tensor dh = mse_grad(s.h, target_h);
                Tensor dc = mse_grad(s.c, target_c);
                for (std::size_t t = kSteps; t-- > 0;) {
                    auto step = lstm_cell_backward(caches[t], view, dh, dc, grads);
                    g->get(names[t]) = std::move(step.dx);
                    dh = std::move(step.dh_prev);
                    dc = std::move(step.dc_prev);
                }
                g->get("h0") = std::move(dh);
                g->get("c0") = std::move(dc);
            }
            return mse(s.h, target_h) + mse(s.c, target_c);
        };
        checks.push_back(make_check("lstm_cell", f, p, kSmoothTolerance, options));
    }
    {  // MSE head
        ParamSet p;
        p.add("pred", random_tensor({6}, rng));
        const Tensor target = random_tensor({6}, rng);
        const Objective f = [target](const ParamSet& q, ParamSet* g) {
            if (g) g->get("pred") = mse_grad(q.get("pred"), target);
            return mse(q.get("pred"), target);
        };
        checks.push_back(make_check("mse", f, p, kLinearTolerance, options));
    }

    checks.push_back(check_model("MLP", build_mlp(6, 2, options.seed, {{"hidden", "8,8"}}), rng, options));
    checks.push_back(check_model(
        "CNN", build_cnn(10, 2, options.seed, {{"filters", "4,4"}, {"dense", "8"}}), rng, options));
    checks.push_back(check_model("GRU", build_gru(5, 2, options.seed, {{"hidden", "8,6"}}), rng, options));
    checks.push_back(check_model("LSTM", build_lstm(5, 2, options.seed, {{"hidden", "8,6"}}), rng, options));
    return checks;
}

}  // namespace stockcast
