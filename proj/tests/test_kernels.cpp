#include "stockcast/errors.hpp"
#include "stockcast/gradcheck.hpp"
#include "stockcast/kernels.hpp"
#include "stockcast/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace stockcast;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = u(rng);
    return t;
}

Tensor vec(std::vector<double> v) {
    return Tensor::from_vector(std::move(v));
}

ParamSet gru_params(std::size_t in, std::size_t hid, std::mt19937_64* rng, double scale = 0.6) {
    ParamSet p;
    for (const char* g : {"z", "r", "h"}) {
        p.add(std::string("W_") + g, rng ? random_tensor({hid, in}, *rng, scale) : Tensor({hid, in}));
        p.add(std::string("U_") + g, rng ? random_tensor({hid, hid}, *rng, scale) : Tensor({hid, hid}));
        p.add(std::string("b_") + g, rng ? random_tensor({hid}, *rng, scale) : Tensor({hid}));
    }
    return p;
}

ParamSet lstm_params(std::size_t in, std::size_t hid, std::mt19937_64* rng, double scale = 0.6) {
    ParamSet p;
    for (const char* g : {"i", "f", "o", "g"}) {
        p.add(std::string("W_") + g, rng ? random_tensor({hid, in}, *rng, scale) : Tensor({hid, in}));
        p.add(std::string("U_") + g, rng ? random_tensor({hid, hid}, *rng, scale) : Tensor({hid, hid}));
        p.add(std::string("b_") + g, rng ? random_tensor({hid}, *rng, scale) : Tensor({hid}));
    }
    return p;
}

template <typename P>
GateParams gate(P& p, const char* g) {
    return {&p.get(std::string("W_") + g), &p.get(std::string("U_") + g), &p.get(std::string("b_") + g)};
}

template <typename P>
GateGrads gate_grads(P& p, const char* g) {
    return {&p.get(std::string("W_") + g), &p.get(std::string("U_") + g), &p.get(std::string("b_") + g)};
}

GruParams gru_view(const ParamSet& p) {
    return {gate(p, "z"), gate(p, "r"), gate(p, "h")};
}

GruGrads gru_grad_view(ParamSet& g) {
    return {gate_grads(g, "z"), gate_grads(g, "r"), gate_grads(g, "h")};
}

LstmParams lstm_view(const ParamSet& p) {
    return {gate(p, "i"), gate(p, "f"), gate(p, "o"), gate(p, "g")};
}

LstmGrads lstm_grad_view(ParamSet& g) {
    return {gate_grads(g, "i"), gate_grads(g, "f"), gate_grads(g, "o"), gate_grads(g, "g")};
}

}  // namespace

TEST_CASE("tensor basics") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    t.at(1, 2) = 4.0;
    CHECK(t[5] == 4.0);
    CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeMismatch);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeMismatch);
    CHECK(t.all_finite());
    t[0] = NAN;
    CHECK_FALSE(t.all_finite());
    CHECK(shape_to_string({4, 3}) == "[4,3]");
}

TEST_CASE("ParamSet keeps order, rejects duplicates") {
    ParamSet p;
    p.add("b", Tensor({2}));
    p.add("a", Tensor({3, 2}));
    CHECK(p.parameter_count() == 8);
    CHECK(p.begin()->first == "b");
    CHECK_THROWS_AS(p.add("a", Tensor({1})), std::invalid_argument);
    CHECK(p.zeros_like().same_layout(p));
    ParamSet q;
    q.add("a", Tensor({3, 2}));
    q.add("b", Tensor({2}));
    CHECK_FALSE(p.same_layout(q));
}

TEST_CASE("dense forward") {
    const Tensor I({2, 2}, std::vector<double>{1, 0, 0, 1});
    CHECK(dense(vec({3, 4}), I, vec({0, 0})) == vec({3, 4}));
    CHECK(dense(vec({3, 4}), Tensor({1, 2}, std::vector<double>{1, 2}), vec({1})) == vec({12}));
    CHECK_THROWS_AS(dense(vec({3, 4, 5}), I, vec({0, 0})), ShapeMismatch);
    CHECK_THROWS_AS(dense(vec({3, 4}), I, vec({0})), ShapeMismatch);
}

TEST_CASE("dense backward matches finite differences on random 4x3 instances") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        ParamSet p;
        p.add("x", random_tensor({3}, rng));
        p.add("W", random_tensor({4, 3}, rng));
        p.add("b", random_tensor({4}, rng));
        const Tensor up = random_tensor({4}, rng);  // upstream weights make the objective a generic linear form
        const auto f = [&](const ParamSet& q, ParamSet* g) {
            const Tensor y = dense(q.get("x"), q.get("W"), q.get("b"));
            double s = 0.0;
            for (std::size_t i = 0; i < 4; ++i) s += up[i] * y[i] + 0.5 * y[i] * y[i];
            if (g) {
                Tensor dy({4});
                for (std::size_t i = 0; i < 4; ++i) dy[i] = up[i] + y[i];
                g->get("x") = dense_backward(q.get("x"), q.get("W"), dy, g->get("W"), g->get("b"));
            }
            return s;
        };
        const auto r = grad_check(f, p);
        CHECK(r.max_abs_error < 1e-6);
        CHECK(r.max_rel_error < 1e-6);
    }
}

TEST_CASE("conv1d forward") {
    const auto x = vec({1, 3, 6, -2});
    CHECK(conv1d(x, Tensor({1, 1}, std::vector<double>{1}), vec({0})) == Tensor({1, 4}, std::vector<double>{1, 3, 6, -2}));
    CHECK(conv1d(vec({1, 3, 6}), Tensor({1, 2}, std::vector<double>{1, -1}), vec({0})) ==
          Tensor({1, 2}, std::vector<double>{-2, -3}));
    // two channels: out[f,i] = sum_c sum_d K[f,c,d] x[c,i+d] + b[f]
    const Tensor x2({2, 3}, std::vector<double>{1, 2, 3, 10, 20, 30});
    const Tensor k2({1, 2, 2}, std::vector<double>{1, 0, 0, 1});
    CHECK(conv1d(x2, k2, vec({0.5})) == Tensor({1, 2}, std::vector<double>{21.5, 32.5}));
    CHECK_THROWS_AS(conv1d(vec({1, 2}), Tensor({1, 3}), vec({0})), ShapeMismatch);
    CHECK_THROWS_AS(conv1d(vec({1, 2, 3}), Tensor({2, 2}), vec({0})), ShapeMismatch);
}

TEST_CASE("conv1d backward matches finite differences") {
    std::mt19937_64 rng(2);
    for (std::size_t c_in : {1u, 3u}) {
        ParamSet p;
        p.add("x", c_in == 1 ? random_tensor({8}, rng) : random_tensor({c_in, 8}, rng));
        p.add("K", c_in == 1 ? random_tensor({2, 3}, rng) : random_tensor({2, c_in, 3}, rng));
        p.add("b", random_tensor({2}, rng));
        const Tensor target = random_tensor({2, 6}, rng);
        const auto f = [&](const ParamSet& q, ParamSet* g) {
            const Tensor y = conv1d(q.get("x"), q.get("K"), q.get("b"));
            if (g) g->get("x") = conv1d_backward(q.get("x"), q.get("K"), mse_grad(y, target), g->get("K"), g->get("b"));
            return mse(y, target);
        };
        const auto r = grad_check(f, p);
        CHECK(r.max_abs_error < 1e-6);
        CHECK(r.max_rel_error < 1e-6);
    }
}

TEST_CASE("maxpool1d") {
    CHECK(maxpool1d(vec({1, 5, 2, 3}), 2) == vec({5, 3}));
    CHECK(maxpool1d(vec({1, 5, 2, 3, 9}), 2) == vec({5, 3}));
    CHECK(maxpool1d(vec({4, -1, 7}), 1) == vec({4, -1, 7}));
    const Tensor two({2, 4}, std::vector<double>{1, 5, 2, 3, 0, 0, 8, 1});
    CHECK(maxpool1d(two, 2) == Tensor({2, 2}, std::vector<double>{5, 3, 0, 8}));

    const auto tied = maxpool1d_with_indices(vec({2, 2, 1, 1}), 2);
    CHECK(tied.argmax == std::vector<std::size_t>{0, 2});
    const Tensor dx = maxpool1d_backward({4}, tied.argmax, vec({1.0, 3.0}));
    CHECK(dx == vec({1, 0, 3, 0}));
}

TEST_CASE("maxpool1d backward matches finite differences at untied points") {
    std::mt19937_64 rng(3);
    ParamSet p;
    p.add("x", random_tensor({3, 10}, rng));
    const Tensor target = random_tensor({3, 3}, rng);
    const auto f = [&](const ParamSet& q, ParamSet* g) {
        const auto pooled = maxpool1d_with_indices(q.get("x"), 3);
        if (g) g->get("x") = maxpool1d_backward(q.get("x").shape(), pooled.argmax, mse_grad(pooled.output, target));
        return mse(pooled.output, target);
    };
    CHECK(grad_check(f, p).max_abs_error < 1e-6);
}

TEST_CASE("activations") {
    CHECK(relu(vec({-1, 0, 2})) == vec({0, 0, 2}));
    CHECK(linear(vec({-1, 0, 2})) == vec({-1, 0, 2}));
    CHECK(sigmoid(vec({0}))[0] == 0.5);
    CHECK(sigmoid(vec({-800}))[0] >= 0.0);
    CHECK(sigmoid(vec({800}))[0] == 1.0);
    CHECK(tanh_act(vec({0.3}))[0] == std::tanh(0.3));
    // relu'(0) = 0
    CHECK(activation_backward(Activation::Relu, vec({0, 1}), vec({5, 5})) == vec({0, 5}));

    std::mt19937_64 rng(4);
    for (const auto a : {Activation::Sigmoid, Activation::Tanh, Activation::Linear, Activation::Relu}) {
        ParamSet p;
        p.add("x", random_tensor({9}, rng, 2.0));
        const Tensor target = random_tensor({9}, rng);
        const auto f = [&](const ParamSet& q, ParamSet* g) {
            const Tensor y = activate(a, q.get("x"));
            if (g) g->get("x") = activation_backward(a, y, mse_grad(y, target));
            return mse(y, target);
        };
        CHECK(grad_check(f, p).max_rel_error < 1e-6);
    }
}

TEST_CASE("mse and its gradient") {
    CHECK(mse(vec({0.2, 0.4}), vec({0.2, 0.4})) == 0.0);
    CHECK(mse(vec({0, 0}), vec({1, 1})) == 1.0);
    CHECK(mse_grad(vec({3, 0}), vec({1, 1})) == vec({2, -1}));
    CHECK_THROWS_AS(mse(vec({0}), vec({1, 1})), ShapeMismatch);

    std::mt19937_64 rng(5);
    ParamSet p;
    p.add("pred", random_tensor({7}, rng));
    const Tensor target = random_tensor({7}, rng);
    const auto f = [&](const ParamSet& q, ParamSet* g) {
        if (g) g->get("pred") = mse_grad(q.get("pred"), target);
        return mse(q.get("pred"), target);
    };
    CHECK(grad_check(f, p).max_abs_error < 1e-8);
}

TEST_CASE("gru cell limits") {
    const auto zero = gru_params(2, 3, nullptr);
    CHECK(gru_cell(vec({0.7, -1.2}), Tensor({3}), gru_view(zero)) == Tensor({3}));

    std::mt19937_64 rng(6);
    auto p = gru_params(2, 3, &rng);
    p.get("b_z").fill(30.0);
    const auto x = vec({0.4, -0.3});
    const auto h_prev = vec({0.2, -0.5, 0.9});
    GruCache cache;
    const Tensor h = gru_cell(x, h_prev, gru_view(p), &cache);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(h[i] - cache.candidate[i]) < 1e-9);

    CHECK_THROWS_AS(gru_cell(vec({1, 2, 3}), h_prev, gru_view(p)), ShapeMismatch);
    CHECK_THROWS_AS(gru_cell(x, vec({1, 2}), gru_view(p)), ShapeMismatch);
}

TEST_CASE("gru backward through three unrolled steps") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        ParamSet p = gru_params(2, 4, &rng);
        for (const char* name : {"x1", "x2", "x3"}) p.add(name, random_tensor({2}, rng));
        p.add("h0", random_tensor({4}, rng, 0.8));
        const Tensor target = random_tensor({4}, rng, 0.5);
        const auto f = [&](const ParamSet& q, ParamSet* g) {
            const auto view = gru_view(q);
            GruCache caches[3];
            const char* names[] = {"x1", "x2", "x3"};
            Tensor h = q.get("h0");
            for (int t = 0; t < 3; ++t) h = gru_cell(q.get(names[t]), h, view, &caches[t]);
            if (g) {
                auto gv = gru_grad_view(*g);
                Tensor dh = mse_grad(h, target);
                for (int t = 2; t >= 0; --t) {
                    auto [dx, dh_prev] = gru_cell_backward(caches[t], view, dh, gv);
                    g->get(names[t]) = dx;
                    dh = dh_prev;
                }
                g->get("h0") = dh;
            }
            return mse(h, target);
        };
        const auto r = grad_check(f, p);
        CHECK(r.max_abs_error < 1e-5);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("lstm cell limits") {
    const auto zero = lstm_params(2, 3, nullptr);
    const auto s = lstm_cell(vec({0.7, -1.2}), {Tensor({3}), Tensor({3})}, lstm_view(zero));
    CHECK(s.h == Tensor({3}));
    CHECK(s.c == Tensor({3}));

    std::mt19937_64 rng(8);
    auto p = lstm_params(2, 3, &rng);
    p.get("b_f").fill(30.0);
    p.get("b_i").fill(-30.0);
    const LstmState prev{vec({0.1, -0.2, 0.3}), vec({1.5, -0.7, 0.25})};
    const auto next = lstm_cell(vec({0.5, 0.5}), prev, lstm_view(p));
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(next.c[i] - prev.c[i]) < 1e-9);
}

TEST_CASE("lstm backward through three unrolled steps") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        ParamSet p = lstm_params(2, 4, &rng);
        for (const char* name : {"x1", "x2", "x3"}) p.add(name, random_tensor({2}, rng));
        p.add("h0", random_tensor({4}, rng, 0.8));
        p.add("c0", random_tensor({4}, rng, 0.8));
        const Tensor target = random_tensor({4}, rng, 0.5);
        const auto f = [&](const ParamSet& q, ParamSet* g) {
            const auto view = lstm_view(q);
            LstmCache caches[3];
            const char* names[] = {"x1", "x2", "x3"};
            LstmState s{q.get("h0"), q.get("c0")};
            for (int t = 0; t < 3; ++t) s = lstm_cell(q.get(names[t]), s, view, &caches[t]);
            if (g) {
                auto gv = lstm_grad_view(*g);
                Tensor dh = mse_grad(s.h, target);
                Tensor dc(Shape{4});
                for (int t = 2; t >= 0; --t) {
                    auto step = lstm_cell_backward(caches[t], view, dh, dc, gv);
                    g->get(names[t]) = step.dx;
                    dh = step.dh_prev;
                    dc = step.dc_prev;
                }
                g->get("h0") = dh;
                g->get("c0") = dc;
            }
            return mse(s.h, target);
        };
        const auto r = grad_check(f, p);
        CHECK(r.max_abs_error < 1e-5);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("property: recurrent hidden states stay bounded") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> big(-50.0, 50.0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto gp = gru_params(3, 5, &rng, 3.0);
        const auto lp = lstm_params(3, 5, &rng, 3.0);
        Tensor h0 = random_tensor({5}, rng, 2.0);
        double h0_norm = 0.0;
        for (double v : h0.data()) h0_norm = std::max(h0_norm, std::abs(v));
        Tensor h = h0;
        LstmState s{Tensor({5}), Tensor({5})};
        for (int t = 0; t < 40; ++t) {
            Tensor x({3});
            for (auto& v : x.data()) v = big(rng);
            h = gru_cell(x, h, gru_view(gp));
            s = lstm_cell(x, s, lstm_view(lp));
            for (double v : h.data()) CHECK(std::abs(v) <= std::max(h0_norm, 1.0) + 1e-12);
            for (double v : s.h.data()) CHECK(std::abs(v) <= 1.0);
        }
    }
}

TEST_CASE("property: forward passes are bit-identical on repeat") {
    std::mt19937_64 rng(11);
    const auto p = gru_params(2, 6, &rng);
    const auto x = random_tensor({2}, rng);
    const auto h = random_tensor({6}, rng);
    const Tensor first = gru_cell(x, h, gru_view(p));
    for (int i = 0; i < 5; ++i) CHECK(gru_cell(x, h, gru_view(p)) == first);
}
