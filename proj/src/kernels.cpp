#include "stockcast/kernels.hpp"

#include "stockcast/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace stockcast {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstMatMap as_matrix(const Tensor& t) {
    return ConstMatMap(t.raw(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

MatMap as_matrix(Tensor& t) {
    return MatMap(t.raw(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

ConstVecMap as_vector(const Tensor& t) {
    return ConstVecMap(t.raw(), static_cast<Eigen::Index>(t.size()));
}

VecMap as_vector(Tensor& t) {
    return VecMap(t.raw(), static_cast<Eigen::Index>(t.size()));
}

[[noreturn]] void shape_error(std::string_view op, const std::string& detail) {
    throw ShapeMismatch(std::string(op) + ": " + detail);
}

template <class F>
Tensor map_elements(const Tensor& x, F f) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return y;
}

double logistic(double v) {
    // split by sign so exp never overflows
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

void check_gate(const GateParams& g, std::size_t in, std::size_t hid, std::string_view op) {
    if (!g.input_weight || !g.recurrent_weight || !g.bias) shape_error(op, "missing gate parameter");
    if (g.input_weight->shape() != Shape{hid, in} || g.recurrent_weight->shape() != Shape{hid, hid} ||
        g.bias->shape() != Shape{hid}) {
        shape_error(op, "gate expects W[" + std::to_string(hid) + "," + std::to_string(in) + "], U[" +
                            std::to_string(hid) + "," + std::to_string(hid) + "], b[" + std::to_string(hid) +
                            "]; got W" + shape_to_string(g.input_weight->shape()) + " U" +
                            shape_to_string(g.recurrent_weight->shape()) + " b" +
                            shape_to_string(g.bias->shape()));
    }
}

/// W x + U h + b
Tensor gate_preactivation(const GateParams& g, const Tensor& x, const Tensor& h) {
    Tensor a = *g.bias;
    auto out = as_vector(a);
    out.noalias() += as_matrix(*g.input_weight) * as_vector(x);
    out.noalias() += as_matrix(*g.recurrent_weight) * as_vector(h);
    return a;
}

/// Accumulates the gate's parameter gradients for pre-activation gradient `da`
/// and adds W^T da to dx and U^T da to dh.
void gate_backward(const GateParams& g, const Tensor& x, const Tensor& h, const Tensor& da, GateGrads& grads,
                   Tensor& dx, Tensor& dh) {
    const auto da_v = as_vector(da);
    as_matrix(*grads.input_weight).noalias() += da_v * as_vector(x).transpose();
    as_matrix(*grads.recurrent_weight).noalias() += da_v * as_vector(h).transpose();
    as_vector(*grads.bias) += da_v;
    as_vector(dx).noalias() += as_matrix(*g.input_weight).transpose() * da_v;
    as_vector(dh).noalias() += as_matrix(*g.recurrent_weight).transpose() * da_v;
}

}  // namespace

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
    }
    return "unknown";
}

Tensor relu(const Tensor& x) {
    return map_elements(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor linear(const Tensor& x) {
    return x;
}

Tensor sigmoid(const Tensor& x) {
    return map_elements(x, logistic);
}

Tensor tanh_act(const Tensor& x) {
    return map_elements(x, [](double v) { return std::tanh(v); });
}

Tensor activate(Activation a, const Tensor& x) {
    switch (a) {
        case Activation::Linear: return linear(x);
        case Activation::Relu: return relu(x);
        case Activation::Sigmoid: return sigmoid(x);
        case Activation::Tanh: return tanh_act(x);
    }
    return x;
}

Tensor activation_backward(Activation a, const Tensor& y, const Tensor& dy) {
    require_same_shape(y, dy, "activation_backward");
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) {
        switch (a) {
            case Activation::Linear: dx[i] = dy[i]; break;
            case Activation::Relu: dx[i] = y[i] > 0.0 ? dy[i] : 0.0; break;
            case Activation::Sigmoid: dx[i] = dy[i] * y[i] * (1.0 - y[i]); break;
            case Activation::Tanh: dx[i] = dy[i] * (1.0 - y[i] * y[i]); break;
        }
    }
    return dx;
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (weight.rank() != 2 || x.rank() != 1 || bias.rank() != 1 || weight.dim(1) != x.dim(0) ||
        weight.dim(0) != bias.dim(0)) {
        shape_error("dense", "W" + shape_to_string(weight.shape()) + " x" + shape_to_string(x.shape()) + " b" +
                                 shape_to_string(bias.shape()));
    }
    Tensor y = bias;
    as_vector(y).noalias() += as_matrix(weight) * as_vector(x);
    return y;
}

Tensor dense_backward(const Tensor& x, const Tensor& weight, const Tensor& dy, Tensor& d_weight, Tensor& d_bias) {
    require_same_shape(weight, d_weight, "dense_backward weight");
    if (dy.size() != weight.dim(0) || d_bias.size() != weight.dim(0) || x.size() != weight.dim(1)) {
        shape_error("dense_backward", "dy" + shape_to_string(dy.shape()) + " W" + shape_to_string(weight.shape()));
    }
    const auto dy_v = as_vector(dy);
    as_matrix(d_weight).noalias() += dy_v * as_vector(x).transpose();
    as_vector(d_bias) += dy_v;
    Tensor dx(x.shape());
    as_vector(dx).noalias() = as_matrix(weight).transpose() * dy_v;
    return dx;
}

namespace {

struct ConvDims {
    std::size_t c_in;
    std::size_t len;
    std::size_t c_out;
    std::size_t k;
    std::size_t out_len;
};

ConvDims conv_dims(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
    ConvDims d{};
    if (x.rank() == 1 && kernels.rank() == 2) {
        d = {1, x.dim(0), kernels.dim(0), kernels.dim(1), 0};
    } else if (x.rank() == 2 && kernels.rank() == 3 && kernels.dim(1) == x.dim(0)) {
        d = {x.dim(0), x.dim(1), kernels.dim(0), kernels.dim(2), 0};
    } else {
        shape_error("conv1d", "x" + shape_to_string(x.shape()) + " kernels" + shape_to_string(kernels.shape()));
    }
    if (bias.shape() != Shape{d.c_out}) shape_error("conv1d", "bias" + shape_to_string(bias.shape()));
    if (d.k == 0 || d.len < d.k) {
        shape_error("conv1d", "input length " + std::to_string(d.len) + " shorter than kernel " + std::to_string(d.k));
    }
    d.out_len = d.len - d.k + 1;
    return d;
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
    const auto d = conv_dims(x, kernels, bias);
    Tensor y({d.c_out, d.out_len});
    const double* xs = x.raw();
    const double* ks = kernels.raw();
    for (std::size_t f = 0; f < d.c_out; ++f) {
        double* out = y.raw() + f * d.out_len;
        std::fill(out, out + d.out_len, bias[f]);
        for (std::size_t c = 0; c < d.c_in; ++c) {
            const double* row = xs + c * d.len;
            const double* kern = ks + (f * d.c_in + c) * d.k;
            for (std::size_t t = 0; t < d.k; ++t) {
                const double kv = kern[t];
                for (std::size_t i = 0; i < d.out_len; ++i) out[i] += kv * row[i + t];
            }
        }
    }
    return y;
}

Tensor conv1d_backward(const Tensor& x, const Tensor& kernels, const Tensor& dy, Tensor& d_kernels,
                       Tensor& d_bias) {
    const auto d = conv_dims(x, kernels, d_bias);
    require_same_shape(kernels, d_kernels, "conv1d_backward kernels");
    if (dy.shape() != Shape{d.c_out, d.out_len}) shape_error("conv1d_backward", "dy" + shape_to_string(dy.shape()));
    Tensor dx(x.shape());
    const double* xs = x.raw();
    const double* ks = kernels.raw();
    for (std::size_t f = 0; f < d.c_out; ++f) {
        const double* g = dy.raw() + f * d.out_len;
        double bsum = 0.0;
        for (std::size_t i = 0; i < d.out_len; ++i) bsum += g[i];
        d_bias[f] += bsum;
        for (std::size_t c = 0; c < d.c_in; ++c) {
            const double* row = xs + c * d.len;
            double* drow = dx.raw() + c * d.len;
            const std::size_t kbase = (f * d.c_in + c) * d.k;
            for (std::size_t t = 0; t < d.k; ++t) {
                double acc = 0.0;
                const double kv = ks[kbase + t];
                for (std::size_t i = 0; i < d.out_len; ++i) {
                    acc += g[i] * row[i + t];
                    drow[i + t] += kv * g[i];
                }
                d_kernels[kbase + t] += acc;
            }
        }
    }
    return dx;
}

PoolResult maxpool1d_with_indices(const Tensor& x, std::size_t pool) {
    if (pool == 0) shape_error("maxpool1d", "pool size must be positive");
    if (x.rank() != 1 && x.rank() != 2) shape_error("maxpool1d", "x" + shape_to_string(x.shape()));
    const std::size_t channels = x.rank() == 2 ? x.dim(0) : 1;
    const std::size_t len = x.shape().back();
    const std::size_t out_len = len / pool;
    PoolResult r;
    r.output = Tensor(x.rank() == 2 ? Shape{channels, out_len} : Shape{out_len});
    r.argmax.resize(channels * out_len);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t j = 0; j < out_len; ++j) {
            std::size_t best = c * len + j * pool;
            for (std::size_t t = 1; t < pool; ++t) {
                const std::size_t idx = c * len + j * pool + t;
                if (x[idx] > x[best]) best = idx;
            }
            r.output[c * out_len + j] = x[best];
            r.argmax[c * out_len + j] = best;
        }
    }
    return r;
}

Tensor maxpool1d(const Tensor& x, std::size_t pool) {
    return maxpool1d_with_indices(x, pool).output;
}

Tensor maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax, const Tensor& dy) {
    if (dy.size() != argmax.size()) shape_error("maxpool1d_backward", "dy does not match pooled output");
    Tensor dx(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += dy[i];
    return dx;
}

Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruParams& p, GruCache* cache) {
    const std::size_t hid = h_prev.size();
    check_gate(p.update, x.size(), hid, "gru_cell update");
    check_gate(p.reset, x.size(), hid, "gru_cell reset");
    check_gate(p.candidate, x.size(), hid, "gru_cell candidate");

    Tensor z = sigmoid(gate_preactivation(p.update, x, h_prev));
    Tensor r = sigmoid(gate_preactivation(p.reset, x, h_prev));
    Tensor reset_hidden(h_prev.shape());
    for (std::size_t i = 0; i < hid; ++i) reset_hidden[i] = r[i] * h_prev[i];
    Tensor cand = tanh_act(gate_preactivation(p.candidate, x, reset_hidden));

    Tensor h(h_prev.shape());
    for (std::size_t i = 0; i < hid; ++i) h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand[i];
    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->z = std::move(z);
        cache->r = std::move(r);
        cache->candidate = std::move(cand);
        cache->reset_hidden = std::move(reset_hidden);
    }
    return h;
}

std::pair<Tensor, Tensor> gru_cell_backward(const GruCache& cache, const GruParams& p, const Tensor& dh,
                                            GruGrads& grads) {
    const std::size_t hid = cache.h_prev.size();
    if (dh.size() != hid) shape_error("gru_cell_backward", "dh" + shape_to_string(dh.shape()));
    Tensor dx(cache.x.shape());
    Tensor dh_prev(cache.h_prev.shape());
    Tensor da_z(dh.shape());
    Tensor da_h(dh.shape());
    for (std::size_t i = 0; i < hid; ++i) {
        const double z = cache.z[i];
        const double c = cache.candidate[i];
        dh_prev[i] = dh[i] * (1.0 - z);
        da_z[i] = dh[i] * (c - cache.h_prev[i]) * z * (1.0 - z);
        da_h[i] = dh[i] * z * (1.0 - c * c);
    }

    // candidate gate sees r ⊙ h_prev as its recurrent input
    Tensor d_reset_hidden(dh.shape());
    gate_backward(p.candidate, cache.x, cache.reset_hidden, da_h, grads.candidate, dx, d_reset_hidden);
    Tensor da_r(dh.shape());
    for (std::size_t i = 0; i < hid; ++i) {
        const double r = cache.r[i];
        dh_prev[i] += d_reset_hidden[i] * r;
        da_r[i] = d_reset_hidden[i] * cache.h_prev[i] * r * (1.0 - r);
    }
    gate_backward(p.update, cache.x, cache.h_prev, da_z, grads.update, dx, dh_prev);
    gate_backward(p.reset, cache.x, cache.h_prev, da_r, grads.reset, dx, dh_prev);
    return {std::move(dx), std::move(dh_prev)};
}

LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmParams& p, LstmCache* cache) {
    const std::size_t hid = prev.h.size();
    if (prev.c.size() != hid) shape_error("lstm_cell", "h and c sizes differ");
    for (const auto* g : {&p.input, &p.forget, &p.output, &p.cell}) check_gate(*g, x.size(), hid, "lstm_cell");

    Tensor i = sigmoid(gate_preactivation(p.input, x, prev.h));
    Tensor f = sigmoid(gate_preactivation(p.forget, x, prev.h));
    Tensor o = sigmoid(gate_preactivation(p.output, x, prev.h));
    Tensor g = tanh_act(gate_preactivation(p.cell, x, prev.h));

    LstmState next{Tensor(prev.h.shape()), Tensor(prev.c.shape())};
    for (std::size_t k = 0; k < hid; ++k) {
        next.c[k] = f[k] * prev.c[k] + i[k] * g[k];
        next.h[k] = o[k] * std::tanh(next.c[k]);
    }
    if (cache) {
        cache->x = x;
        cache->h_prev = prev.h;
        cache->c_prev = prev.c;
        cache->i = std::move(i);
        cache->f = std::move(f);
        cache->o = std::move(o);
        cache->g = std::move(g);
        cache->c = next.c;
    }
    return next;
}

LstmCellGrads lstm_cell_backward(const LstmCache& cache, const LstmParams& p, const Tensor& dh, const Tensor& dc,
                                 LstmGrads& grads) {
    const std::size_t hid = cache.h_prev.size();
    if (dh.size() != hid || dc.size() != hid) shape_error("lstm_cell_backward", "dh/dc size");
    LstmCellGrads out{Tensor(cache.x.shape()), Tensor(cache.h_prev.shape()), Tensor(cache.c_prev.shape())};
    Tensor da_i(dh.shape()), da_f(dh.shape()), da_o(dh.shape()), da_g(dh.shape());
    for (std::size_t k = 0; k < hid; ++k) {
        const double tc = std::tanh(cache.c[k]);
        const double dc_total = dc[k] + dh[k] * cache.o[k] * (1.0 - tc * tc);
        const double i = cache.i[k], f = cache.f[k], o = cache.o[k], g = cache.g[k];
        da_o[k] = dh[k] * tc * o * (1.0 - o);
        da_f[k] = dc_total * cache.c_prev[k] * f * (1.0 - f);
        da_i[k] = dc_total * g * i * (1.0 - i);
        da_g[k] = dc_total * i * (1.0 - g * g);
        out.dc_prev[k] = dc_total * f;
    }
    gate_backward(p.input, cache.x, cache.h_prev, da_i, grads.input, out.dx, out.dh_prev);
    gate_backward(p.forget, cache.x, cache.h_prev, da_f, grads.forget, out.dx, out.dh_prev);
    gate_backward(p.output, cache.x, cache.h_prev, da_o, grads.output, out.dx, out.dh_prev);
    gate_backward(p.cell, cache.x, cache.h_prev, da_g, grads.cell, out.dx, out.dh_prev);
    return out;
}

double mse(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse");
    if (pred.size() == 0) throw ShapeMismatch("mse: empty tensors");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - target[i];
        sum += e * e;
    }
    return sum / static_cast<double>(pred.size());
}

Tensor mse_grad(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse_grad");
    Tensor g(pred.shape());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - target[i]);
    return g;
}

}  // namespace stockcast
