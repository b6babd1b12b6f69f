#include "stockcast/layers.hpp"

#include "stockcast/errors.hpp"

#include <cmath>
#include <cstring>

namespace stockcast {

namespace {

std::string key(const std::string& layer, const char* tensor) {
    return layer + "." + tensor;
}

Tensor row_of(const Tensor& seq, std::size_t t) {
    const std::size_t width = seq.dim(1);
    std::vector<double> row(seq.raw() + t * width, seq.raw() + (t + 1) * width);
    return Tensor({width}, std::move(row));
}

void set_row(Tensor& seq, std::size_t t, const Tensor& row) {
    std::memcpy(seq.raw() + t * seq.dim(1), row.raw(), row.size() * sizeof(double));
}

void add_row(Tensor& seq, std::size_t t, const Tensor& row) {
    double* dst = seq.raw() + t * seq.dim(1);
    for (std::size_t i = 0; i < row.size(); ++i) dst[i] += row[i];
}

void require_sequence(const Tensor& x, std::size_t in, std::string_view who) {
    if (x.rank() != 2 || x.dim(1) != in || x.dim(0) == 0) {
        throw ShapeMismatch(std::string(who) + ": expected sequence [T," + std::to_string(in) + "], got " +
                            shape_to_string(x.shape()));
    }
}

void init_gate(ParamSet& params, const std::string& name, const char* suffix, std::size_t in, std::size_t hidden,
               Rng& rng) {
    Tensor w({hidden, in});
    xavier_uniform(w, in, hidden, rng);
    Tensor u({hidden, hidden});
    xavier_uniform(u, hidden, hidden, rng);
    params.add(name + ".W_" + suffix, std::move(w));
    params.add(name + ".U_" + suffix, std::move(u));
    params.add(name + ".b_" + suffix, Tensor({hidden}));
}

GateParams gate_view(const ParamSet& params, const std::string& name, const char* suffix) {
    const std::string s(suffix);
    return {&params.get(name + ".W_" + s), &params.get(name + ".U_" + s), &params.get(name + ".b_" + s)};
}

GateGrads gate_view(ParamSet& grads, const std::string& name, const char* suffix) {
    const std::string s(suffix);
    return {&grads.get(name + ".W_" + s), &grads.get(name + ".U_" + s), &grads.get(name + ".b_" + s)};
}

}  // namespace

void he_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.data()) v = rng.uniform(-limit, limit);
}

void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.data()) v = rng.uniform(-limit, limit);
}

// --- dense -------------------------------------------------------------------

DenseLayer::DenseLayer(std::string name, std::size_t in, std::size_t out, Activation act)
    : name_(std::move(name)), in_(in), out_(out), act_(act) {}

Shape DenseLayer::output_shape(const Shape& input) const {
    if (input != Shape{in_}) throw ShapeMismatch("dense " + name_ + ": input " + shape_to_string(input));
    return {out_};
}

void DenseLayer::init_params(ParamSet& params, Rng& rng) const {
    Tensor w({out_, in_});
    if (act_ == Activation::Relu) {
        he_uniform(w, in_, rng);
    } else {
        xavier_uniform(w, in_, out_, rng);
    }
    params.add(key(name_, "W"), std::move(w));
    params.add(key(name_, "b"), Tensor({out_}));
}

Tensor DenseLayer::forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const {
    Tensor y = activate(act_, dense(x, params.get(key(name_, "W")), params.get(key(name_, "b"))));
    if (cache) cache->saved = {x, y};
    return y;
}

Tensor DenseLayer::backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                            ParamSet& grads) const {
    const Tensor& x = cache.saved.at(0);
    const Tensor& y = cache.saved.at(1);
    const Tensor da = activation_backward(act_, y, dy);
    return dense_backward(x, params.get(key(name_, "W")), da, grads.get(key(name_, "W")), grads.get(key(name_, "b")));
}

// --- conv1d ------------------------------------------------------------------

Conv1dLayer::Conv1dLayer(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel_size,
                         Activation act)
    : name_(std::move(name)), in_channels_(in_channels), filters_(filters), kernel_size_(kernel_size), act_(act) {}

Shape Conv1dLayer::output_shape(const Shape& input) const {
    if (input.size() != 2 || input[0] != in_channels_ || input[1] < kernel_size_) {
        throw ShapeMismatch("conv1d " + name_ + ": input " + shape_to_string(input) + " with kernel " +
                            std::to_string(kernel_size_));
    }
    return {filters_, input[1] - kernel_size_ + 1};
}

void Conv1dLayer::init_params(ParamSet& params, Rng& rng) const {
    Tensor k({filters_, in_channels_, kernel_size_});
    const std::size_t fan_in = in_channels_ * kernel_size_;
    if (act_ == Activation::Relu) {
        he_uniform(k, fan_in, rng);
    } else {
        xavier_uniform(k, fan_in, filters_ * kernel_size_, rng);
    }
    params.add(key(name_, "K"), std::move(k));
    params.add(key(name_, "b"), Tensor({filters_}));
}

Tensor Conv1dLayer::forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const {
    Tensor y = activate(act_, conv1d(x, params.get(key(name_, "K")), params.get(key(name_, "b"))));
    if (cache) cache->saved = {x, y};
    return y;
}

Tensor Conv1dLayer::backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                             ParamSet& grads) const {
    const Tensor da = activation_backward(act_, cache.saved.at(1), dy);
    return conv1d_backward(cache.saved.at(0), params.get(key(name_, "K")), da, grads.get(key(name_, "K")),
                           grads.get(key(name_, "b")));
}

// --- maxpool / reshape / activation -------------------------------------------

MaxPool1dLayer::MaxPool1dLayer(std::size_t pool) : pool_(pool) {}

Shape MaxPool1dLayer::output_shape(const Shape& input) const {
    Shape out = input;
    out.back() = input.back() / pool_;
    if (out.back() == 0) throw ShapeMismatch("maxpool1d: input " + shape_to_string(input) + " pools to nothing");
    return out;
}

Tensor MaxPool1dLayer::forward(const ParamSet&, const Tensor& x, LayerCache* cache) const {
    auto r = maxpool1d_with_indices(x, pool_);
    if (cache) {
        cache->input_shape = x.shape();
        cache->argmax = std::move(r.argmax);
    }
    return std::move(r.output);
}

Tensor MaxPool1dLayer::backward(const ParamSet&, const LayerCache& cache, const Tensor& dy, ParamSet&) const {
    return maxpool1d_backward(cache.input_shape, cache.argmax, dy);
}

ReshapeLayer::ReshapeLayer(Shape shape) : shape_(std::move(shape)) {}

Shape ReshapeLayer::output_shape(const Shape& input) const {
    if (shape_size(input) != shape_size(shape_)) {
        throw ShapeMismatch("reshape " + shape_to_string(input) + " -> " + shape_to_string(shape_));
    }
    return shape_;
}

Tensor ReshapeLayer::forward(const ParamSet&, const Tensor& x, LayerCache* cache) const {
    if (cache) cache->input_shape = x.shape();
    return x.reshaped(shape_);
}

Tensor ReshapeLayer::backward(const ParamSet&, const LayerCache& cache, const Tensor& dy, ParamSet&) const {
    return dy.reshaped(cache.input_shape);
}

ActivationLayer::ActivationLayer(Activation act) : act_(act) {}

Tensor ActivationLayer::forward(const ParamSet&, const Tensor& x, LayerCache* cache) const {
    Tensor y = activate(act_, x);
    if (cache) cache->saved = {y};
    return y;
}

Tensor ActivationLayer::backward(const ParamSet&, const LayerCache& cache, const Tensor& dy, ParamSet&) const {
    return activation_backward(act_, cache.saved.at(0), dy);
}

// --- GRU ---------------------------------------------------------------------

GruLayer::GruLayer(std::string name, std::size_t in, std::size_t hidden, bool return_sequences)
    : name_(std::move(name)), in_(in), hidden_(hidden), return_sequences_(return_sequences) {}

Shape GruLayer::output_shape(const Shape& input) const {
    if (input.size() != 2 || input[1] != in_ || input[0] == 0) {
        throw ShapeMismatch("gru " + name_ + ": input " + shape_to_string(input));
    }
    return return_sequences_ ? Shape{input[0], hidden_} : Shape{hidden_};
}

void GruLayer::init_params(ParamSet& params, Rng& rng) const {
    init_gate(params, name_, "z", in_, hidden_, rng);
    init_gate(params, name_, "r", in_, hidden_, rng);
    init_gate(params, name_, "h", in_, hidden_, rng);
}

GruParams GruLayer::bind(const ParamSet& params) const {
    return {gate_view(params, name_, "z"), gate_view(params, name_, "r"), gate_view(params, name_, "h")};
}

GruGrads GruLayer::bind(ParamSet& grads) const {
    return {gate_view(grads, name_, "z"), gate_view(grads, name_, "r"), gate_view(grads, name_, "h")};
}

Tensor GruLayer::forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const {
    require_sequence(x, in_, "gru " + name_);
    const auto p = bind(params);
    const std::size_t steps = x.dim(0);
    Tensor h({hidden_});
    Tensor seq = return_sequences_ ? Tensor({steps, hidden_}) : Tensor();
    if (cache) cache->gru_steps.assign(steps, {});
    for (std::size_t t = 0; t < steps; ++t) {
        h = gru_cell(row_of(x, t), h, p, cache ? &cache->gru_steps[t] : nullptr);
        if (return_sequences_) set_row(seq, t, h);
    }
    return return_sequences_ ? seq : h;
}

Tensor GruLayer::backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                          ParamSet& grads) const {
    const auto p = bind(params);
    auto g = bind(grads);
    const std::size_t steps = cache.gru_steps.size();
    Tensor dx({steps, in_});
    Tensor dh_next({hidden_});
    for (std::size_t t = steps; t-- > 0;) {
        Tensor dh = dh_next;
        if (return_sequences_) {
            for (std::size_t i = 0; i < hidden_; ++i) dh[i] += dy[t * hidden_ + i];
        } else if (t + 1 == steps) {
            for (std::size_t i = 0; i < hidden_; ++i) dh[i] += dy[i];
        }
        auto [dx_t, dh_prev] = gru_cell_backward(cache.gru_steps[t], p, dh, g);
        add_row(dx, t, dx_t);
        dh_next = std::move(dh_prev);
    }
    return dx;
}

// --- LSTM --------------------------------------------------------------------

LstmLayer::LstmLayer(std::string name, std::size_t in, std::size_t hidden, bool return_sequences)
    : name_(std::move(name)), in_(in), hidden_(hidden), return_sequences_(return_sequences) {}

Shape LstmLayer::output_shape(const Shape& input) const {
    if (input.size() != 2 || input[1] != in_ || input[0] == 0) {
        throw ShapeMismatch("lstm " + name_ + ": input " + shape_to_string(input));
    }
    return return_sequences_ ? Shape{input[0], hidden_} : Shape{hidden_};
}

void LstmLayer::init_params(ParamSet& params, Rng& rng) const {
    init_gate(params, name_, "i", in_, hidden_, rng);
    init_gate(params, name_, "f", in_, hidden_, rng);
    init_gate(params, name_, "o", in_, hidden_, rng);
    init_gate(params, name_, "g", in_, hidden_, rng);
}

LstmParams LstmLayer::bind(const ParamSet& params) const {
    return {gate_view(params, name_, "i"), gate_view(params, name_, "f"), gate_view(params, name_, "o"),
            gate_view(params, name_, "g")};
}

LstmGrads LstmLayer::bind(ParamSet& grads) const {
    return {gate_view(grads, name_, "i"), gate_view(grads, name_, "f"), gate_view(grads, name_, "o"),
            gate_view(grads, name_, "g")};
}

Tensor LstmLayer::forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const {
    require_sequence(x, in_, "lstm " + name_);
    const auto p = bind(params);
    const std::size_t steps = x.dim(0);
    LstmState state{Tensor({hidden_}), Tensor({hidden_})};
    Tensor seq = return_sequences_ ? Tensor({steps, hidden_}) : Tensor();
    if (cache) cache->lstm_steps.assign(steps, {});
    for (std::size_t t = 0; t < steps; ++t) {
        state = lstm_cell(row_of(x, t), state, p, cache ? &cache->lstm_steps[t] : nullptr);
        if (return_sequences_) set_row(seq, t, state.h);
    }
    return return_sequences_ ? seq : state.h;
}

Tensor LstmLayer::backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                           ParamSet& grads) const {
    const auto p = bind(params);
    auto g = bind(grads);
    const std::size_t steps = cache.lstm_steps.size();
    Tensor dx({steps, in_});
    Tensor dh_next({hidden_});
    Tensor dc_next({hidden_});
    for (std::size_t t = steps; t-- > 0;) {
        Tensor dh = dh_next;
        if (return_sequences_) {
            for (std::size_t i = 0; i < hidden_; ++i) dh[i] += dy[t * hidden_ + i];
        } else if (t + 1 == steps) {
            for (std::size_t i = 0; i < hidden_; ++i) dh[i] += dy[i];
        }
        auto step = lstm_cell_backward(cache.lstm_steps[t], p, dh, dc_next, g);
        add_row(dx, t, step.dx);
        dh_next = std::move(step.dh_prev);
        dc_next = std::move(step.dc_prev);
    }
    return dx;
}

}  // namespace stockcast
