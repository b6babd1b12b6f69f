#pragma once

// Differentiable building blocks. Every `*_backward` function accumulates (+=)
// parameter gradients into the tensors it is handed and returns the gradient
// with respect to its input, so batches and unrolled sequences can sum in place.

#include "stockcast/tensor.hpp"

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

namespace stockcast {

enum class Activation { Linear, Relu, Sigmoid, Tanh };

std::string_view to_string(Activation a);

Tensor relu(const Tensor& x);
Tensor linear(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_act(const Tensor& x);
Tensor activate(Activation a, const Tensor& x);

/// Gradient through an activation given its output `y`; relu'(0) is 0.
Tensor activation_backward(Activation a, const Tensor& y, const Tensor& dy);

// --- dense -------------------------------------------------------------------

/// y = W x + b with W:[out,in], b:[out], x:[in].
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor dense_backward(const Tensor& x, const Tensor& weight, const Tensor& dy, Tensor& d_weight, Tensor& d_bias);

// --- 1-D convolution (stride 1, valid) -----------------------------------------

/// x:[c_in,len] (or [len] with kernels [c_out,k]), kernels:[c_out,c_in,k], bias:[c_out]
/// -> [c_out, len-k+1]; out[f,i] = sum_c sum_d kernels[f,c,d] * x[c,i+d] + bias[f].
Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias);
Tensor conv1d_backward(const Tensor& x, const Tensor& kernels, const Tensor& dy, Tensor& d_kernels,
                       Tensor& d_bias);

// --- max pooling ---------------------------------------------------------------

struct PoolResult {
    Tensor output;
    /// Flat index into the input of each output element's maximum.
    std::vector<std::size_t> argmax;
};

/// Non-overlapping windows along the last axis of x:[len] or [c,len]; the
/// trailing remainder shorter than `pool` is dropped. Ties pick the first index.
PoolResult maxpool1d_with_indices(const Tensor& x, std::size_t pool);
Tensor maxpool1d(const Tensor& x, std::size_t pool);
Tensor maxpool1d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax, const Tensor& dy);

// --- recurrent cells -------------------------------------------------------------

/// Weights of one gate: W:[hid,in], U:[hid,hid], b:[hid].
struct GateParams {
    const Tensor* input_weight = nullptr;
    const Tensor* recurrent_weight = nullptr;
    const Tensor* bias = nullptr;
};

struct GateGrads {
    Tensor* input_weight = nullptr;
    Tensor* recurrent_weight = nullptr;
    Tensor* bias = nullptr;
};

struct GruParams {
    GateParams update;     // z
    GateParams reset;      // r
    GateParams candidate;  // h~
};

struct GruGrads {
    GateGrads update;
    GateGrads reset;
    GateGrads candidate;
};

struct GruCache {
    Tensor x;
    Tensor h_prev;
    Tensor z;
    Tensor r;
    Tensor candidate;
    Tensor reset_hidden;  // r ⊙ h_prev
};

/// z = σ(W_z x + U_z h + b_z), r = σ(W_r x + U_r h + b_r),
/// h~ = tanh(W_h x + U_h (r ⊙ h) + b_h), h_t = (1 - z) ⊙ h + z ⊙ h~.
Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruParams& p, GruCache* cache = nullptr);

/// Returns (dx, dh_prev).
std::pair<Tensor, Tensor> gru_cell_backward(const GruCache& cache, const GruParams& p, const Tensor& dh,
                                            GruGrads& grads);

struct LstmParams {
    GateParams input;   // i
    GateParams forget;  // f
    GateParams output;  // o
    GateParams cell;    // g
};

struct LstmGrads {
    GateGrads input;
    GateGrads forget;
    GateGrads output;
    GateGrads cell;
};

struct LstmState {
    Tensor h;
    Tensor c;
};

struct LstmCache {
    Tensor x;
    Tensor h_prev;
    Tensor c_prev;
    Tensor i;
    Tensor f;
    Tensor o;
    Tensor g;
    Tensor c;
};

/// i,f,o = σ(·), g = tanh(·), c_t = f ⊙ c + i ⊙ g, h_t = o ⊙ tanh(c_t).
LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmParams& p, LstmCache* cache = nullptr);

struct LstmCellGrads {
    Tensor dx;
    Tensor dh_prev;
    Tensor dc_prev;
};

/// `dh` and `dc` are the gradients flowing into h_t and c_t.
LstmCellGrads lstm_cell_backward(const LstmCache& cache, const LstmParams& p, const Tensor& dh, const Tensor& dc,
                                 LstmGrads& grads);

// --- loss ------------------------------------------------------------------------

double mse(const Tensor& pred, const Tensor& target);
/// 2 (pred - target) / N
Tensor mse_grad(const Tensor& pred, const Tensor& target);

}  // namespace stockcast
