#pragma once

#include "stockcast/kernels.hpp"
#include "stockcast/rng.hpp"
#include "stockcast/tensor.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stockcast {

/// Per-sample state a layer saves during a training forward pass.
struct LayerCache {
    std::vector<Tensor> saved;
    Shape input_shape;
    std::vector<std::size_t> argmax;
    std::vector<GruCache> gru_steps;
    std::vector<LstmCache> lstm_steps;
};

/// One stage of a sequential network. Layers are immutable; their weights live
/// in the owning model's ParamSet under `<name>.<tensor>` keys.
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string_view kind() const = 0;
    virtual Shape output_shape(const Shape& input) const = 0;
    /// Adds this layer's initialized tensors to `params`.
    virtual void init_params(ParamSet& /*params*/, Rng& /*rng*/) const {}

    /// `cache` is null for inference, which then leaves no trace.
    virtual Tensor forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const = 0;
    virtual Tensor backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                            ParamSet& grads) const = 0;
};

class DenseLayer final : public Layer {
public:
    DenseLayer(std::string name, std::size_t in, std::size_t out, Activation act);

    std::string_view kind() const override { return "dense"; }
    Shape output_shape(const Shape& input) const override;
    void init_params(ParamSet& params, Rng& rng) const override;
    Tensor forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                    ParamSet& grads) const override;

private:
    std::string name_;
    std::size_t in_;
    std::size_t out_;
    Activation act_;
};

class Conv1dLayer final : public Layer {
public:
    Conv1dLayer(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel_size,
                Activation act);

    std::string_view kind() const override { return "conv1d"; }
    Shape output_shape(const Shape& input) const override;
    void init_params(ParamSet& params, Rng& rng) const override;
    Tensor forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                    ParamSet& grads) const override;

private:
    std::string name_;
    std::size_t in_channels_;
    std::size_t filters_;
    std::size_t kernel_size_;
    Activation act_;
};

class MaxPool1dLayer final : public Layer {
public:
    explicit MaxPool1dLayer(std::size_t pool);

    std::string_view kind() const override { return "maxpool1d"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                    ParamSet& grads) const override;

private:
    std::size_t pool_;
};

/// Reinterprets the input under a new shape (also used to flatten).
class ReshapeLayer final : public Layer {
public:
    explicit ReshapeLayer(Shape shape);

    std::string_view kind() const override { return "reshape"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                    ParamSet& grads) const override;

private:
    Shape shape_;
};

class ActivationLayer final : public Layer {
public:
    explicit ActivationLayer(Activation act);

    std::string_view kind() const override { return "activation"; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                    ParamSet& grads) const override;

private:
    Activation act_;
};

/// GRU over an input sequence [T, in]; emits [T, hidden] or the final [hidden].
class GruLayer final : public Layer {
public:
    GruLayer(std::string name, std::size_t in, std::size_t hidden, bool return_sequences);

    std::string_view kind() const override { return "gru"; }
    Shape output_shape(const Shape& input) const override;
    void init_params(ParamSet& params, Rng& rng) const override;
    Tensor forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                    ParamSet& grads) const override;

private:
    GruParams bind(const ParamSet& params) const;
    GruGrads bind(ParamSet& grads) const;

    std::string name_;
    std::size_t in_;
    std::size_t hidden_;
    bool return_sequences_;
};

/// LSTM over an input sequence [T, in]; emits [T, hidden] or the final [hidden].
class LstmLayer final : public Layer {
public:
    LstmLayer(std::string name, std::size_t in, std::size_t hidden, bool return_sequences);

    std::string_view kind() const override { return "lstm"; }
    Shape output_shape(const Shape& input) const override;
    void init_params(ParamSet& params, Rng& rng) const override;
    Tensor forward(const ParamSet& params, const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const ParamSet& params, const LayerCache& cache, const Tensor& dy,
                    ParamSet& grads) const override;

private:
    LstmParams bind(const ParamSet& params) const;
    LstmGrads bind(ParamSet& grads) const;

    std::string name_;
    std::size_t in_;
    std::size_t hidden_;
    bool return_sequences_;
};

/// Uniform(-limit, limit) fill with limit = sqrt(6 / fan_in) (He) or sqrt(6 / (fan_in + fan_out)) (Xavier).
void he_uniform(Tensor& t, std::size_t fan_in, Rng& rng);
void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace stockcast
