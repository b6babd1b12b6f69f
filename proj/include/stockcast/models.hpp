#pragma once

#include "stockcast/layers.hpp"
#include "stockcast/tensor.hpp"
#include "stockcast/windowing.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stockcast {

enum class ModelKind { Mlp, Cnn, Gru, Lstm };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::Mlp, ModelKind::Cnn, ModelKind::Gru, ModelKind::Lstm};

/// "MLP", "CNN", "GRU", "LSTM"
std::string_view to_string(ModelKind kind);
/// Case-insensitive; throws InvalidConfig.
ModelKind parse_model_kind(std::string_view text);

/// Per-architecture hyperparameter overrides, keyed by name (see `build_model`).
using Overrides = std::map<std::string, std::string>;

struct ArchSpec {
    ModelKind kind = ModelKind::Mlp;
    std::size_t w = 3;
    std::size_t h = 1;
    Overrides overrides;

    bool operator==(const ArchSpec&) const = default;
};

/// A sequential network with its parameters; maps a length-w window to h outputs.
/// Copying a Model copies its parameters and shares the immutable layers.
class Model final : public Predictor {
public:
    Model(ModelKind kind, std::size_t w, std::size_t h, std::vector<std::shared_ptr<const Layer>> layers,
          ParamSet params);

    ModelKind kind() const noexcept { return kind_; }
    std::size_t input_arity() const override { return w_; }
    std::size_t output_arity() const override { return h_; }
    std::vector<double> predict(std::span<const double> window) const override;

    /// Forward + backward for one (input, target) pair; gradients are added to
    /// `grads` and the sample's MSE is returned.
    double accumulate_gradient(std::span<const double> input, std::span<const double> target,
                               ParamSet& grads) const;

    ParamSet& params() noexcept { return params_; }
    const ParamSet& params() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.parameter_count(); }
    const std::vector<std::shared_ptr<const Layer>>& layers() const noexcept { return layers_; }

    /// One line per layer with its output shape.
    std::string summary() const;

private:
    Tensor run_forward(const Tensor& x, std::vector<LayerCache>* caches) const;

    ModelKind kind_;
    std::size_t w_;
    std::size_t h_;
    std::vector<std::shared_ptr<const Layer>> layers_;
    ParamSet params_;
};

/// Dense w->16->16->h, relu on every layer including the output.
/// Overrides: `hidden` ("16,16"), `output_activation` (relu|linear).
Model build_mlp(std::size_t w, std::size_t h, std::uint64_t seed = 0, const Overrides& overrides = {});

/// conv(32, relu) -> conv(32, relu) -> maxpool(2) -> flatten -> dense(32, relu) -> dense(h, relu).
/// Overrides: `filters` ("32,32"), `kernel_size` (3), `pool` (2), `dense` (32),
/// `auto_kernel` (true: shrink the kernel until the pooled length is >= 1),
/// `output_activation`. Throws WindowTooSmall.
Model build_cnn(std::size_t w, std::size_t h, std::uint64_t seed = 0, const Overrides& overrides = {});

/// Scalar sequence -> GRU(256, sequences) -> relu -> GRU(128) -> dense(h, linear).
/// Overrides: `hidden` ("256,128"), `inter_activation` (relu|linear|tanh).
Model build_gru(std::size_t w, std::size_t h, std::uint64_t seed = 0, const Overrides& overrides = {});
Model build_lstm(std::size_t w, std::size_t h, std::uint64_t seed = 0, const Overrides& overrides = {});

Model build_model(const ArchSpec& spec, std::uint64_t seed);

/// Kernel size the CNN builder uses for window `w`; throws WindowTooSmall.
std::size_t cnn_kernel_size(std::size_t w, std::size_t requested, std::size_t pool, bool auto_kernel);

}  // namespace stockcast
