#include "stockcast/models.hpp"

#include "stockcast/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <set>

namespace stockcast {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

class OverrideReader {
public:
    OverrideReader(const Overrides& overrides, std::string_view arch, std::set<std::string> allowed)
        : overrides_(overrides) {
        for (const auto& [key, value] : overrides) {
            if (!allowed.count(key)) {
                throw InvalidConfig(fmt::format("unknown {} override '{}'", arch, key));
            }
        }
    }

    std::size_t size(const std::string& key, std::size_t fallback) const {
        const auto it = overrides_.find(key);
        if (it == overrides_.end()) return fallback;
        return parse_size(key, it->second);
    }

    std::vector<std::size_t> sizes(const std::string& key, std::vector<std::size_t> fallback) const {
        const auto it = overrides_.find(key);
        if (it == overrides_.end()) return fallback;
        std::vector<std::size_t> out;
        std::size_t start = 0;
        const std::string& text = it->second;
        while (start <= text.size()) {
            const auto comma = text.find(',', start);
            out.push_back(parse_size(key, text.substr(start, comma == std::string::npos ? std::string::npos
                                                                                        : comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    }

    bool flag(const std::string& key, bool fallback) const {
        const auto it = overrides_.find(key);
        if (it == overrides_.end()) return fallback;
        const auto v = lower(it->second);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw InvalidConfig(fmt::format("override '{}' must be a boolean, got '{}'", key, it->second));
    }

    Activation activation(const std::string& key, Activation fallback) const {
        const auto it = overrides_.find(key);
        if (it == overrides_.end()) return fallback;
        const auto v = lower(it->second);
        if (v == "relu") return Activation::Relu;
        if (v == "linear") return Activation::Linear;
        if (v == "tanh") return Activation::Tanh;
        if (v == "sigmoid") return Activation::Sigmoid;
        throw InvalidConfig(fmt::format("override '{}' has unknown activation '{}'", key, it->second));
    }

private:
    static std::size_t parse_size(const std::string& key, const std::string& text) {
        std::size_t pos = 0;
        unsigned long value = 0;
        try {
            value = std::stoul(text, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != text.size() || value == 0) {
            throw InvalidConfig(fmt::format("override '{}' must be a positive integer, got '{}'", key, text));
        }
        return value;
    }

    const Overrides& overrides_;
};

/// Chains layer shapes, initializes parameters with one RNG stream per layer.
Model assemble(ModelKind kind, std::size_t w, std::size_t h, std::vector<std::shared_ptr<const Layer>> layers,
               std::uint64_t seed) {
    const Rng root(seed);
    ParamSet params;
    Shape shape{w};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        shape = layers[i]->output_shape(shape);
        Rng layer_rng = root.split(i);
        layers[i]->init_params(params, layer_rng);
    }
    if (shape != Shape{h}) {
        throw ShapeMismatch(fmt::format("{} output shape {} does not match horizon {}", to_string(kind),
                                        shape_to_string(shape), h));
    }
    return Model(kind, w, h, std::move(layers), std::move(params));
}

void require_arity(std::size_t w, std::size_t h) {
    if (w == 0 || h == 0) throw ArityMismatch("model window and horizon must be positive");
}

template <class Recurrent>
Model build_recurrent(ModelKind kind, std::size_t w, std::size_t h, std::uint64_t seed, const Overrides& overrides) {
    require_arity(w, h);
    const OverrideReader read(overrides, to_string(kind), {"hidden", "inter_activation"});
    const auto hidden = read.sizes("hidden", {256, 128});
    const auto inter = read.activation("inter_activation", Activation::Relu);

    std::vector<std::shared_ptr<const Layer>> layers;
    layers.push_back(std::make_shared<ReshapeLayer>(Shape{w, 1}));
    std::size_t in = 1;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        const bool last = i + 1 == hidden.size();
        layers.push_back(std::make_shared<Recurrent>(fmt::format("rnn{}", i + 1), in, hidden[i], !last));
        if (!last) layers.push_back(std::make_shared<ActivationLayer>(inter));
        in = hidden[i];
    }
    layers.push_back(std::make_shared<DenseLayer>("out", in, h, Activation::Linear));
    return assemble(kind, w, h, std::move(layers), seed);
}

}  // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Mlp: return "MLP";
        case ModelKind::Cnn: return "CNN";
        case ModelKind::Gru: return "GRU";
        case ModelKind::Lstm: return "LSTM";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view text) {
    const auto v = lower(text);
    if (v == "mlp") return ModelKind::Mlp;
    if (v == "cnn") return ModelKind::Cnn;
    if (v == "gru") return ModelKind::Gru;
    if (v == "lstm") return ModelKind::Lstm;
    throw InvalidConfig("unknown model kind '" + std::string(text) + "'");
}

Model::Model(ModelKind kind, std::size_t w, std::size_t h, std::vector<std::shared_ptr<const Layer>> layers,
             ParamSet params)
    : kind_(kind), w_(w), h_(h), layers_(std::move(layers)), params_(std::move(params)) {}

Tensor Model::run_forward(const Tensor& x, std::vector<LayerCache>* caches) const {
    if (caches) caches->assign(layers_.size(), {});
    Tensor a = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        a = layers_[i]->forward(params_, a, caches ? &(*caches)[i] : nullptr);
    }
    return a;
}

std::vector<double> Model::predict(std::span<const double> window) const {
    if (window.size() != w_) {
        throw ArityMismatch(fmt::format("{} expects a window of {} values, got {}", to_string(kind_), w_,
                                        window.size()));
    }
    return run_forward(Tensor({w_}, {window.begin(), window.end()}), nullptr).values();
}

double Model::accumulate_gradient(std::span<const double> input, std::span<const double> target,
                                  ParamSet& grads) const {
    if (input.size() != w_ || target.size() != h_) {
        throw ArityMismatch(fmt::format("{} sample arity {}->{} but model is {}->{}", to_string(kind_),
                                        input.size(), target.size(), w_, h_));
    }
    std::vector<LayerCache> caches;
    const Tensor pred = run_forward(Tensor({w_}, {input.begin(), input.end()}), &caches);
    const Tensor tgt({h_}, {target.begin(), target.end()});
    const double loss = mse(pred, tgt);
    Tensor grad = mse_grad(pred, tgt);
    for (std::size_t i = layers_.size(); i-- > 0;) {
        grad = layers_[i]->backward(params_, caches[i], grad, grads);
    }
    return loss;
}

std::string Model::summary() const {
    std::string out = fmt::format("{} w={} h={} params={}\n", to_string(kind_), w_, h_, parameter_count());
    Shape shape{w_};
    for (const auto& layer : layers_) {
        shape = layer->output_shape(shape);
        out += fmt::format("  {:<10} -> {}\n", layer->kind(), shape_to_string(shape));
    }
    return out;
}

Model build_mlp(std::size_t w, std::size_t h, std::uint64_t seed, const Overrides& overrides) {
    require_arity(w, h);
    const OverrideReader read(overrides, "MLP", {"hidden", "output_activation"});
    const auto hidden = read.sizes("hidden", {16, 16});
    const auto out_act = read.activation("output_activation", Activation::Relu);

    std::vector<std::shared_ptr<const Layer>> layers;
    std::size_t in = w;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        layers.push_back(std::make_shared<DenseLayer>(fmt::format("dense{}", i + 1), in, hidden[i], Activation::Relu));
        in = hidden[i];
    }
    layers.push_back(std::make_shared<DenseLayer>("out", in, h, out_act));
    return assemble(ModelKind::Mlp, w, h, std::move(layers), seed);
}

std::size_t cnn_kernel_size(std::size_t w, std::size_t requested, std::size_t pool, bool auto_kernel) {
    // two valid convolutions leave w - 2(k - 1) points, which must pool to at least one
    const auto fits = [&](std::size_t k) { return k >= 1 && w + 2 >= 2 * k && (w + 2 - 2 * k) >= pool; };
    if (fits(requested)) return requested;
    if (auto_kernel) {
        for (std::size_t k = requested; k-- > 1;) {
            if (fits(k)) return k;
        }
    }
    throw WindowTooSmall(fmt::format("CNN window {} is too small for kernel {} and pool {}", w, requested, pool));
}

Model build_cnn(std::size_t w, std::size_t h, std::uint64_t seed, const Overrides& overrides) {
    require_arity(w, h);
    const OverrideReader read(overrides, "CNN",
                              {"filters", "kernel_size", "pool", "dense", "auto_kernel", "output_activation"});
    const auto filters = read.sizes("filters", {32, 32});
    if (filters.size() != 2) throw InvalidConfig("CNN override 'filters' needs exactly two sizes");
    const std::size_t pool = read.size("pool", 2);
    const std::size_t dense_units = read.size("dense", 32);
    const std::size_t k = cnn_kernel_size(w, read.size("kernel_size", 3), pool, read.flag("auto_kernel", true));
    const auto out_act = read.activation("output_activation", Activation::Relu);

    const std::size_t len2 = w - 2 * (k - 1);
    const std::size_t pooled = len2 / pool;
    std::vector<std::shared_ptr<const Layer>> layers;
    layers.push_back(std::make_shared<ReshapeLayer>(Shape{1, w}));
    layers.push_back(std::make_shared<Conv1dLayer>("conv1", 1, filters[0], k, Activation::Relu));
    layers.push_back(std::make_shared<Conv1dLayer>("conv2", filters[0], filters[1], k, Activation::Relu));
    layers.push_back(std::make_shared<MaxPool1dLayer>(pool));
    layers.push_back(std::make_shared<ReshapeLayer>(Shape{filters[1] * pooled}));
    layers.push_back(std::make_shared<DenseLayer>("dense1", filters[1] * pooled, dense_units, Activation::Relu));
    layers.push_back(std::make_shared<DenseLayer>("out", dense_units, h, out_act));
    return assemble(ModelKind::Cnn, w, h, std::move(layers), seed);
}

Model build_gru(std::size_t w, std::size_t h, std::uint64_t seed, const Overrides& overrides) {
    return build_recurrent<GruLayer>(ModelKind::Gru, w, h, seed, overrides);
}

Model build_lstm(std::size_t w, std::size_t h, std::uint64_t seed, const Overrides& overrides) {
    return build_recurrent<LstmLayer>(ModelKind::Lstm, w, h, seed, overrides);
}

Model build_model(const ArchSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
        case ModelKind::Mlp: return build_mlp(spec.w, spec.h, seed, spec.overrides);
        case ModelKind::Cnn: return build_cnn(spec.w, spec.h, seed, spec.overrides);
        case ModelKind::Gru: return build_gru(spec.w, spec.h, seed, spec.overrides);
        case ModelKind::Lstm: return build_lstm(spec.w, spec.h, seed, spec.overrides);
    }
    throw InvalidConfig("unknown model kind");
}

}  // namespace stockcast
