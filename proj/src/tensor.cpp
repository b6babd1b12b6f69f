#include "stockcast/tensor.hpp"

#include "stockcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace stockcast {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw ShapeMismatch("shape " + shape_to_string(shape_) + " does not hold " +
                            std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::from_vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::reshaped(Shape shape) const& {
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::reshaped(Shape shape) && {
    return Tensor(std::move(shape), std::move(data_));
}

void Tensor::fill(double value) {
    std::fill(data_.begin(), data_.end(), value);
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
    if (a.shape() != b.shape()) {
        throw ShapeMismatch(std::string(what) + ": " + shape_to_string(a.shape()) + " vs " +
                            shape_to_string(b.shape()));
    }
}

Tensor& ParamSet::add(std::string name, Tensor value) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    entries_.emplace_back(std::move(name), std::move(value));
    return entries_.back().second;
}

bool ParamSet::contains(std::string_view name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

Tensor& ParamSet::get(std::string_view name) {
    return const_cast<Tensor&>(std::as_const(*this).get(name));
}

const Tensor& ParamSet::get(std::string_view name) const {
    for (const auto& [key, tensor] : entries_) {
        if (key == name) return tensor;
    }
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::size_t ParamSet::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    out.entries_.reserve(entries_.size());
    for (const auto& [name, tensor] : entries_) out.entries_.emplace_back(name, Tensor(tensor.shape()));
    return out;
}

void ParamSet::fill(double value) {
    for (auto& e : entries_) e.second.fill(value);
}

bool ParamSet::same_layout(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first != other.entries_[i].first ||
            entries_[i].second.shape() != other.entries_[i].second.shape()) {
            return false;
        }
    }
    return true;
}

}  // namespace stockcast
