#include "tempshift/nn/tensor.hpp"

#include "tempshift/errors.hpp"

#include <algorithm>

namespace tempshift::nn {

std::string Shape::str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(d) + ", " +
           std::to_string(h) + ", " + std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw DataError("tensor: " + std::to_string(data_.size()) + " values for shape " +
                        shape_.str());
    }
}

void Tensor::fill(float v) {
    std::fill(data_.begin(), data_.end(), v);
}

void Tensor::accumulate(const Tensor& other) {
    if (other.shape_ != shape_) {
        throw InternalError("tensor accumulate: shape " + other.shape_.str() + " into " +
                            shape_.str());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

} // namespace tempshift::nn
