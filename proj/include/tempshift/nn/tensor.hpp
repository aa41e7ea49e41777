#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tempshift::nn {

/// NCDHW extents. Parameters reuse the same five slots (e.g. O, C, kd, kh, kw).
struct Shape {
    int n = 0;
    int c = 0;
    int d = 0;
    int h = 0;
    int w = 0;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(n) * c * d * h * w;
    }
    std::size_t sample_size() const noexcept {
        return static_cast<std::size_t>(c) * d * h * w;
    }
    std::size_t voxels() const noexcept { return static_cast<std::size_t>(d) * h * w; }

    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense float tensor with value semantics.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    float* ptr() noexcept { return data_.data(); }
    const float* ptr() const noexcept { return data_.data(); }

    float& operator[](std::size_t i) noexcept { return data_[i]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }

    float& at(int n, int c, int d, int h, int w) noexcept { return data_[offset(n, c, d, h, w)]; }
    float at(int n, int c, int d, int h, int w) const noexcept {
        return data_[offset(n, c, d, h, w)];
    }

    std::span<float> sample(int n) noexcept {
        return std::span<float>(data_).subspan(n * shape_.sample_size(), shape_.sample_size());
    }
    std::span<const float> sample(int n) const noexcept {
        return std::span<const float>(data_).subspan(n * shape_.sample_size(),
                                                     shape_.sample_size());
    }

    void fill(float v);
    /// this += other (same shape).
    void accumulate(const Tensor& other);

private:
    std::size_t offset(int n, int c, int d, int h, int w) const noexcept {
        return (((static_cast<std::size_t>(n) * shape_.c + c) * shape_.d + d) * shape_.h + h) *
                   shape_.w + w;
    }

    Shape shape_{};
    std::vector<float> data_;
};

/// A trainable tensor with its gradient buffer.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}

    void zero_grad() { grad.fill(0.0f); }
};

} // namespace tempshift::nn
