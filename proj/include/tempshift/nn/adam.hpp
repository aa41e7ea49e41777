#pragma once

#include "tempshift/nn/tensor.hpp"

#include <vector>

namespace tempshift::nn {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment gradient descent over a fixed parameter list.
class Adam {
public:
    Adam(std::vector<Parameter>& params, AdamOptions options = {});

    /// Applies one update from the gradients currently stored in the parameters.
    void step();
    long steps() const noexcept { return t_; }

private:
    std::vector<Parameter>* params_;
    AdamOptions opt_;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
    long t_ = 0;
};

} // namespace tempshift::nn
