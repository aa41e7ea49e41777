#include "tempshift/nn/adam.hpp"

#include <cmath>

namespace tempshift::nn {

Adam::Adam(std::vector<Parameter>& params, AdamOptions options)
    : params_(&params), opt_(options) {
    for (const auto& p : params) {
        m_.emplace_back(p.value.size(), 0.0f);
        v_.emplace_back(p.value.size(), 0.0f);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    const auto lr = static_cast<float>(opt_.learning_rate * std::sqrt(bc2) / bc1);
    const auto b1 = static_cast<float>(opt_.beta1);
    const auto b2 = static_cast<float>(opt_.beta2);
    const auto eps = static_cast<float>(opt_.epsilon * std::sqrt(bc2));
    for (std::size_t k = 0; k < params_->size(); ++k) {
        Parameter& p = (*params_)[k];
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const float gi = p.grad[i];
            m[i] = b1 * m[i] + (1.0f - b1) * gi;
            v[i] = b2 * v[i] + (1.0f - b2) * gi * gi;
            p.value[i] -= lr * m[i] / (std::sqrt(v[i]) + eps);
        }
    }
}

} // namespace tempshift::nn
