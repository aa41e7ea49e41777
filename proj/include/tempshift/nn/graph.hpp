#pragma once

#include "tempshift/nn/tensor.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace tempshift::nn {

/// Handle to a node of a Graph.
struct Var {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t id = npos;

    bool valid() const noexcept { return id != npos; }
    bool operator==(const Var&) const = default;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
/// insertion order is a valid backward order. One graph per forward pass.
class Graph {
public:
    using Backward = std::function<void(Graph&, Var self)>;

    Var input(Tensor value, bool requires_grad = false);
    /// Leaf aliasing `p.value`; backward() accumulates into `p.grad`.
    Var parameter(Parameter& p);
    /// Leaf aliasing a parameter without gradient tracking (inference).
    Var constant_ref(const Tensor& value);

    Var record(Tensor value, std::vector<Var> parents, Backward backward, std::string op);

    const Tensor& value(Var v) const;
    /// Gradient buffer of `v`, zero-initialised on first access.
    Tensor& grad(Var v);
    bool requires_grad(Var v) const;

    /// Seeds d(root) and propagates to every node that requires grad.
    /// Interior gradients are released as they are consumed, so calls for
    /// several roots add up at the parameters and input leaves.
    void backward(Var root, const Tensor& seed);

    std::size_t size() const noexcept { return nodes_.size(); }
    const std::string& op(Var v) const;
    const std::vector<Var>& parents(Var v) const;
    std::vector<Var> consumers(Var v) const;

private:
    struct Node {
        Tensor value;
        const Tensor* alias = nullptr;
        Tensor grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        std::vector<Var> parents;
        Backward backward;
        std::string op;
    };

    const Node& node(Var v) const;
    Node& node(Var v);

    std::vector<Node> nodes_;
};

} // namespace tempshift::nn
