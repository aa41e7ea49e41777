#include "tempshift/nn/graph.hpp"

#include "tempshift/errors.hpp"

namespace tempshift::nn {

Var Graph::input(Tensor value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.op = "input";
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::parameter(Parameter& p) {
    Node n;
    n.alias = &p.value;
    n.param = &p;
    n.requires_grad = true;
    n.op = "param:" + p.name;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::constant_ref(const Tensor& value) {
    Node n;
    n.alias = &value;
    n.op = "const";
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::vector<Var> parents, Backward backward, std::string op) {
    Node n;
    n.value = std::move(value);
    for (Var p : parents) {
        if (!p.valid() || p.id >= nodes_.size()) {
            throw InternalError("graph: op '" + op + "' references an unknown node");
        }
        n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
    }
    n.parents = std::move(parents);
    if (n.requires_grad) n.backward = std::move(backward);
    n.op = std::move(op);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
    if (!v.valid() || v.id >= nodes_.size()) throw InternalError("graph: invalid node handle");
    return nodes_[v.id];
}

Graph::Node& Graph::node(Var v) {
    if (!v.valid() || v.id >= nodes_.size()) throw InternalError("graph: invalid node handle");
    return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const {
    const Node& n = node(v);
    return n.alias ? *n.alias : n.value;
}

Tensor& Graph::grad(Var v) {
    Node& n = node(v);
    if (n.grad.empty()) {
        n.grad = Tensor(value(v).shape());
    }
    return n.grad;
}

bool Graph::requires_grad(Var v) const {
    return node(v).requires_grad;
}

void Graph::backward(Var root, const Tensor& seed) {
    if (seed.shape() != value(root).shape()) {
        throw InternalError("graph: backward seed shape " + seed.shape().str() +
                            " does not match root " + value(root).shape().str());
    }
    if (!requires_grad(root)) return;
    grad(root).accumulate(seed);
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty() || !n.requires_grad) continue;
        if (n.backward) n.backward(*this, Var{i});
        if (n.param) n.param->grad.accumulate(n.grad);
        // Consumed; a later backward() from another root starts from zero here.
        if (n.backward || n.param) n.grad = Tensor{};
    }
}

const std::string& Graph::op(Var v) const {
    return node(v).op;
}

const std::vector<Var>& Graph::parents(Var v) const {
    return node(v).parents;
}

std::vector<Var> Graph::consumers(Var v) const {
    std::vector<Var> out;
    for (std::size_t i = v.id + 1; i < nodes_.size(); ++i) {
        for (Var p : nodes_[i].parents) {
            if (p == v) {
                out.push_back(Var{i});
                break;
            }
        }
    }
    return out;
}

} // namespace tempshift::nn
