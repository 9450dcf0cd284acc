#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "segforge/autodiff.hpp"
#include "segforge/errors.hpp"

namespace segforge::ad {

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::vector<double>& Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

void Node::accumulate_grad(std::span<const double> g) {
    auto& dst = ensure_grad();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

namespace {

std::shared_ptr<Node> new_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    if (element_count(shape) != values.size()) {
        throw ValidationError("shape " + shape_string(shape) + " does not match " +
                              std::to_string(values.size()) + " values");
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return n;
}

void check_finite(std::span<const double> v, std::string_view what, std::string_view op) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NumericError("non-finite " + std::string(what) + " in op '" + std::string(op) + "'");
        }
    }
}

}  // namespace

DiffArray DiffArray::constant(Shape shape, std::vector<double> values) {
    return DiffArray(new_leaf(std::move(shape), std::move(values), false));
}

DiffArray DiffArray::parameter(Shape shape, std::vector<double> values) {
    return DiffArray(new_leaf(std::move(shape), std::move(values), true));
}

DiffArray DiffArray::zeros(Shape shape, bool requires_grad) {
    const auto n = element_count(shape);
    return DiffArray(new_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

DiffArray DiffArray::scalar(double v) { return constant({}, {v}); }

double DiffArray::item() const {
    if (size() != 1) {
        throw ValidationError("item() on array of shape " + shape_string(shape()));
    }
    return node_->value[0];
}

void DiffArray::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

DiffArray DiffArray::detach() const { return constant(shape(), node_->value); }

DiffArray make_op(std::string_view name, Shape shape, std::vector<double> value,
                  std::vector<DiffArray> inputs, BackwardFn backward_fn) {
    if (element_count(shape) != value.size()) {
        throw ValidationError("op '" + std::string(name) + "' produced " + std::to_string(value.size()) +
                              " values for shape " + shape_string(shape));
    }
    check_finite(value, "value", name);
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = name;
    n->is_leaf = false;
    n->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                   [](const DiffArray& a) { return a.defined() && a.requires_grad(); });
    if (n->requires_grad) {
        n->inputs.reserve(inputs.size());
        for (auto& a : inputs) n->inputs.push_back(a.defined() ? a.node() : nullptr);
        n->backward_fn = std::move(backward_fn);
    }
    return DiffArray(std::move(n));
}

Trace Trace::record(const DiffArray& root) {
    Trace trace;
    if (!root.defined() || !root.requires_grad()) return trace;
    // Iterative post-order DFS; emits a node after all of its inputs.
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* in = node->inputs[next++].get();
            if (in && in->requires_grad && visited.insert(in).second) {
                stack.emplace_back(in, 0);
            }
            continue;
        }
        trace.nodes_.push_back(node);
        stack.pop_back();
    }
    return trace;
}

bool Trace::is_topological() const {
    std::unordered_map<const Node*, std::size_t> pos;
    for (std::size_t i = 0; i < nodes_.size(); ++i) pos[nodes_[i]] = i;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        for (const auto& in : nodes_[i]->inputs) {
            if (!in || !in->requires_grad) continue;
            auto it = pos.find(in.get());
            if (it == pos.end() || it->second >= i) return false;
        }
    }
    return true;
}

void backward(const DiffArray& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw ValidationError("backward() needs a scalar loss");
    }
    if (!loss.requires_grad()) return;
    const Trace trace = Trace::record(loss);
    for (Node* n : trace.nodes()) {
        if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
    }
    Node* root = loss.node().get();
    root->ensure_grad()[0] += 1.0;

    const auto nodes = trace.nodes();
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        Node* n = *it;
        if (!n->is_leaf && n->backward_fn) n->backward_fn(*n);
    }
    for (Node* n : nodes) {
        if (n->is_leaf) {
            check_finite(n->grad, "gradient", "backward");
        } else {
            n->grad.clear();
            n->grad.shrink_to_fit();
        }
    }
}

void reset_grads(std::span<DiffArray> params) {
    for (auto& p : params) p.zero_grad();
}

}  // namespace segforge::ad
