#pragma once

// Minimal reverse-mode differentiation over dense double arrays.
//
// A DiffArray is a shared handle to a Node. Ops build new nodes that keep
// their inputs alive, so the computation trace is the DAG reachable from the
// loss. backward() orders that DAG topologically and runs each node's
// backward function in reverse. Only leaves keep their gradients afterwards;
// leaf gradients accumulate across backward() calls until reset.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segforge::ad {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node;
using BackwardFn = std::function<void(const Node& self)>;

struct Node {
    Shape shape;
    std::vector<double> value;
    /// Empty until materialized.
    std::vector<double> grad;
    bool requires_grad = false;
    bool is_leaf = true;
    std::string_view op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    BackwardFn backward_fn;

    std::vector<double>& ensure_grad();
    /// grad += g; materializes the gradient first if needed.
    void accumulate_grad(std::span<const double> g);
};

class DiffArray {
public:
    DiffArray() = default;

    static DiffArray constant(Shape shape, std::vector<double> values);
    /// Trainable leaf.
    static DiffArray parameter(Shape shape, std::vector<double> values);
    static DiffArray zeros(Shape shape, bool requires_grad = false);
    static DiffArray scalar(double v);

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t size() const { return node_->value.size(); }

    std::span<const double> values() const { return node_->value; }
    /// Direct write access for initialization and optimizer updates. Does not
    /// go through the trace.
    std::span<double> mutable_values() { return node_->value; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    /// Materializes the gradient as zeros.
    void zero_grad();

    /// Same values, cut from the trace.
    DiffArray detach() const;

    const std::shared_ptr<Node>& node() const { return node_; }
    explicit DiffArray(std::shared_ptr<Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<Node> node_;
};

/// Topologically ordered view of the nodes that need gradients below a root.
class Trace {
public:
    static Trace record(const DiffArray& root);

    std::span<Node* const> nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    /// Every node's inputs appear before it.
    bool is_topological() const;

private:
    std::vector<Node*> nodes_;
};

/// Back-propagates from a scalar. Throws ValidationError for non-scalar
/// losses and NumericError if a leaf gradient becomes non-finite.
void backward(const DiffArray& loss);

/// Zeroes (and materializes) the gradients of `params`.
void reset_grads(std::span<DiffArray> params);

/// Builds an op result. Throws NumericError if `value` has NaN/Inf. The node
/// is attached to the trace only when an input requires a gradient.
DiffArray make_op(std::string_view name, Shape shape, std::vector<double> value,
                  std::vector<DiffArray> inputs, BackwardFn backward_fn);

}  // namespace segforge::ad
