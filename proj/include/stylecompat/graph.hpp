#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stylecompat/rng.hpp"
#include "stylecompat/tensor.hpp"

namespace stylecompat {

enum class OpKind : std::uint8_t {
    leaf,
    matmul,
    add,
    sub,
    scale,
    relu,
    tanh_op,
    sigmoid,
    softmax,
    log_op,
    sum,
    mean,
    square,
    sqrt_op,
    concat,
    dot,
    max_with_zero,
};

const char* op_name(OpKind k);

using NodeId = std::uint32_t;

// Reverse-mode tape. Forward values are computed eagerly as nodes are
// appended, so the node list is topologically ordered by construction.
// A graph instance is single-threaded; distinct graphs are independent.
class Graph {
public:
    NodeId leaf(Tensor t);
    NodeId leaf(std::vector<std::size_t> shape, std::vector<double> values,
                bool requires_grad = false);
    NodeId constant(double v);
    NodeId constant_vec(std::vector<double> values);

    // Generic entry point; op helpers below are thin wrappers.
    NodeId apply(OpKind kind, const std::vector<NodeId>& parents, double attr = 0.0);

    NodeId matmul(NodeId a, NodeId b) { return apply(OpKind::matmul, {a, b}); }
    NodeId add(NodeId a, NodeId b) { return apply(OpKind::add, {a, b}); }
    NodeId sub(NodeId a, NodeId b) { return apply(OpKind::sub, {a, b}); }
    NodeId scale(double c, NodeId a) { return apply(OpKind::scale, {a}, c); }
    NodeId relu(NodeId a) { return apply(OpKind::relu, {a}); }
    NodeId tanh(NodeId a) { return apply(OpKind::tanh_op, {a}); }
    NodeId sigmoid(NodeId a) { return apply(OpKind::sigmoid, {a}); }
    NodeId softmax(NodeId a) { return apply(OpKind::softmax, {a}); }
    NodeId log(NodeId a) { return apply(OpKind::log_op, {a}); }
    NodeId sum(NodeId a) { return apply(OpKind::sum, {a}); }
    NodeId mean(NodeId a) { return apply(OpKind::mean, {a}); }
    NodeId square(NodeId a) { return apply(OpKind::square, {a}); }
    NodeId sqrt(NodeId a) { return apply(OpKind::sqrt_op, {a}); }
    NodeId concat(const std::vector<NodeId>& parts) { return apply(OpKind::concat, parts); }
    NodeId dot(NodeId a, NodeId b) { return apply(OpKind::dot, {a, b}); }
    NodeId max_with_zero(NodeId a) { return apply(OpKind::max_with_zero, {a}); }

    const Tensor& at(NodeId id) const { return nodes_[id].t; }
    double value_scalar(NodeId id) const;
    const std::vector<double>& grad(NodeId id) const { return nodes_[id].t.grad; }
    std::size_t node_count() const { return nodes_.size(); }

    // d(root)/d(tensor) for every requires_grad tensor reachable from root.
    // Gradients accumulate additively across fan-out. Root must be scalar.
    void backward(NodeId root);

    // Smallest distance from any kinked op input (relu / max_with_zero at 0,
    // sqrt at 0) seen during forward. Finite-difference checks use this to
    // skip non-differentiable points.
    double kink_distance() const { return kink_distance_; }

private:
    struct Node {
        Tensor t;
        OpKind kind = OpKind::leaf;
        std::vector<NodeId> parents;
        double attr = 0.0;
    };

    void check_finite(const Tensor& t, OpKind kind) const;

    std::vector<Node> nodes_;
    double kink_distance_ = std::numeric_limits<double>::infinity();
};

// Gradient-vs-central-difference verification of a loss built on a Graph.
//
// probe(params, want_grads): evaluates the loss at the given parameters,
// returning the value, analytic gradients (only when want_grads), and the
// kink distance of the forward pass.
struct LossProbe {
    double value = 0.0;
    GradMap grads;
    double kink_distance = std::numeric_limits<double>::infinity();
};
using LossFn = std::function<LossProbe(const ParamMap&, bool want_grads)>;

struct FdCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // samples discarded for sitting on a kink
};

// Samples parameter entries, compares analytic gradients against central
// differences, and returns the max relative error over non-kink samples:
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
FdCheckResult finite_difference_check(const LossFn& loss, const ParamMap& params,
                                      double epsilon, std::size_t n_samples, Rng& rng);

}  // namespace stylecompat
