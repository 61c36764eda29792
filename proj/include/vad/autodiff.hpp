#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "vad/tensor.hpp"

namespace vad::ad {

// Reverse-mode tape over Tensor values. Deliberately restricted to the ops
// the two branches need; single-threaded, deterministic evaluation order.
class Tape;

struct Value {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

class Tape {
public:
    Value leaf(Tensor value, bool requires_grad = false);

    Value matmul(Value a, Value b);
    Value add(Value a, Value b);            // same shape
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);            // elementwise
    Value add_rowvec(Value a, Value bias);  // (m x n) + (n)
    Value tanh(Value a);
    Value exp(Value a);
    Value scale(Value a, double c);
    Value add_const(Value a, double c);
    Value row_sum(Value a);                 // (m x n) -> (m)
    Value mean_all(Value a);                // scalar (shape {1})
    Value gather_cols(Value a, const std::vector<std::size_t>& idx);
    // (m x |idx|) -> (m x n), zero elsewhere
    Value scatter_cols(Value a, const std::vector<std::size_t>& idx, std::size_t n);
    Value reshape(Value a, std::vector<std::size_t> new_shape);
    // mean cross-entropy of softmax(logits) against integer labels; shape {1}
    Value softmax_cross_entropy(Value logits, const std::vector<int>& labels);

    const Tensor& value(Value v) const { return nodes_[v.idx].val; }
    const Tensor& grad(Value v) const { return nodes_[v.idx].grad; }

    // Seeds d(root)/d(root) = 1 and back-propagates. Root must be scalar.
    void backward(Value root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor val;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Tape&)> back;  // empty for leaves
    };

    int push(Tensor val, bool requires_grad, std::function<void(Tape&)> back);
    Tensor& grad_ref(int idx) { return nodes_[idx].grad; }
    Node& node(int idx) { return nodes_[idx]; }

    std::vector<Node> nodes_;
};

}  // namespace vad::ad
