#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "texseg/core/tensor.hpp"

namespace texseg::ad {

// Reverse-mode tape. A Node owns its forward value and (once backward runs)
// its gradient. Ops build child nodes whose backward closures scatter into
// parent gradients. Parameters are leaves with requires_grad set; a parameter
// that never enters a graph keeps grad_ready() == false, which the optimizer
// uses to leave untouched parameters alone.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_allocated = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward_fn;

    Tensor& ensure_grad() {
        if (!grad_allocated) {
            grad = Tensor(value.shape());
            grad_allocated = true;
        }
        return grad;
    }

    bool grad_ready() const { return grad_allocated; }

    void clear_grad() {
        grad = Tensor();
        grad_allocated = false;
    }
};

using Var = std::shared_ptr<Node>;

inline Var leaf(Tensor value, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

inline Var constant(Tensor value) { return leaf(std::move(value), false); }
inline Var parameter(Tensor value) { return leaf(std::move(value), true); }

inline Var make_op(Tensor value, std::vector<Var> parents) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    return n;
}

// Topological order (parents before children), iterative DFS.
inline std::vector<Node*> topo_order(const Var& root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

// Backpropagates from a scalar root. Gradients accumulate, so callers reset
// parameter gradients between steps via clear_grad().
inline void backward(const Var& root) {
    if (root->value.numel() != 1)
        throw std::invalid_argument("backward: root must be scalar");
    if (!root->requires_grad) return;
    auto order = topo_order(root);
    root->ensure_grad()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad_ready()) n->backward_fn();
    }
}

} // namespace texseg::ad
