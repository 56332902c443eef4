#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "remnet/tensor.hpp"

namespace remnet {

// One node of the dynamically built computation graph. `backward_rule` reads
// this node's grad and accumulates into the parents' grads.
template <typename T>
struct GraphNode {
    TensorT<T> value;
    TensorT<T> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<GraphNode>> parents;
    std::function<void(GraphNode&)> backward_rule;

    void ensure_grad() {
        if (grad.shape != value.shape) grad = TensorT<T>(value.shape);
    }
    void accumulate(const TensorT<T>& g) {
        ensure_grad();
        for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] += g.data[i];
    }
};

// Value-semantics handle to a graph node.
template <typename T>
class VarT {
  public:
    VarT() = default;
    explicit VarT(std::shared_ptr<GraphNode<T>> n) : node_(std::move(n)) {}

    static VarT leaf(TensorT<T> value, bool requires_grad) {
        auto n = std::make_shared<GraphNode<T>>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        return VarT(std::move(n));
    }

    static VarT make(TensorT<T> value, std::vector<std::shared_ptr<GraphNode<T>>> parents,
                     std::function<void(GraphNode<T>&)> rule) {
        auto n = std::make_shared<GraphNode<T>>();
        n->value = std::move(value);
        n->parents = std::move(parents);
        for (const auto& p : n->parents)
            if (p->requires_grad) n->requires_grad = true;
        if (n->requires_grad) n->backward_rule = std::move(rule);
        return VarT(std::move(n));
    }

    bool valid() const { return node_ != nullptr; }
    const TensorT<T>& value() const { return node_->value; }
    TensorT<T>& value() { return node_->value; }
    const TensorT<T>& grad() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    const std::shared_ptr<GraphNode<T>>& node() const { return node_; }

    // Reverse-mode sweep from this node. Visits every reachable node exactly
    // once in reverse topological order; fan-out gradients accumulate.
    void backward() {
        node_->ensure_grad();
        for (auto& g : node_->grad.data) g = T(1);
        std::vector<GraphNode<T>*> order;
        std::unordered_set<GraphNode<T>*> seen;
        std::vector<std::pair<GraphNode<T>*, std::size_t>> stack;
        stack.emplace_back(node_.get(), 0);
        seen.insert(node_.get());
        while (!stack.empty()) {
            auto& [n, next] = stack.back();
            if (next < n->parents.size()) {
                GraphNode<T>* p = n->parents[next++].get();
                if (!seen.count(p)) {
                    seen.insert(p);
                    stack.emplace_back(p, 0);
                }
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
        // `order` is topological with parents first; walk it backwards.
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            GraphNode<T>* n = *it;
            if (n->requires_grad && n->backward_rule) {
                n->ensure_grad();
                n->backward_rule(*n);
            }
        }
    }

  private:
    std::shared_ptr<GraphNode<T>> node_;
};

using Var = VarT<float>;
using VarD = VarT<double>;

}  // namespace remnet
