#pragma once

#include <memory>
#include <string>
#include <vector>

#include "remnet/graph.hpp"
#include "remnet/tensor.hpp"

namespace remnet {

// A trainable tensor with its Adam state and a dotted-path name such as
// "remnant.0.conv1.weight".
struct Parameter {
    Tensor tensor;
    std::string name;
    std::vector<float> adam_m, adam_v;
    long step_count = 0;

    // Leaf node from the most recent forward pass; its grad is filled by
    // backward() and consumed by the optimizer.
    std::shared_ptr<GraphNode<float>> live;

    Parameter() = default;
    Parameter(std::string n, Tensor t) : tensor(std::move(t)), name(std::move(n)) {
        adam_m.assign(tensor.numel(), 0.0f);
        adam_v.assign(tensor.numel(), 0.0f);
    }

    Var leaf() {
        Var v = Var::leaf(tensor, true);
        live = v.node();
        return v;
    }

    bool has_grad() const { return live && live->grad.shape == tensor.shape; }
    const Tensor& grad() const { return live->grad; }
    void release_graph() { live.reset(); }
};

struct AdamConfig {
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

// One Adam update with bias correction over an explicit gradient list.
// Rejects the whole step (no parameter is touched) if any gradient value is
// non-finite.
inline void adam_step(const std::vector<Parameter*>& params,
                      const std::vector<const Tensor*>& grads, float lr,
                      const AdamConfig& cfg = {}) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i]->shape != params[i]->tensor.shape)
            throw ShapeError("adam_step: gradient shape " + shape_str(grads[i]->shape) +
                             " does not match parameter '" + params[i]->name + "' shape " +
                             shape_str(params[i]->tensor.shape));
        if (!grads[i]->all_finite())
            throw ValueError("adam_step: non-finite gradient for parameter '" + params[i]->name +
                             "', step rejected");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        const Tensor& g = *grads[i];
        p.step_count += 1;
        const double t = static_cast<double>(p.step_count);
        const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), t);
        const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), t);
        for (std::size_t j = 0; j < p.tensor.numel(); ++j) {
            const float gv = g.data[j];
            p.adam_m[j] = cfg.beta1 * p.adam_m[j] + (1.0f - cfg.beta1) * gv;
            p.adam_v[j] = cfg.beta2 * p.adam_v[j] + (1.0f - cfg.beta2) * gv * gv;
            const double mhat = p.adam_m[j] / bc1;
            const double vhat = p.adam_v[j] / bc2;
            p.tensor.data[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
        }
    }
}

// Convenience form: take each parameter's gradient from its live graph leaf.
inline void adam_step_from_graph(const std::vector<Parameter*>& params, float lr,
                                 const AdamConfig& cfg = {}) {
    std::vector<Tensor> zeros;
    zeros.reserve(params.size());
    std::vector<const Tensor*> grads;
    grads.reserve(params.size());
    for (Parameter* p : params) {
        if (p->has_grad()) {
            grads.push_back(&p->grad());
        } else {
            zeros.emplace_back(p->tensor.shape);
            grads.push_back(&zeros.back());
        }
    }
    adam_step(params, grads, lr, cfg);
}

}  // namespace remnet
