#include "remnet/layers.hpp"

#include "remnet/init.hpp"

namespace remnet {

Conv2D::Conv2D(const std::string& name, int kernel, int in_c, int out_c, int stride_,
               std::uint64_t seed)
    : stride(stride_) {
    if (kernel < 1 || in_c < 1 || out_c < 1 || stride_ < 1)
        throw ValueError("Conv2D '" + name + "': kernel/channels/stride must be positive");
    weight = Parameter(name + ".weight", glorot_uniform({kernel, kernel, in_c, out_c}, seed));
    bias = Parameter(name + ".bias", Tensor({out_c}));
}

Var Conv2D::forward(const Var& x) {
    return conv2d(x, weight.leaf(), bias.leaf(), stride);
}

void Conv2D::collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

BatchNorm::BatchNorm(const std::string& name, int channels) {
    if (channels < 1) throw ValueError("BatchNorm '" + name + "': channels must be positive");
    gamma = Parameter(name + ".gamma", Tensor({channels}, 1.0f));
    beta = Parameter(name + ".beta", Tensor({channels}));
    running_mean = Tensor({channels});
    running_var = Tensor({channels}, 1.0f);
}

Var BatchNorm::forward(const Var& x, bool train) {
    if (train) {
        BatchNormResult<float> r = batch_norm_train(x, gamma.leaf(), beta.leaf(), eps);
        const int ch = running_mean.shape[0];
        for (int c = 0; c < ch; ++c) {
            running_mean.data[c] =
                momentum * running_mean.data[c] + (1.0f - momentum) * r.batch_mean.data[c];
            running_var.data[c] =
                momentum * running_var.data[c] + (1.0f - momentum) * r.batch_var.data[c];
        }
        stat_count += 1;
        return r.out;
    }
    if (!has_stats())
        throw ValueError("BatchNorm '" + gamma.name +
                         "': inference requested before any statistics were accumulated");
    return batch_norm_infer(x, gamma.leaf(), beta.leaf(), running_mean, running_var, eps);
}

void BatchNorm::collect(std::vector<Parameter*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

PReLULayer::PReLULayer(const std::string& name, int channels, float init) {
    if (channels < 1) throw ValueError("PReLULayer '" + name + "': channels must be positive");
    alpha = Parameter(name + ".alpha", Tensor({channels}, init));
}

Var PReLULayer::forward(const Var& x) { return prelu(x, alpha.leaf()); }

void PReLULayer::collect(std::vector<Parameter*>& out) { out.push_back(&alpha); }

}  // namespace remnet
