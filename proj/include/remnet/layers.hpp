#pragma once

#include <string>
#include <vector>

#include "remnet/common.hpp"
#include "remnet/ops.hpp"
#include "remnet/optim.hpp"

namespace remnet {

// Strided 2D convolution layer with "same" padding; weight layout [K,K,Cin,Cout].
struct Conv2D {
    Parameter weight, bias;
    int stride = 1;

    Conv2D() = default;
    // `seed` drives the weight initialization; derive it from a model-level
    // seed and the layer name so rebuilds are bit-identical.
    Conv2D(const std::string& name, int kernel, int in_c, int out_c, int stride_,
           std::uint64_t seed);

    Var forward(const Var& x);
    void collect(std::vector<Parameter*>& out);
};

// Batch normalization layer holding learnable scale/shift plus exponentially
// averaged statistics for inference mode.
struct BatchNorm {
    Parameter gamma, beta;
    Tensor running_mean, running_var;
    long stat_count = 0;
    float momentum = 0.9f;
    float eps = 1e-5f;

    BatchNorm() = default;
    BatchNorm(const std::string& name, int channels);

    bool has_stats() const { return stat_count > 0; }
    // Train mode normalizes with batch statistics and folds them into the
    // running averages; inference mode applies the stored affine map and
    // rejects use before any statistics exist.
    Var forward(const Var& x, bool train);
    void collect(std::vector<Parameter*>& out);
};

struct PReLULayer {
    Parameter alpha;

    PReLULayer() = default;
    PReLULayer(const std::string& name, int channels, float init = 0.25f);

    Var forward(const Var& x);
    void collect(std::vector<Parameter*>& out);
};

}  // namespace remnet
