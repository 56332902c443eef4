#pragma once

#include <memory>
#include <string>
#include <vector>

#include "remnet/layers.hpp"

namespace remnet {

struct ConvSpec {
    int filters = 0;
    int kernel = 0;
    int stride = 1;
};

// Full architecture description; round-trips through JSON so checkpoints are
// self-describing.
struct ModelConfig {
    std::vector<int> remnant_filters = {64, 128, 256};  // one entry per remnant block
    bool remnant_prelu = false;                          // activation variant inside the blocks
    int in_channels = 3;
    std::string classifier = "strided-conv";             // or "toy"
    std::vector<ConvSpec> classifier_specs = {
        {64, 7, 2}, {128, 5, 2}, {256, 3, 2}, {512, 2, 2}};
    int pool_window = 4;
    std::vector<ConvSpec> toy_specs = {{8, 3, 2}, {16, 3, 2}};
    int n_class = 18;

    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

// The canonical full-size network.
ModelConfig canonical_config(int n_class = 18);
// A width-reduced variant of the same topology, small enough to train on a
// single CPU core in minutes.
ModelConfig desk_config(int n_class = 18, int remnant_blocks = 1);

struct RemnantBlockConfig {
    int filters = 64;
    int kernel = 3;
    int in_channels = 3;
    bool use_prelu = false;
};

// Data-driven preprocessing block: three convolutions on a batch-normalized
// input with dense skip concatenations, whose final 3-channel estimate is
// subtracted from that normalized input. Shape-preserving, and purely affine
// in inference mode unless the activation variant is enabled.
struct RemnantBlock {
    RemnantBlockConfig cfg;
    BatchNorm bn_in, bn1, bn2, bn3;
    Conv2D conv1, conv2, conv3;
    PReLULayer act1, act2;

    RemnantBlock() = default;
    RemnantBlock(const std::string& name, const RemnantBlockConfig& cfg, std::uint64_t seed);

    Var forward(const Var& x, bool train);
    void collect(std::vector<Parameter*>& out);
    void collect_norms(std::vector<BatchNorm*>& out);
};

// Anything that maps B×H×W×3 feature maps to B×n_class logits.
class ClassifierModule {
  public:
    virtual ~ClassifierModule() = default;
    virtual Var forward_logits(const Var& x, bool train) = 0;
    virtual void collect(std::vector<Parameter*>& out) = 0;
    virtual void collect_norms(std::vector<BatchNorm*>& out) = 0;
    virtual int n_class() const = 0;
};

// The strided-convolution classifier: four conv+BN+PReLU stages that halve the
// spatial extent, average pooling down to 1×1, and a 1×1 convolution head.
// No fully connected layers.
class ClassifierBlock : public ClassifierModule {
  public:
    ClassifierBlock(const std::string& name, const std::vector<ConvSpec>& specs, int pool_window,
                    int n_class, int in_channels, std::uint64_t seed);

    Var forward_logits(const Var& x, bool train) override;
    void collect(std::vector<Parameter*>& out) override;
    void collect_norms(std::vector<BatchNorm*>& out) override;
    int n_class() const override { return n_class_; }

  private:
    std::vector<Conv2D> convs_;
    std::vector<BatchNorm> bns_;
    std::vector<PReLULayer> acts_;
    int pool_window_;
    Conv2D head_;
    int n_class_;
};

// Minimal stand-in classifier for composition experiments: two strided convs
// with BN+PReLU, global average pooling, and a 1×1 convolution head.
class ToyClassifier : public ClassifierModule {
  public:
    ToyClassifier(const std::string& name, const std::vector<ConvSpec>& specs, int n_class,
                  int in_channels, std::uint64_t seed);

    Var forward_logits(const Var& x, bool train) override;
    void collect(std::vector<Parameter*>& out) override;
    void collect_norms(std::vector<BatchNorm*>& out) override;
    int n_class() const override { return n_class_; }

  private:
    std::vector<Conv2D> convs_;
    std::vector<BatchNorm> bns_;
    std::vector<PReLULayer> acts_;
    Conv2D head_;
    int n_class_;
};

// Remnant blocks composed with a classifier, trained end to end. An empty
// block list degenerates to the bare classifier.
struct Model {
    ModelConfig config;
    std::vector<RemnantBlock> blocks;
    std::unique_ptr<ClassifierModule> classifier;
    std::uint64_t seed = 0;

    Var forward_logits(const Var& x, bool train);
    // Inference helper: probabilities with no gradient bookkeeping.
    Tensor forward_probs(const Tensor& x);

    std::vector<Parameter*> parameters();
    std::vector<BatchNorm*> batch_norms();
    long parameter_count();
    // Drop references to the last forward pass's graph.
    void release_graphs();
};

Model build_model(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace remnet
