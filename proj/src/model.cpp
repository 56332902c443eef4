#include "remnet/model.hpp"

#include <json.hpp>

namespace remnet {

namespace {

nlohmann::json specs_to_json(const std::vector<ConvSpec>& specs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : specs) a.push_back({s.filters, s.kernel, s.stride});
    return a;
}

std::vector<ConvSpec> specs_from_json(const nlohmann::json& a) {
    std::vector<ConvSpec> out;
    for (const auto& e : a) {
        if (!e.is_array() || e.size() != 3)
            throw ValueError("model config: each conv spec must be [filters, kernel, stride]");
        out.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>()});
    }
    return out;
}

}  // namespace

void ModelConfig::validate() const {
    if (n_class < 2) throw ValueError("model config: n_class must be at least 2");
    if (in_channels < 1) throw ValueError("model config: in_channels must be positive");
    for (int f : remnant_filters)
        if (f < 1) throw ValueError("model config: remnant filter counts must be positive");
    if (classifier != "strided-conv" && classifier != "toy")
        throw ValueError("model config: unknown classifier kind '" + classifier + "'");
    const auto& specs = classifier == "toy" ? toy_specs : classifier_specs;
    if (specs.empty()) throw ValueError("model config: classifier needs at least one conv stage");
    for (const auto& s : specs)
        if (s.filters < 1 || s.kernel < 1 || s.stride < 1)
            throw ValueError("model config: conv specs must be positive");
    if (classifier == "strided-conv") {
        for (std::size_t i = 1; i < classifier_specs.size(); ++i)
            if (classifier_specs[i].kernel >= classifier_specs[i - 1].kernel)
                throw ValueError("model config: classifier kernel sizes must strictly decrease");
        if (pool_window < 1) throw ValueError("model config: pool window must be positive");
    }
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["remnant_filters"] = remnant_filters;
    j["remnant_prelu"] = remnant_prelu;
    j["in_channels"] = in_channels;
    j["classifier"] = classifier;
    j["classifier_specs"] = specs_to_json(classifier_specs);
    j["pool_window"] = pool_window;
    j["toy_specs"] = specs_to_json(toy_specs);
    j["n_class"] = n_class;
    return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValueError(std::string("model config: invalid JSON: ") + e.what());
    }
    ModelConfig c;
    try {
        c.remnant_filters = j.at("remnant_filters").get<std::vector<int>>();
        c.remnant_prelu = j.value("remnant_prelu", false);
        c.in_channels = j.value("in_channels", 3);
        c.classifier = j.value("classifier", std::string("strided-conv"));
        if (j.contains("classifier_specs")) c.classifier_specs = specs_from_json(j["classifier_specs"]);
        c.pool_window = j.value("pool_window", 4);
        if (j.contains("toy_specs")) c.toy_specs = specs_from_json(j["toy_specs"]);
        c.n_class = j.at("n_class").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ValueError(std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

ModelConfig canonical_config(int n_class) {
    ModelConfig c;
    c.n_class = n_class;
    return c;
}

ModelConfig desk_config(int n_class, int remnant_blocks) {
    ModelConfig c;
    c.remnant_filters.assign(static_cast<std::size_t>(remnant_blocks), 8);
    c.classifier_specs = {{8, 7, 2}, {16, 5, 2}, {16, 3, 2}, {32, 2, 2}};
    c.n_class = n_class;
    return c;
}

RemnantBlock::RemnantBlock(const std::string& name, const RemnantBlockConfig& c, std::uint64_t seed)
    : cfg(c),
      bn_in(name + ".bn_in", c.in_channels),
      bn1(name + ".bn1", c.filters),
      bn2(name + ".bn2", c.filters),
      bn3(name + ".bn3", c.in_channels),
      conv1(name + ".conv1", c.kernel, c.in_channels, c.filters, 1,
            derive_seed(seed, name + ".conv1")),
      conv2(name + ".conv2", c.kernel, c.in_channels + c.filters, c.filters, 1,
            derive_seed(seed, name + ".conv2")),
      conv3(name + ".conv3", c.kernel, c.in_channels + c.filters, c.in_channels, 1,
            derive_seed(seed, name + ".conv3")) {
    if (c.use_prelu) {
        act1 = PReLULayer(name + ".act1", c.filters);
        act2 = PReLULayer(name + ".act2", c.filters);
    }
}

Var RemnantBlock::forward(const Var& x, bool train) {
    const Shape& s = x.value().shape;
    if (s.size() != 4 || s[3] != cfg.in_channels)
        throw ShapeError("remnant block: expected rank-4 input with " +
                         std::to_string(cfg.in_channels) + " channels, got " + shape_str(s));
    Var xb = bn_in.forward(x, train);
    Var h1 = bn1.forward(conv1.forward(xb), train);
    if (cfg.use_prelu) h1 = act1.forward(h1);
    Var h2 = bn2.forward(conv2.forward(concat_channels(xb, h1)), train);
    if (cfg.use_prelu) h2 = act2.forward(h2);
    Var h3 = bn3.forward(conv3.forward(concat_channels(xb, h2)), train);
    return subtract(xb, h3);
}

void RemnantBlock::collect(std::vector<Parameter*>& out) {
    bn_in.collect(out);
    conv1.collect(out);
    bn1.collect(out);
    conv2.collect(out);
    bn2.collect(out);
    conv3.collect(out);
    bn3.collect(out);
    if (cfg.use_prelu) {
        act1.collect(out);
        act2.collect(out);
    }
}

void RemnantBlock::collect_norms(std::vector<BatchNorm*>& out) {
    out.push_back(&bn_in);
    out.push_back(&bn1);
    out.push_back(&bn2);
    out.push_back(&bn3);
}

ClassifierBlock::ClassifierBlock(const std::string& name, const std::vector<ConvSpec>& specs,
                                 int pool_window, int n_class, int in_channels, std::uint64_t seed)
    : pool_window_(pool_window), n_class_(n_class) {
    int ch = in_channels;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const std::string stage = name + ".conv" + std::to_string(i + 1);
        convs_.emplace_back(stage, specs[i].kernel, ch, specs[i].filters, specs[i].stride,
                            derive_seed(seed, stage));
        bns_.emplace_back(name + ".bn" + std::to_string(i + 1), specs[i].filters);
        acts_.emplace_back(name + ".act" + std::to_string(i + 1), specs[i].filters);
        ch = specs[i].filters;
    }
    head_ = Conv2D(name + ".head", 1, ch, n_class, 1, derive_seed(seed, name + ".head"));
}

Var ClassifierBlock::forward_logits(const Var& x, bool train) {
    Var h = x;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        h = convs_[i].forward(h);
        h = bns_[i].forward(h, train);
        h = acts_[i].forward(h);
    }
    h = avg_pool(h, pool_window_);
    const Shape& s = h.value().shape;
    if (s[1] != 1 || s[2] != 1)
        throw ShapeError("classifier: input spatial extent leaves " + shape_str(s) +
                         " after pooling; expected 1x1 feature map");
    h = head_.forward(h);
    return reshape(h, {s[0], n_class_});
}

void ClassifierBlock::collect(std::vector<Parameter*>& out) {
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        convs_[i].collect(out);
        bns_[i].collect(out);
        acts_[i].collect(out);
    }
    head_.collect(out);
}

void ClassifierBlock::collect_norms(std::vector<BatchNorm*>& out) {
    for (auto& bn : bns_) out.push_back(&bn);
}

ToyClassifier::ToyClassifier(const std::string& name, const std::vector<ConvSpec>& specs,
                             int n_class, int in_channels, std::uint64_t seed)
    : n_class_(n_class) {
    int ch = in_channels;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const std::string stage = name + ".conv" + std::to_string(i + 1);
        convs_.emplace_back(stage, specs[i].kernel, ch, specs[i].filters, specs[i].stride,
                            derive_seed(seed, stage));
        bns_.emplace_back(name + ".bn" + std::to_string(i + 1), specs[i].filters);
        acts_.emplace_back(name + ".act" + std::to_string(i + 1), specs[i].filters);
        ch = specs[i].filters;
    }
    head_ = Conv2D(name + ".head", 1, ch, n_class, 1, derive_seed(seed, name + ".head"));
}

Var ToyClassifier::forward_logits(const Var& x, bool train) {
    Var h = x;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        h = convs_[i].forward(h);
        h = bns_[i].forward(h, train);
        h = acts_[i].forward(h);
    }
    const Shape& s = h.value().shape;
    if (s[1] != s[2])
        throw ShapeError("toy classifier: non-square feature map " + shape_str(s));
    h = avg_pool(h, s[1]);  // global average pool
    h = head_.forward(h);
    return reshape(h, {s[0], n_class_});
}

void ToyClassifier::collect(std::vector<Parameter*>& out) {
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        convs_[i].collect(out);
        bns_[i].collect(out);
        acts_[i].collect(out);
    }
    head_.collect(out);
}

void ToyClassifier::collect_norms(std::vector<BatchNorm*>& out) {
    for (auto& bn : bns_) out.push_back(&bn);
}

Var Model::forward_logits(const Var& x, bool train) {
    Var h = x;
    for (auto& b : blocks) h = b.forward(h, train);
    return classifier->forward_logits(h, train);
}

Tensor Model::forward_probs(const Tensor& x) {
    Var in = Var::leaf(x, false);
    Var logits = forward_logits(in, false);
    return softmax_rows(logits.value());
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    for (auto& b : blocks) b.collect(out);
    classifier->collect(out);
    return out;
}

std::vector<BatchNorm*> Model::batch_norms() {
    std::vector<BatchNorm*> out;
    for (auto& b : blocks) b.collect_norms(out);
    classifier->collect_norms(out);
    return out;
}

long Model::parameter_count() {
    long n = 0;
    for (const Parameter* p : parameters()) n += static_cast<long>(p->tensor.numel());
    return n;
}

void Model::release_graphs() {
    for (Parameter* p : parameters()) p->release_graph();
}

Model build_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Model m;
    m.config = cfg;
    m.seed = seed;
    for (std::size_t i = 0; i < cfg.remnant_filters.size(); ++i) {
        RemnantBlockConfig bc;
        bc.filters = cfg.remnant_filters[i];
        bc.in_channels = cfg.in_channels;
        bc.use_prelu = cfg.remnant_prelu;
        m.blocks.emplace_back("remnant." + std::to_string(i), bc, seed);
    }
    if (cfg.classifier == "toy") {
        m.classifier = std::make_unique<ToyClassifier>("toy", cfg.toy_specs, cfg.n_class,
                                                       cfg.in_channels, seed);
    } else {
        m.classifier = std::make_unique<ClassifierBlock>("classifier", cfg.classifier_specs,
                                                         cfg.pool_window, cfg.n_class,
                                                         cfg.in_channels, seed);
    }
    return m;
}

}  // namespace remnet
