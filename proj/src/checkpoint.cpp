#include "remnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace remnet {

namespace {

constexpr char kMagic[4] = {'R', 'N', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_i32(std::ostream& os, std::int32_t v) { put_u32(os, static_cast<std::uint32_t>(v)); }

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

void put_f32_array(std::ostream& os, const float* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, p + i, 4);
        put_u32(os, bits);
    }
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::int32_t get_i32(std::istream& is) { return static_cast<std::int32_t>(get_u32(is)); }

double get_f64(std::istream& is) {
    std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void get_f32_array(std::istream& is, float* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = get_u32(is);
        std::memcpy(p + i, &bits, 4);
    }
}

std::string get_string(std::istream& is) {
    const std::uint32_t len = get_u32(is);
    if (len > (1u << 26)) throw IoError("checkpoint: implausible string length");
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw IoError("checkpoint: truncated file");
    return s;
}

void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string bn_prefix(const BatchNorm& bn) {
    const std::string& g = bn.gamma.name;  // always "<prefix>.gamma"
    return g.substr(0, g.size() - 6);
}

struct Entry {
    std::string name;
    Shape shape;
    std::vector<float> data;
};

std::vector<Entry> collect_entries(Model& model) {
    std::vector<Entry> entries;
    for (const Parameter* p : model.parameters())
        entries.push_back({p->name, p->tensor.shape, p->tensor.data});
    for (const BatchNorm* bn : model.batch_norms()) {
        const std::string prefix = bn_prefix(*bn);
        entries.push_back({prefix + ".running_mean", bn->running_mean.shape,
                           bn->running_mean.data});
        entries.push_back({prefix + ".running_var", bn->running_var.shape, bn->running_var.data});
        entries.push_back({prefix + ".stat_count", {1}, {static_cast<float>(bn->stat_count)}});
    }
    return entries;
}

CheckpointMeta read_header(std::istream& is, const std::string& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("checkpoint: '" + path + "' is not a checkpoint file");
    CheckpointMeta meta;
    meta.version = static_cast<int>(get_u32(is));
    if (meta.version != static_cast<int>(kVersion))
        throw IoError("checkpoint: unsupported format version " + std::to_string(meta.version));
    meta.param_count = static_cast<long>(get_u64(is));
    meta.epoch = get_i32(is);
    meta.val_loss = get_f64(is);
    meta.descriptor = get_string(is);
    return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model, int epoch, double val_loss) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u64(os, static_cast<std::uint64_t>(model.parameter_count()));
    put_i32(os, epoch);
    put_f64(os, val_loss);
    put_string(os, model.config.to_json());

    const std::vector<Entry> entries = collect_entries(model);
    put_u32(os, static_cast<std::uint32_t>(entries.size()));
    for (const Entry& e : entries) {
        put_string(os, e.name);
        put_u32(os, static_cast<std::uint32_t>(e.shape.size()));
        for (int d : e.shape) put_i32(os, d);
        put_f32_array(os, e.data.data(), e.data.size());
    }
    if (!os) throw IoError("checkpoint: write to '" + path + "' failed");
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
    return read_header(is, path);
}

CheckpointMeta load_checkpoint_into(const std::string& path, Model& model) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
    CheckpointMeta meta = read_header(is, path);

    std::map<std::string, Tensor*> slots;
    for (Parameter* p : model.parameters()) slots[p->name] = &p->tensor;
    std::map<std::string, BatchNorm*> norms;
    for (BatchNorm* bn : model.batch_norms()) {
        const std::string prefix = bn_prefix(*bn);
        slots[prefix + ".running_mean"] = &bn->running_mean;
        slots[prefix + ".running_var"] = &bn->running_var;
        norms[prefix + ".stat_count"] = bn;
    }

    std::size_t filled = 0;
    const std::uint32_t n_entries = get_u32(is);
    for (std::uint32_t i = 0; i < n_entries; ++i) {
        const std::string name = get_string(is);
        const std::uint32_t rank = get_u32(is);
        if (rank > 8) throw IoError("checkpoint: implausible tensor rank");
        Shape shape(rank);
        for (auto& d : shape) d = get_i32(is);
        const std::size_t numel = shape_numel(shape);
        std::vector<float> values(numel);
        get_f32_array(is, values.data(), numel);

        if (auto it = norms.find(name); it != norms.end()) {
            if (numel != 1) throw IoError("checkpoint: malformed entry '" + name + "'");
            it->second->stat_count = static_cast<long>(values[0]);
            ++filled;
            continue;
        }
        auto it = slots.find(name);
        if (it == slots.end())
            throw ValueError("checkpoint: entry '" + name + "' has no matching tensor in model");
        if (it->second->shape != shape)
            throw ShapeError("checkpoint: entry '" + name + "' has shape " + shape_str(shape) +
                             " but model expects " + shape_str(it->second->shape));
        it->second->data = std::move(values);
        ++filled;
    }
    if (filled != slots.size() + norms.size())
        throw ValueError("checkpoint: file fills " + std::to_string(filled) + " of " +
                         std::to_string(slots.size() + norms.size()) + " model tensors");
    return meta;
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    CheckpointMeta meta = read_checkpoint_meta(path);
    ModelConfig cfg = ModelConfig::from_json(meta.descriptor);
    LoadedCheckpoint lc{build_model(cfg, 0), {}};
    lc.meta = load_checkpoint_into(path, lc.model);
    return lc;
}

}  // namespace remnet
