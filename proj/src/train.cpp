#include "remnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "remnet/checkpoint.hpp"
#include "remnet/image.hpp"
#include "remnet/optim.hpp"

namespace remnet {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValueError("batch_size must be >= 1");
    if (!(lr_init > 0.0f)) throw ValueError("lr_init must be > 0");
    if (!(lr_decay > 0.0f && lr_decay < 1.0f)) throw ValueError("lr_decay must lie in (0,1)");
    if (plateau_patience < 1) throw ValueError("plateau_patience must be >= 1");
    if (!(lr_floor > 0.0f)) throw ValueError("lr_floor must be > 0");
    if (max_epochs < 1) throw ValueError("max_epochs must be >= 1");
    if (min_delta < 0.0f) throw ValueError("min_delta must be >= 0");
}

bool PlateauScheduler::observe(double val_loss) {
    improved_last = val_loss < best - min_delta;
    if (improved_last) {
        best = val_loss;
        streak = 0;
    } else {
        ++streak;
        if (streak >= patience) {
            lr *= factor;
            ++halvings;
            streak = 0;
        }
    }
    return lr >= floor;
}

LabeledClusters load_cluster_corpus(const Manifest& m, int clusters_per_image, int stride,
                                    int n_class) {
    if (clusters_per_image < 1) throw ValueError("clusters_per_image must be >= 1");
    if (n_class < 2) throw ValueError("n_class must be >= 2");
    LabeledClusters out;
    out.n_class = n_class;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        const ImageRecord& rec = m.records[i];
        if (rec.model_label < 0 || rec.model_label >= n_class) {
            throw ValueError("manifest label " + std::to_string(rec.model_label) +
                             " out of range for n_class=" + std::to_string(n_class));
        }
        ImageU8 img = read_ppm(rec.path);
        std::vector<ClusterRecord> clusters = extract_top_clusters(img, clusters_per_image, stride);
        for (ClusterRecord& c : clusters) {
            c.source_index = static_cast<int>(i);
            c.label = rec.model_label;
            out.clusters.push_back(std::move(c));
        }
    }
    if (out.clusters.empty()) throw ValueError("cluster corpus is empty");
    return out;
}

namespace {

// Stacks one randomly positioned patch per listed cluster into [B,64,64,3].
Tensor stack_random_patches(const LabeledClusters& data, const std::vector<int>& indices,
                            std::size_t begin, std::size_t end, std::uint64_t seed, int epoch,
                            std::vector<int>* labels) {
    const int b = static_cast<int>(end - begin);
    const int p = 64;
    Tensor batch({b, p, p, 3});
    labels->clear();
    for (std::size_t k = begin; k < end; ++k) {
        const int ci = indices[k];
        const ClusterRecord& c = data.clusters[static_cast<std::size_t>(ci)];
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(ci)}));
        Tensor patch = random_patch_crop(c.to_float(), rng, p);
        std::copy(patch.data.begin(), patch.data.end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>((k - begin) * patch.data.size()));
        labels->push_back(c.label);
    }
    return batch;
}

Tensor stack_center_patches(const LabeledClusters& data, std::size_t begin, std::size_t end,
                            std::vector<int>* labels) {
    const int b = static_cast<int>(end - begin);
    const int p = 64;
    Tensor batch({b, p, p, 3});
    labels->clear();
    for (std::size_t k = begin; k < end; ++k) {
        const ClusterRecord& c = data.clusters[k];
        Tensor patch = center_crop(c.to_float(), p);
        std::copy(patch.data.begin(), patch.data.end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>((k - begin) * patch.data.size()));
        labels->push_back(c.label);
    }
    return batch;
}

double validation_loss(Model& model, const LabeledClusters& val, int batch_size) {
    double total = 0.0;
    std::size_t count = 0;
    std::vector<int> labels;
    for (std::size_t begin = 0; begin < val.clusters.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(val.clusters.size(), begin + static_cast<std::size_t>(batch_size));
        Tensor batch = stack_center_patches(val, begin, end, &labels);
        Var x = Var::leaf(batch, false);
        Var logits = model.forward_logits(x, /*train=*/false);
        SoftmaxLoss sl = softmax_cross_entropy(logits, labels);
        total += static_cast<double>(sl.loss.value().data[0]) * static_cast<double>(end - begin);
        count += end - begin;
        model.release_graphs();
    }
    return total / static_cast<double>(count);
}

void dump_abort_state(const std::string& out_dir, Model& model, int epoch, std::size_t batch_index,
                      double lr, const std::vector<double>& recent_losses) {
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/abort_state.txt";
    std::ofstream f(path);
    f << "non-finite training loss\n";
    f << "epoch=" << epoch << " batch=" << batch_index << " lr=" << lr << "\n";
    f << "recent_batch_losses:";
    for (double v : recent_losses) f << ' ' << v;
    f << "\nparameter_l2_norms:\n";
    for (Parameter* p : model.parameters()) {
        double s = 0.0;
        for (float v : p->tensor.data) s += static_cast<double>(v) * static_cast<double>(v);
        f << "  " << p->name << " " << std::sqrt(s) << "\n";
    }
}

}  // namespace

TrainResult train_model(Model& model, const LabeledClusters& train, const LabeledClusters& val,
                        const TrainConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    if (train.clusters.empty()) throw ValueError("training cluster set is empty");
    if (val.clusters.empty()) throw ValueError("validation cluster set is empty");
    if (train.n_class != model.config.n_class) {
        throw ValueError("training corpus n_class " + std::to_string(train.n_class) +
                         " does not match model n_class " + std::to_string(model.config.n_class));
    }
    if (out_dir.empty()) throw ValueError("output directory must be set");
    std::filesystem::create_directories(out_dir);

    std::vector<Parameter*> params = model.parameters();
    PlateauScheduler sched(cfg);
    TrainResult result;
    result.checkpoint_path = out_dir + "/best.ckpt";

    std::vector<int> order(train.clusters.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> labels;
    std::vector<double> recent_losses;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double lr = sched.lr;
        Rng shuffle_rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch), 0xF00Dull}));
        shuffle_inplace(order.begin(), order.end(), shuffle_rng);

        double train_total = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            Tensor batch = stack_random_patches(train, order, begin, end, cfg.seed, epoch, &labels);
            Var x = Var::leaf(batch, false);
            Var logits = model.forward_logits(x, /*train=*/true);
            SoftmaxLoss sl = softmax_cross_entropy(logits, labels);
            const double batch_loss = static_cast<double>(sl.loss.value().data[0]);
            recent_losses.push_back(batch_loss);
            if (recent_losses.size() > 8) recent_losses.erase(recent_losses.begin());
            if (!std::isfinite(batch_loss)) {
                dump_abort_state(out_dir, model, epoch, begin / static_cast<std::size_t>(cfg.batch_size),
                                 lr, recent_losses);
                throw ValueError("training aborted: non-finite loss (state written to " + out_dir +
                                 "/abort_state.txt)");
            }
            sl.loss.backward();
            try {
                adam_step_from_graph(params, static_cast<float>(lr));
            } catch (const ValueError&) {
                dump_abort_state(out_dir, model, epoch, begin / static_cast<std::size_t>(cfg.batch_size),
                                 lr, recent_losses);
                throw;
            }
            model.release_graphs();
            train_total += batch_loss * static_cast<double>(end - begin);
            seen += end - begin;
        }
        const double train_loss = train_total / static_cast<double>(seen);
        const double val_loss = validation_loss(model, val, cfg.batch_size);
        if (!std::isfinite(val_loss)) {
            dump_abort_state(out_dir, model, epoch, 0, lr, recent_losses);
            throw ValueError("training aborted: non-finite validation loss (state written to " +
                             out_dir + "/abort_state.txt)");
        }
        result.history.push_back({epoch, lr, train_loss, val_loss});

        const bool keep_going = sched.observe(val_loss);
        if (sched.improved_last) {
            result.best_epoch = epoch;
            result.best_val_loss = val_loss;
            save_checkpoint(result.checkpoint_path, model, epoch, val_loss);
        }
        if (!keep_going) break;
    }
    write_history_csv(out_dir + "/history.csv", result.history);
    return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open history file for writing: " + path);
    f << "epoch,lr,train_loss,val_loss\n";
    char buf[160];
    for (const EpochRecord& r : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", r.epoch, r.lr, r.train_loss,
                      r.val_loss);
        f << buf;
    }
    if (!f) throw IoError("failed writing history file: " + path);
}

}  // namespace remnet
